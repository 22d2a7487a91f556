//! Subcommand bodies. Each returns the JSON document it produced.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use hdx_core::analysis::{brute_mu, d_coloc, decode_curve, decode_rate, expansion, AnalysisError, DistMode, ExpMode, FlipDecoder, Measured};
use hdx_core::css::{build_css, io::MatrixFormat, io::render};
use hdx_core::local::{search_robust_tuple, TupleSearchParams};
use hdx_core::report::{Report, Status};

use crate::bundle::{write_file, Bundle};
use crate::manifest::{Instance, Manifest};
use crate::suites::{self, Suite};
use crate::CliError;

pub const REPORT_SCHEMA: u32 = 1;

/// Serialized with a trailing newline; writes to `out` or stdout.
pub fn emit(doc: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(doc).expect("plain data");
    s.push('\n');
    match out {
        Some(p) => write_file(p, s),
        None => {
            print!("{s}");
            Ok(())
        }
    }
}

fn summary(rep: &Report) -> Value {
    let count = |s: Status| rep.entries.iter().filter(|e| e.status == s).count();
    json!({"total": rep.entries.len(), "pass": count(Status::Pass), "fail": count(Status::Fail), "skipped": count(Status::Skipped)})
}

pub fn report_doc(hash: &str, suite: &str, seed: u64, rep: &Report) -> Value {
    json!({
        "schema": REPORT_SCHEMA,
        "manifest_hash": hash,
        "suite": suite,
        "seed": seed,
        "summary": summary(rep),
        "entries": rep.entries,
    })
}

fn failed(rep: &Report) -> Result<(), CliError> {
    let ids: Vec<&str> = rep.failures().map(|e| e.check_id.as_str()).collect();
    if ids.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(ids.join(", ")))
    }
}

/// Builds the instance, checks counts and chain conditions, and writes the bundle.
pub fn build(manifest: &Path, out: &Path) -> Result<Value, CliError> {
    let m = Manifest::load(manifest)?;
    let seed = m.seed;
    let inst = Instance::build(m)?;
    let mut rep = inst.sheaf.geometry().count_check();
    rep.extend(inst.sheaf.verify_chain(seed));
    let doc = report_doc(&inst.hash, "build", seed, &rep);
    let mut text = serde_json::to_string_pretty(&doc).expect("plain data");
    text.push('\n');
    Bundle::write(out, &inst, &text)?;
    failed(&rep)?;
    Ok(doc)
}

pub fn verify(bundle: &Path, suite: Suite, seed: Option<u64>, out: Option<&Path>) -> Result<Value, CliError> {
    let b = Bundle::open(bundle)?;
    let seed = seed.unwrap_or(b.instance.manifest.seed);
    let rep = suites::run(&b, suite, seed);
    let name = serde_json::to_value(suite).expect("plain enum");
    let doc = report_doc(&b.instance.hash, name.as_str().unwrap_or("all"), seed, &rep);
    emit(&doc, out)?;
    failed(&rep)?;
    Ok(doc)
}

pub struct SearchArgs {
    pub t: usize,
    pub n: usize,
    pub q: usize,
    pub m: Vec<usize>,
    pub exhaust: bool,
    pub trials: usize,
    pub budget: usize,
    pub seed: u64,
}

pub fn degree_of(q: usize) -> Result<u32, CliError> {
    if q < 2 || !q.is_power_of_two() || q > 1 << 16 {
        return Err(CliError::Usage(format!("q = {q} is not 2^e with 1 ≤ e ≤ 16")));
    }
    Ok(q.trailing_zeros())
}

pub fn search(a: &SearchArgs, out: Option<&Path>) -> Result<Value, CliError> {
    let ms = match a.m.len() {
        0 => vec![1; a.t],
        1 => vec![a.m[0]; a.t],
        _ => a.m.clone(),
    };
    let p = TupleSearchParams { t: a.t, n: a.n, ms, e: degree_of(a.q)?, trials: a.trials, budget: a.budget, seed: a.seed, exhaust: a.exhaust };
    let res = search_robust_tuple(&p).map_err(|e| CliError::Usage(e.to_string()))?;
    let partial = res.scores.iter().any(|s| s.partial);
    let doc = json!({
        "params": p,
        "exhaustive": res.exhaustive,
        "evaluated": res.evaluated,
        "census": res.census,
        "best": res.best,
        "best_kappa": res.best_kappa,
        "partial": partial,
    });
    emit(&doc, out)?;
    if partial {
        return Err(CliError::Budget("some κ cells are bounds only".into()));
    }
    Ok(doc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Syst,
    Cosyst,
    Coloc,
    Cyc,
    Cocyc,
}

pub fn distance(bundle: &Path, level: usize, mode: Quantity, budget: Option<usize>, out: Option<&Path>) -> Result<Value, CliError> {
    let b = Bundle::open(bundle)?;
    let sc = &b.instance.sheaf;
    let budget = budget.unwrap_or(b.instance.manifest.budgets.distance);
    let res = match mode {
        Quantity::Syst => brute_mu(sc, level, DistMode::Syst, budget),
        Quantity::Cosyst => brute_mu(sc, level, DistMode::Cosyst, budget),
        Quantity::Coloc => d_coloc(sc, level, budget),
        Quantity::Cyc => expansion(sc, level, ExpMode::Cyc, budget),
        Quantity::Cocyc => expansion(sc, level, ExpMode::Cocyc, budget),
    };
    let res: Measured = match res {
        Ok(r) => r,
        Err(e) => {
            let doc = json!({"manifest_hash": b.instance.hash, "level": level, "mode": mode, "budget": budget, "exact": false, "error": e.to_string()});
            emit(&doc, out)?;
            return Err(match e {
                AnalysisError::Search(_) => CliError::Budget(e.to_string()),
                e => CliError::Usage(e.to_string()),
            });
        }
    };
    let doc = json!({
        "manifest_hash": b.instance.hash,
        "level": level,
        "mode": mode,
        "budget": budget,
        "exact": res.is_exact(),
        "result": res,
    });
    emit(&doc, out)?;
    if !res.is_exact() {
        return Err(CliError::Budget(format!("only bounds [{}, {}] within budget {budget}", res.lower, res.upper)));
    }
    Ok(doc)
}

pub struct DecodeArgs {
    pub level: usize,
    pub p: Option<f64>,
    pub weights: Vec<usize>,
    pub shots: usize,
    pub seed: u64,
    pub syndrome_noise: f64,
}

pub fn decode_sim(bundle: &Path, a: &DecodeArgs, out: Option<&Path>) -> Result<Value, CliError> {
    let b = Bundle::open(bundle)?;
    let sc = &b.instance.sheaf;
    let dec = FlipDecoder::new(sc, a.level).map_err(|e| CliError::Usage(e.to_string()))?;
    let bad = |e: AnalysisError| CliError::Usage(e.to_string());
    let rate = match a.p {
        Some(p) => Some(decode_rate(&dec, p, a.shots, a.seed, a.syndrome_noise).map_err(bad)?),
        None => None,
    };
    let curve = if a.weights.is_empty() { None } else { Some(decode_curve(&dec, &a.weights, a.shots, a.seed, a.syndrome_noise).map_err(bad)?) };
    let doc = json!({
        "manifest_hash": b.instance.hash,
        "level": a.level,
        "seed": a.seed,
        "shots": a.shots,
        "syndrome_noise": a.syndrome_noise,
        "rate": rate,
        "curve": curve,
    });
    emit(&doc, out)?;
    Ok(doc)
}

fn extension(f: MatrixFormat) -> &'static str {
    match f {
        MatrixFormat::Alist => "alist",
        MatrixFormat::Mtx => "mtx",
        MatrixFormat::Json => "json",
    }
}

/// Writes hx.<ext> and hz.<ext> into `out`.
pub fn export(bundle: &Path, level: usize, format: MatrixFormat, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let b = Bundle::open(bundle)?;
    let code = build_css(&b.instance.sheaf, level).map_err(|e| CliError::Usage(e.to_string()))?.with_manifest_hash(&b.instance.hash);
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut written = Vec::new();
    for (name, m) in [("hx", &code.hx), ("hz", &code.hz)] {
        let p = out.join(format!("{name}.{}", extension(format)));
        write_file(&p, render(m, format))?;
        written.push(p);
    }
    Ok(written)
}
