//! Verification suites run by `hdx verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use hdx_core::analysis::{
    brute_mu, decode_curve, delta_k_apply, delta_k_solve, distance_ledger, dual_check, local_views, partial_l, random_view,
    ClassTester, CycleFiller, DistMode, FillOutcome, FlipDecoder,
};
use hdx_core::css::css_ledger;
use hdx_core::ff2e::{kernel_basis_dense, Gf};
use hdx_core::geometry::subsets_of;
use hdx_core::local::{exactness_check, loc_glob_check, tensor_kernel_check, two_way_robustness, LocalComplex};
use hdx_core::report::Report;
use hdx_core::sheaf::SheafComplex;
use hdx_core::walks::walk_ledger;

use crate::bundle::Bundle;
use crate::manifest::Budgets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Chain,
    Local,
    Walks,
    Distance,
    Double,
    Css,
    All,
}

impl Suite {
    pub fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Chain, Suite::Local, Suite::Walks, Suite::Distance, Suite::Double, Suite::Css],
            s => vec![s],
        }
    }
}

fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(tag);
    r
}

/// Geometry counts, chain identities, and the stored matrices against the rebuilt ones.
pub fn chain(b: &Bundle, seed: u64) -> Report {
    let sc = &b.instance.sheaf;
    let mut rep = sc.geometry().count_check();
    rep.extend(sc.verify_chain(seed));
    let f = sc.field();
    rep.check(
        "bundle.field_degree",
        "stored matrices use the manifest field",
        b.stored_degree == f.degree() && b.stored.len() == sc.t(),
        json!({"stored": b.stored_degree, "levels": b.stored.len()}),
    );
    if b.stored_degree != f.degree() || b.stored.len() != sc.t() {
        return rep;
    }
    for i in 1..=sc.t() {
        let stored = &b.stored[i - 1];
        let rebuilt = sc.partial(i).expect("level in range");
        let first_diff = if stored.rows() != rebuilt.rows() || stored.cols() != rebuilt.cols() {
            Some(json!({"shape": [stored.rows(), stored.cols()]}))
        } else {
            stored.add(rebuilt).triplets().next().map(|(r, c, _)| json!([r, c]))
        };
        rep.check(
            format!("bundle.matrix.{i}"),
            "stored boundary equals the rebuilt boundary",
            first_diff.is_none(),
            json!({"level": i, "witness": first_diff}),
        );
    }
    for i in 1..sc.t() {
        let (a, c) = (&b.stored[i - 1], &b.stored[i]);
        if a.cols() != c.rows() {
            rep.check(format!("bundle.partial_squared.{i}"), "stored boundary squares to zero", false, json!({"level": i, "shape": "mismatch"}));
            continue;
        }
        let prod = a.mul(f, c);
        rep.check(
            format!("bundle.partial_squared.{i}"),
            "stored boundary squares to zero",
            prod.is_zero(),
            json!({"level": i, "nonzeros": prod.nnz(), "witness": prod.triplets().next().map(|(r, c, v)| json!([r, c, v]))}),
        );
    }
    rep
}

/// Local product complexes for every direction set, the local-global correspondence on
/// sampled faces, and two-way robustness.
pub fn local(sc: &SheafComplex, budgets: &Budgets, seed: u64) -> Report {
    let mut rep = Report::new();
    let t = sc.t();
    let codes = sc.codes();
    let all: Vec<usize> = (0..t).collect();
    for size in 1..=t {
        for mask in subsets_of(&all, size) {
            let dirs: Vec<usize> = (0..t).filter(|&j| mask >> j & 1 == 1).collect();
            match LocalComplex::new(&dirs, codes) {
                Ok(l) => {
                    rep.extend(l.verify());
                    rep.extend(exactness_check(&l));
                    rep.extend(tensor_kernel_check(&l));
                }
                Err(e) => {
                    rep.check(format!("local.build.{dirs:?}"), "local product complex builds", false, json!({"error": e.to_string()}));
                }
            }
        }
    }
    let geom = sc.geometry();
    let mut rng = stream(seed, 0x6c67);
    let samples = 50;
    let mut bad = Vec::new();
    for _ in 0..samples {
        let k = rng.gen_range(0..t);
        let f = geom.face_at(k, rng.gen_range(0..geom.level_size(k)));
        if !loc_glob_check(sc, &f).unwrap_or(false) {
            bad.push(json!({"level": k, "g": f.g}));
        }
    }
    rep.check("local.loc_glob", "link complex matches the local product complex", bad.is_empty(), json!({"samples": samples, "bad": bad}));
    match two_way_robustness(codes, budgets.local) {
        Ok(r) => {
            rep.check(
                "local.two_way",
                "two-way robustness table",
                true,
                json!({"kappa_lower": r.kappa_lower, "kappa_upper": r.kappa_upper, "partial": r.partial, "cells": r.cells.len()}),
            );
        }
        Err(e) => rep.skip("local.two_way", "two-way robustness table", json!({"error": e.to_string()})),
    }
    rep
}

pub fn walks(sc: &SheafComplex, budgets: &Budgets, seed: u64) -> Report {
    match walk_ledger(sc.geometry(), budgets.walk_sets, seed) {
        Ok(r) => r,
        Err(e) => {
            let mut rep = Report::new();
            rep.check("walks.ledger", "walk ledger runs", false, json!({"error": e.to_string()}));
            rep
        }
    }
}

pub fn distance(sc: &SheafComplex, budgets: &Budgets, seed: u64) -> Report {
    let mut rep = dual_check(sc, seed);
    rep.extend(distance_ledger(sc, budgets.distance, seed).0);
    rep
}

fn random_chain(sc: &SheafComplex, k: usize, density: f64, rng: &mut ChaCha8Rng) -> Vec<Gf> {
    let f = sc.field();
    let blocks = sc.blocks(k);
    let mut x = vec![0; blocks.total()];
    for b in 0..blocks.count() {
        if rng.gen_bool(density) {
            for i in blocks.range(b) {
                x[i] = f.random(rng);
            }
        }
    }
    x
}

/// Local-view double complex identities and cycle filling.
pub fn double(sc: &SheafComplex, budgets: &Budgets, seed: u64) -> Report {
    let mut rep = Report::new();
    let t = sc.t();
    let f = sc.field();
    let mut rng = stream(seed, 0x6463);
    let (mut sq_bad, mut comm_bad, mut solve_bad, mut bound_bad, mut max_ratio) = (0, 0, 0, 0, 0f64);
    let trials = 100;
    for trial in 0..trials {
        let k = 1 + trial % t;
        let level = trial % k;
        let y = random_view(sc, level, k, 0.1, &mut rng);
        let dy = delta_k_apply(sc, &y).expect("shapes");
        if !delta_k_apply(sc, &dy).expect("shapes").is_zero() {
            sq_bad += 1;
        }
        let lhs = partial_l(sc, &dy).expect("k >= 1");
        let rhs = delta_k_apply(sc, &partial_l(sc, &y).expect("k >= 1")).expect("shapes");
        if lhs != rhs {
            comm_bad += 1;
        }
        match delta_k_solve(sc, &dy) {
            Ok((z, stats)) => {
                if delta_k_apply(sc, &z).expect("shapes") != dy {
                    solve_bad += 1;
                }
                if !stats.within_bound() {
                    bound_bad += 1;
                }
                if stats.y_weight > 0 {
                    max_ratio = max_ratio.max(stats.z_weight as f64 / stats.y_weight as f64);
                }
            }
            Err(_) => solve_bad += 1,
        }
    }
    rep.check("double.delta_squared", "local-view coboundary squares to zero", sq_bad == 0, json!({"trials": trials, "bad": sq_bad}));
    rep.check("double.commute", "local boundary commutes with local-view coboundary", comm_bad == 0, json!({"trials": trials, "bad": comm_bad}));
    rep.check("double.solve", "local-view coboundary is exact", solve_bad == 0, json!({"trials": trials, "bad": solve_bad}));
    rep.check(
        "double.solve_bound",
        "local-view preimage size bound",
        bound_bad == 0,
        json!({"trials": trials, "bad": bound_bad, "max_observed_ratio": max_ratio}),
    );
    let mut closed_bad = 0;
    for k in 0..=t {
        let x = random_chain(sc, k, 0.2, &mut rng);
        let v = local_views(sc, &x, k, 0).expect("level in range");
        if !delta_k_apply(sc, &v).expect("shapes").is_zero() {
            closed_bad += 1;
        }
    }
    rep.check("double.global_views", "views of a global chain are closed", closed_bad == 0, json!({"bad": closed_bad}));

    let filler = CycleFiller::new(sc);
    let (mut fill_bad, mut fill_obstructed) = (0, 0);
    for trial in 0..budgets.fill_trials {
        let k = trial % t;
        let z0 = random_chain(sc, k + 1, 0.05, &mut rng);
        let x = sc.partial(k + 1).expect("level").mul_vec(f, &z0);
        match filler.fill(&x, k) {
            Ok(FillOutcome::Filled { z, .. }) => {
                if sc.partial(k + 1).expect("level").mul_vec(f, &z) != x {
                    fill_bad += 1;
                }
            }
            Ok(FillOutcome::Obstruction { .. }) => fill_obstructed += 1,
            Err(_) => fill_bad += 1,
        }
    }
    rep.check(
        "double.fill_boundaries",
        "cycle filling succeeds on boundaries",
        fill_bad == 0 && fill_obstructed == 0,
        json!({"trials": budgets.fill_trials, "bad": fill_bad, "obstructed": fill_obstructed}),
    );
    for k in 0..=t {
        let ker = if k == 0 {
            None
        } else {
            Some(kernel_basis_dense(f, sc.partial(k).expect("level")))
        };
        let Ok(tester) = ClassTester::new(sc, k, DistMode::Syst) else { continue };
        let (mut agree, mut disagree, mut nontrivial) = (0, 0, 0);
        for _ in 0..20 {
            let x = match &ker {
                None => random_chain(sc, 0, 0.3, &mut rng),
                Some(basis) => {
                    let mut x = vec![0; sc.dim(k)];
                    for b in basis {
                        if rng.gen_bool(0.5) {
                            f.axpy(&mut x, f.random(&mut rng), b);
                        }
                    }
                    x
                }
            };
            let expect = tester.is_nontrivial_class(&x);
            nontrivial += expect as usize;
            match filler.fill(&x, k) {
                Ok(FillOutcome::Filled { .. }) if !expect => agree += 1,
                Ok(FillOutcome::Obstruction { .. }) if expect => agree += 1,
                _ => disagree += 1,
            }
        }
        rep.check(
            format!("double.obstruction.{k}"),
            "cycle filling obstructs exactly on nontrivial classes",
            disagree == 0,
            json!({"level": k, "agree": agree, "disagree": disagree, "nontrivial": nontrivial}),
        );
    }
    rep
}

/// Code extraction at every interior level and decoder regressions.
pub fn css(sc: &SheafComplex, budgets: &Budgets, seed: u64) -> Report {
    let mut rep = Report::new();
    let t = sc.t();
    for i in 1..t {
        match css_ledger(sc, i, budgets.distance) {
            Ok((r, _)) => rep.extend(r),
            Err(e) => {
                rep.check(format!("css.build.{i}"), "CSS code builds", false, json!({"error": e.to_string()}));
            }
        }
    }
    let f = sc.field();
    for k in 0..t {
        let dec = match FlipDecoder::new(sc, k) {
            Ok(d) => d,
            Err(e) => {
                rep.check(format!("decode.build.{k}"), "flip decoder builds", false, json!({"error": e.to_string()}));
                continue;
            }
        };
        let blocks = sc.blocks(k);
        let delta = sc.delta(k).expect("level");
        let mut rng = stream(seed, 0x6431 + k as u64);
        let (mut cleared, mut tried, mut max_iters) = (0, 0, 0);
        for b in 0..blocks.count() {
            let mut x = vec![0; blocks.total()];
            loop {
                for i in blocks.range(b) {
                    x[i] = f.random(&mut rng);
                }
                if x[blocks.range(b)].iter().any(|&v| v != 0) {
                    break;
                }
            }
            let z = delta.mul_vec(f, &x);
            let r = dec.decode(&z, blocks.count());
            tried += 1;
            if r.outcome == hdx_core::analysis::DecodeOutcome::Success && delta.mul_vec(f, &r.x_hat) == z {
                cleared += 1;
            }
            max_iters = max_iters.max(r.iterations);
        }
        rep.check(
            format!("decode.weight_one.{k}"),
            "flip decoder clears every single-face error",
            cleared == tried,
            json!({"level": k, "faces": tried, "cleared": cleared, "max_iterations": max_iters, "patches": dec.patch_count(), "full_patches": dec.full_count()}),
        );
        let d = brute_mu(sc, k, DistMode::Cosyst, budgets.distance).ok().and_then(|m| m.distance());
        let top = d.map_or(1, |d| (d as usize / 4).max(1)).min(blocks.count());
        let weights: Vec<usize> = (1..=top).collect();
        let a = decode_curve(&dec, &weights, budgets.decode_shots, seed, 0.0);
        let b = decode_curve(&dec, &weights, budgets.decode_shots, seed, 0.0);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let same = serde_json::to_string(&a).ok() == serde_json::to_string(&b).ok();
                rep.check(format!("decode.curve.{k}"), "decoder curve is reproducible", same, json!({"level": k, "distance": d, "curve": a}));
            }
            _ => {
                rep.check(format!("decode.curve.{k}"), "decoder curve is reproducible", false, json!({"level": k}));
            }
        }
    }
    rep
}

pub fn run(b: &Bundle, suite: Suite, seed: u64) -> Report {
    let sc = &b.instance.sheaf;
    let budgets = &b.instance.manifest.budgets;
    let mut rep = Report::new();
    for s in suite.parts() {
        let r = match s {
            Suite::Chain => chain(b, seed),
            Suite::Local => local(sc, budgets, seed),
            Suite::Walks => walks(sc, budgets, seed),
            Suite::Distance => distance(sc, budgets, seed),
            Suite::Double => double(sc, budgets, seed),
            Suite::Css => css(sc, budgets, seed),
            Suite::All => unreachable!(),
        };
        rep.extend(r);
    }
    rep
}
