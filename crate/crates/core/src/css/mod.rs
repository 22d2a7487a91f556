//! Binary CSS codes read off a sheaf complex, their parameters and soundness.

pub mod io;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

pub use io::{export, import, parse, render, MatrixFormat};

use crate::analysis::{brute_mu, expansion, AnalysisError, DistMode, ExpMode, MeasureMethod, Measured};
use crate::cosets::{column_basis, extend_basis, min_nontrivial, min_ratio_auto, Ratio, SearchError};
use crate::ff2e::{f2_expand, f2_expand_in_basis, kernel_basis_dense, rank, BinaryMatrix, Blocks, Field, Gf};
use crate::report::Report;
use crate::sheaf::{SheafComplex, SheafError};

#[derive(Debug, Error, PartialEq)]
pub enum CssError {
    #[error("level {i} outside 1..={max}")]
    LevelOutOfRange { i: usize, max: usize },
    #[error("H_X row {x} and H_Z row {z} overlap oddly")]
    NotOrthogonal { x: usize, z: usize },
    #[error("column counts differ: H_X has {x}, H_Z has {z}")]
    ShapeMismatch { x: usize, z: usize },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("io: {0}")]
    Io(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub manifest_hash: Option<String>,
    pub level: usize,
}

/// A pair of binary check matrices with H_X H_Zᵀ = 0.
#[derive(Clone, Debug)]
pub struct CssCode {
    pub hx: BinaryMatrix,
    pub hz: BinaryMatrix,
    pub provenance: Provenance,
    /// Structural bound on check weights, when the code came from a complex.
    pub row_weight_bound: Option<usize>,
}

impl CssCode {
    pub fn new(hx: BinaryMatrix, hz: BinaryMatrix, provenance: Provenance) -> Result<Self, CssError> {
        if hx.cols() != hz.cols() {
            return Err(CssError::ShapeMismatch { x: hx.cols(), z: hz.cols() });
        }
        if let Some((x, z)) = hx.mul(&hz.transpose()).entries().next() {
            return Err(CssError::NotOrthogonal { x, z });
        }
        Ok(CssCode { hx, hz, provenance, row_weight_bound: None })
    }

    pub fn qubits(&self) -> usize {
        self.hx.cols()
    }

    pub fn with_manifest_hash(mut self, hash: impl Into<String>) -> Self {
        self.provenance.manifest_hash = Some(hash.into());
        self
    }
}

fn check_css_level(sc: &SheafComplex, i: usize) -> Result<(), CssError> {
    if i == 0 || i >= sc.t() {
        return Err(CssError::LevelOutOfRange { i, max: sc.t().saturating_sub(1) });
    }
    Ok(())
}

fn weight_bound(sc: &SheafComplex) -> usize {
    let codes = sc.codes();
    let mmax = (0..sc.t()).map(|j| codes.m(j)).max().unwrap_or(0);
    sc.field().degree() as usize * 2 * sc.t() * codes.n() * mmax
}

/// H_X = ∂_i and H_Z = δ_i expanded over GF(2) in the self-dual basis.
pub fn build_css(sc: &SheafComplex, i: usize) -> Result<CssCode, CssError> {
    check_css_level(sc, i)?;
    let f = sc.field();
    let mut c = CssCode::new(f2_expand(sc.partial(i)?, f), f2_expand(sc.delta(i)?, f), Provenance { manifest_hash: None, level: i })?;
    c.row_weight_bound = Some(weight_bound(sc));
    Ok(c)
}

/// Test hook: expansion in an arbitrary basis. Fails with NotOrthogonal unless the basis
/// behaves like a self-dual one on the entries involved.
pub fn build_css_in_basis(sc: &SheafComplex, i: usize, basis: &[Gf]) -> Result<CssCode, CssError> {
    check_css_level(sc, i)?;
    let f = sc.field();
    let hx = f2_expand_in_basis(sc.partial(i)?, f, basis);
    let hz = f2_expand_in_basis(sc.delta(i)?, f, basis);
    CssCode::new(hx, hz, Provenance { manifest_hash: None, level: i })
}

#[derive(Clone, Debug, Serialize)]
pub struct CodeParams {
    pub n: usize,
    /// dim ker H_Z − dim im H_Xᵀ.
    pub k: usize,
    /// n − rank H_X − rank H_Z, from a separate rank routine.
    pub k_rank_identity: usize,
    pub rank_hx: usize,
    pub rank_hz: usize,
    /// Least weight of ker H_Z outside the row space of H_X.
    pub d_x: Measured,
    /// Least weight of ker H_X outside the row space of H_Z.
    pub d_z: Measured,
}

impl CodeParams {
    pub fn d_lower(&self) -> Ratio {
        self.d_x.lower.min(self.d_z.lower)
    }

    pub fn d_upper(&self) -> Ratio {
        self.d_x.upper.min(self.d_z.upper)
    }

    pub fn d_exact(&self) -> Option<u64> {
        let (lo, hi) = (self.d_lower(), self.d_upper());
        (lo == hi && !hi.is_infinite()).then(|| hi.num / hi.den)
    }
}

fn gf2() -> Field {
    Field::new(1).expect("GF(2)")
}

fn rows_of(m: &BinaryMatrix) -> Vec<Vec<Gf>> {
    (0..m.rows())
        .map(|r| {
            let mut v = vec![0; m.cols()];
            for c in m.row(r) {
                v[c] = 1;
            }
            v
        })
        .collect()
}

/// Greedy descent: add stabilizer rows while that lowers the weight.
fn reduce(x: &mut [Gf], stab: &[Vec<Gf>]) {
    let w = |v: &[Gf]| v.iter().filter(|&&b| b != 0).count();
    let mut cur = w(x);
    loop {
        let mut improved = false;
        for s in stab {
            let nw = x.iter().zip(s).filter(|(a, b)| *a ^ *b != 0).count();
            if nw < cur {
                for (a, b) in x.iter_mut().zip(s) {
                    *a ^= b;
                }
                cur = nw;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
}

/// min weight over span(stab ∪ logical) − span(stab). Exact under budget; otherwise the
/// lightest of a seeded sample of reduced logicals as an upper bound, with `floor` below.
fn logical_distance(stab_m: &BinaryMatrix, ker_of: &BinaryMatrix, budget: usize, floor: u64, seed: u64) -> Result<Measured, CssError> {
    let f = gf2();
    let n = ker_of.cols();
    let stab = column_basis(&f, &stab_m.transpose().to_field_matrix());
    let ker = kernel_basis_dense(&f, &ker_of.to_field_matrix());
    let logical = extend_basis(&f, &stab, &ker);
    if logical.is_empty() {
        return Ok(Measured { lower: Ratio::INFINITY, upper: Ratio::INFINITY, method: MeasureMethod::Trivial, witness: None, witness_weight: None });
    }
    let blocks = Blocks::uniform(n, 1);
    match min_nontrivial(&f, &stab, &logical, &blocks, budget) {
        Ok(Some((w, x))) => {
            let r = Ratio::new(w as u64, 1);
            return Ok(Measured { lower: r, upper: r, method: MeasureMethod::Exhaustive, witness: Some(x), witness_weight: Some(w) });
        }
        Ok(None) => unreachable!("logical basis is nonempty"),
        Err(SearchError::BudgetExceeded { .. }) => {}
    }
    let rows = rows_of(stab_m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, Vec<Gf>)> = None;
    let samples = logical.len() + 256;
    for s in 0..samples {
        let mut x = vec![0; n];
        if s < logical.len() {
            x.clone_from(&logical[s]);
        } else {
            loop {
                for l in &logical {
                    if rng.gen_bool(0.5) {
                        f.axpy(&mut x, 1, l);
                    }
                }
                if x.iter().any(|&b| b != 0) {
                    break;
                }
            }
        }
        reduce(&mut x, &rows);
        let w = x.iter().filter(|&&b| b != 0).count();
        if best.as_ref().map_or(true, |b| w < b.0) {
            best = Some((w, x));
        }
    }
    let (w, x) = best.expect("basis vectors are nontrivial");
    Ok(Measured {
        lower: Ratio::new(floor.min(w as u64).max(1), 1),
        upper: Ratio::new(w as u64, 1),
        method: MeasureMethod::WeightCapped,
        witness: Some(x),
        witness_weight: Some(w),
    })
}

/// Lower bounds on (d_X, d_Z) known from elsewhere, used when enumeration is out of budget.
#[derive(Clone, Copy, Debug, Default)]
pub struct DistanceFloor {
    pub x: u64,
    pub z: u64,
}

pub fn code_params(c: &CssCode, budget: usize) -> Result<CodeParams, CssError> {
    code_params_with_floor(c, budget, DistanceFloor { x: 1, z: 1 })
}

pub fn code_params_with_floor(c: &CssCode, budget: usize, floor: DistanceFloor) -> Result<CodeParams, CssError> {
    let f = gf2();
    let n = c.qubits();
    let ker_hz = kernel_basis_dense(&f, &c.hz.to_field_matrix()).len();
    let im_hxt = rank(&f, &c.hx.to_field_matrix());
    let (rank_hx, rank_hz) = (c.hx.rank(), c.hz.rank());
    Ok(CodeParams {
        n,
        k: ker_hz - im_hxt,
        k_rank_identity: n - rank_hx - rank_hz,
        rank_hx,
        rank_hz,
        d_x: logical_distance(&c.hx, &c.hz, budget, floor.x, 0x6478)?,
        d_z: logical_distance(&c.hz, &c.hx, budget, floor.z, 0x647a)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Soundness {
    pub rows: usize,
    pub cols: usize,
    /// min over x ∉ ker H of |Hx| / d(x, ker H).
    pub ratio_lower: Ratio,
    pub ratio_upper: Ratio,
    /// ρ = (n/m)·ratio.
    pub rho_lower: f64,
    pub rho_upper: f64,
    pub certified: bool,
    #[serde(skip)]
    pub witness: Option<Vec<Gf>>,
}

/// Soundness of the classical code ker H: the least ρ with (1/m)|Hx| ≥ ρ d(x, ker H)/n.
pub fn soundness_scan(h: &BinaryMatrix, budget: usize) -> Result<Soundness, CssError> {
    let f = gf2();
    let (m, n) = (h.rows(), h.cols());
    let res = min_ratio_auto(&f, &h.to_field_matrix(), &Blocks::uniform(n, 1), &Blocks::uniform(m, 1), budget)?;
    let scale = n as f64 / m.max(1) as f64;
    let (lower, upper, witness) = match res.best {
        None if res.complete => (Ratio::INFINITY, Ratio::INFINITY, None),
        None => (Ratio::new(1, n as u64), Ratio::INFINITY, None),
        Some(b) => {
            let v = Ratio::new(b.numer as u64, b.denom as u64);
            let lo = if res.complete { v } else { v.min(Ratio::new(1, n as u64)) };
            (lo, v, Some(b.x))
        }
    };
    Ok(Soundness {
        rows: m,
        cols: n,
        ratio_lower: lower,
        ratio_upper: upper,
        rho_lower: lower.value() * scale,
        rho_upper: upper.value() * scale,
        certified: res.complete,
        witness,
    })
}

/// Soundness of both check families; the code's ρ is the smaller of the two.
/// Out of budget, a side is reported uncertified with ratio in [0, ∞].
pub fn qltc_soundness(c: &CssCode, budget: usize) -> Result<(Soundness, Soundness), CssError> {
    let scan = |h: &BinaryMatrix| match soundness_scan(h, budget) {
        Err(CssError::Search(SearchError::BudgetExceeded { .. })) => Ok(Soundness {
            rows: h.rows(),
            cols: h.cols(),
            ratio_lower: Ratio::new(0, 1),
            ratio_upper: Ratio::INFINITY,
            rho_lower: 0.0,
            rho_upper: f64::INFINITY,
            certified: false,
            witness: None,
        }),
        r => r,
    };
    Ok((scan(&c.hx)?, scan(&c.hz)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightStats {
    pub rows: BTreeMap<usize, usize>,
    pub cols: BTreeMap<usize, usize>,
    pub max_row: usize,
    pub max_col: usize,
}

fn histogram(ws: Vec<usize>) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for w in ws {
        *h.entry(w).or_insert(0) += 1;
    }
    h
}

fn weight_stats(m: &BinaryMatrix) -> WeightStats {
    let (r, c) = (m.row_weights(), m.col_weights());
    WeightStats {
        max_row: r.iter().copied().max().unwrap_or(0),
        max_col: c.iter().copied().max().unwrap_or(0),
        rows: histogram(r),
        cols: histogram(c),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LdpcProfile {
    pub hx: WeightStats,
    pub hz: WeightStats,
    pub bound: Option<usize>,
    pub within_bound: bool,
}

pub fn ldpc_profile(c: &CssCode) -> LdpcProfile {
    let (hx, hz) = (weight_stats(&c.hx), weight_stats(&c.hz));
    let within_bound = c.row_weight_bound.map_or(true, |b| hx.max_row.max(hz.max_row) <= b);
    LdpcProfile { hx, hz, bound: c.row_weight_bound, within_bound }
}

/// Parameter bounds read off complex-level measurements.
#[derive(Clone, Debug, Serialize)]
pub struct ComplexBounds {
    pub level: usize,
    /// D_{i−1}, D_i, D_{i+1} over F_q.
    pub dims: [usize; 3],
    pub max_coeff: usize,
    pub mu_syst: Measured,
    pub mu_cosyst: Measured,
    pub eps_cyc: Measured,
    pub eps_cocyc: Measured,
    /// e·(D_i − D_{i−1} − D_{i+1}), may be negative.
    pub k_lower: i64,
    pub d_lower: Ratio,
    pub rho_lower: f64,
}

fn within_budget(r: Result<Measured, AnalysisError>, floor: u64) -> Result<Measured, CssError> {
    match r {
        Err(AnalysisError::Search(SearchError::BudgetExceeded { .. })) => Ok(Measured {
            lower: Ratio::new(floor, 1),
            upper: Ratio::INFINITY,
            method: MeasureMethod::WeightCapped,
            witness: None,
            witness_weight: None,
        }),
        r => Ok(r?),
    }
}

pub fn complex_bounds(sc: &SheafComplex, i: usize, budget: usize) -> Result<ComplexBounds, CssError> {
    check_css_level(sc, i)?;
    let e = sc.field().degree() as f64;
    let dims = [sc.dim(i - 1), sc.dim(i), sc.dim(i + 1)];
    let blocks = sc.blocks(i);
    let max_coeff = (0..blocks.count()).map(|b| blocks.size(b)).max().unwrap_or(0);
    // out of budget: distances are at least 1, expansion at least 0
    let mu_syst = within_budget(brute_mu(sc, i, DistMode::Syst, budget), 1)?;
    let mu_cosyst = within_budget(brute_mu(sc, i, DistMode::Cosyst, budget), 1)?;
    let eps_cyc = within_budget(expansion(sc, i, ExpMode::Cyc, budget), 0)?;
    let eps_cocyc = within_budget(expansion(sc, i, ExpMode::Cocyc, budget), 0)?;
    let m = max_coeff.max(1) as f64;
    let side = |d_other: usize, eps: &Measured| dims[1] as f64 / d_other.max(1) as f64 * eps.lower.value() / m;
    let rho_lower = side(dims[0], &eps_cyc).min(side(dims[2], &eps_cocyc)) / e;
    Ok(ComplexBounds {
        level: i,
        dims,
        max_coeff,
        k_lower: e as i64 * (dims[1] as i64 - dims[0] as i64 - dims[2] as i64),
        d_lower: mu_syst.lower.min(mu_cosyst.lower),
        rho_lower,
        mu_syst,
        mu_cosyst,
        eps_cyc,
        eps_cocyc,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CssSummary {
    pub level: usize,
    pub params: CodeParams,
    pub soundness_x: Soundness,
    pub soundness_z: Soundness,
    pub profile: LdpcProfile,
    pub bounds: ComplexBounds,
}

/// Builds the code at level i and checks it against the complex-level bounds.
pub fn css_ledger(sc: &SheafComplex, i: usize, budget: usize) -> Result<(Report, CssSummary), CssError> {
    let mut rep = Report::new();
    let code = build_css(sc, i)?;
    rep.check(format!("css.orthogonal.{i}"), "CSS condition H_X H_Z^T = 0", true, json!({"qubits": code.qubits()}));
    let bounds = complex_bounds(sc, i, budget)?;
    let floor = DistanceFloor { x: bounds.mu_cosyst.lower.value().ceil() as u64, z: bounds.mu_syst.lower.value().ceil() as u64 };
    let params = code_params_with_floor(&code, budget, floor)?;
    let (sx, sz) = qltc_soundness(&code, budget)?;
    let profile = ldpc_profile(&code);
    rep.check(
        format!("css.k_identity.{i}"),
        "logical dimension: kernel-minus-image equals rank identity",
        params.k == params.k_rank_identity,
        json!({"k": params.k, "rank_identity": params.k_rank_identity}),
    );
    rep.check(
        format!("css.k_bound.{i}"),
        "logical dimension at least e(D_i - D_{i-1} - D_{i+1})",
        bounds.k_lower <= params.k as i64,
        json!({"k": params.k, "lower": bounds.k_lower}),
    );
    // block weight never exceeds bit weight, so each side is bounded by its complex distance
    let d_ok = bounds.mu_cosyst.lower <= params.d_x.upper && bounds.mu_syst.lower <= params.d_z.upper;
    rep.check(
        format!("css.d_bound.{i}"),
        "distance at least min of systolic and co-systolic distance",
        d_ok,
        json!({"lower": bounds.d_lower.to_string(), "d_x": params.d_x.upper.to_string(), "d_z": params.d_z.upper.to_string()}),
    );
    let rho = sx.rho_upper.min(sz.rho_upper);
    let rho_ok = bounds.rho_lower <= rho * (1.0 + 1e-12);
    rep.check(
        format!("css.rho_bound.{i}"),
        "soundness at least the expansion-derived bound",
        rho_ok,
        json!({"lower": bounds.rho_lower, "rho": rho, "certified": sx.certified && sz.certified}),
    );
    rep.check(
        format!("css.weights.{i}"),
        "check weights bounded independently of N",
        profile.within_bound,
        json!({"max_row_x": profile.hx.max_row, "max_row_z": profile.hz.max_row, "bound": profile.bound}),
    );
    Ok((rep, CssSummary { level: i, params, soundness_x: sx, soundness_z: sz, profile, bounds }))
}
