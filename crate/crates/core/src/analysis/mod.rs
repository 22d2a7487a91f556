//! Systolic and co-systolic distances, locally co-minimal distance, (co)cycle
//! expansion, and the checks relating them.

mod decode;
mod double;

pub use decode::{decode_curve, decode_rate, CurvePoint, DecodeOutcome, DecodeResult, FlipDecoder, RatePoint, FLIP_ENUM_LIMIT};
pub use double::{
    delta_k_apply, delta_k_solve, local_views, partial_l, random_view, stitch, CycleFiller, FillOutcome, FillPath, FillTrace,
    LocalViewCochain, SolveStats,
};

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use serde_json::json;

use crate::cosets::{column_basis, combine, enumerate_span, extend_basis, min_nontrivial, min_ratio_auto, Ratio, SearchError};
use crate::ff2e::{kernel_basis_dense, Blocks, Field, FieldMatrix, Gf};
use crate::geometry::binomial;
use crate::local::{robustness, LocalComplex, LocalError};
use crate::report::Report;
use crate::sheaf::{SheafComplex, SheafError};
use crate::walks::{self, WalkError};

/// Largest coset space enumerated per vertex patch.
pub const PATCH_BUDGET: usize = 1 << 16;
/// Candidates held in memory at once by the co-minimality scan.
const BATCH: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("level {k} out of range for dimension {t}")]
    LevelOutOfRange { k: usize, t: usize },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Local(#[from] LocalError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("local view cochain is not closed under the restriction coboundary")]
    NotACocycle,
    #[error("chain is not a cycle")]
    NotACycle,
    #[error("vertex views disagree on face {face}")]
    InconsistentViews { face: usize },
    #[error("local lift has no solution at face {face} of level {level}")]
    LiftFailed { level: usize, face: usize },
    #[error("filled chain does not bound the input")]
    FillMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistMode {
    Syst,
    Cosyst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpMode {
    Cyc,
    Cocyc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMethod {
    /// Homology or image is trivial; the value is +∞.
    Trivial,
    Exhaustive,
    /// Supports scanned in order of size; exact when a witness is found.
    SupportScan,
    WeightCapped,
}

fn sparse_opt<S: Serializer>(v: &Option<Vec<Gf>>, s: S) -> Result<S::Ok, S::Error> {
    let pairs: Option<Vec<(usize, Gf)>> =
        v.as_ref().map(|v| v.iter().enumerate().filter(|e| *e.1 != 0).map(|(i, &x)| (i, x)).collect());
    pairs.serialize(s)
}

/// A measured quantity: exact when lower = upper.
#[derive(Clone, Debug, Serialize)]
pub struct Measured {
    pub lower: Ratio,
    pub upper: Ratio,
    pub method: MeasureMethod,
    #[serde(serialize_with = "sparse_opt")]
    pub witness: Option<Vec<Gf>>,
    /// Block weight of the witness, or its distance to the kernel for expansion.
    pub witness_weight: Option<usize>,
}

impl Measured {
    fn trivial() -> Self {
        Measured { lower: Ratio::INFINITY, upper: Ratio::INFINITY, method: MeasureMethod::Trivial, witness: None, witness_weight: None }
    }

    fn exact(value: Ratio, method: MeasureMethod, witness: Vec<Gf>, weight: usize) -> Self {
        Measured { lower: value, upper: value, method, witness: Some(witness), witness_weight: Some(weight) }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    /// The exact value as an integer distance (None for +∞ or bounds).
    pub fn distance(&self) -> Option<u64> {
        (self.is_exact() && !self.upper.is_infinite()).then(|| self.upper.num / self.upper.den)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    pub k: usize,
    pub mu_syst: Option<Measured>,
    pub mu_cosyst: Option<Measured>,
    pub d_coloc: Option<Measured>,
    pub eps_cyc: Option<Measured>,
    pub eps_cocyc: Option<Measured>,
}

pub(crate) fn fits(f: &Field, dim: usize, budget: usize) -> Result<(), SearchError> {
    let bits = f.degree() as usize * dim;
    if bits >= 63 || (1usize << bits) > budget {
        return Err(SearchError::BudgetExceeded { q: f.order(), dim, budget });
    }
    Ok(())
}

fn unit_basis(n: usize) -> Vec<Vec<Gf>> {
    (0..n)
        .map(|i| {
            let mut v = vec![0; n];
            v[i] = 1;
            v
        })
        .collect()
}

fn check_level(sc: &SheafComplex, k: usize) -> Result<(), AnalysisError> {
    if k > sc.t() {
        return Err(AnalysisError::LevelOutOfRange { k, t: sc.t() });
    }
    Ok(())
}

/// (kernel map, image map) whose quotient is the (co)homology at level k.
fn maps(sc: &SheafComplex, k: usize, mode: DistMode) -> Result<(Option<&FieldMatrix>, Option<&FieldMatrix>), AnalysisError> {
    check_level(sc, k)?;
    let t = sc.t();
    Ok(match mode {
        DistMode::Cosyst => (
            if k < t { Some(sc.delta(k)?) } else { None },
            if k >= 1 { Some(sc.delta(k - 1)?) } else { None },
        ),
        DistMode::Syst => (
            if k >= 1 { Some(sc.partial(k)?) } else { None },
            if k < t { Some(sc.partial(k + 1)?) } else { None },
        ),
    })
}

/// Image basis and a complement of it inside the kernel.
pub fn quotient_basis(sc: &SheafComplex, k: usize, mode: DistMode) -> Result<(Vec<Vec<Gf>>, Vec<Vec<Gf>>), AnalysisError> {
    let f = sc.field();
    let (ker, im) = maps(sc, k, mode)?;
    let kernel = match ker {
        Some(m) => kernel_basis_dense(f, m),
        None => unit_basis(sc.dim(k)),
    };
    let trivial = im.map(|m| column_basis(f, m)).unwrap_or_default();
    let extra = extend_basis(f, &trivial, &kernel);
    Ok((trivial, extra))
}

/// Decides membership of kernel elements in the image through the perfect pairing of
/// ker δ_k / im δ_{k−1} with ker ∂_k / im ∂_{k+1}.
#[derive(Clone, Debug)]
pub struct ClassTester {
    field: Field,
    kernel_map: Option<FieldMatrix>,
    functionals: Vec<Vec<(usize, Gf)>>,
}

impl ClassTester {
    pub fn new(sc: &SheafComplex, k: usize, mode: DistMode) -> Result<Self, AnalysisError> {
        let other = match mode {
            DistMode::Syst => DistMode::Cosyst,
            DistMode::Cosyst => DistMode::Syst,
        };
        let (_, extra) = quotient_basis(sc, k, other)?;
        let (ker, _) = maps(sc, k, mode)?;
        Ok(ClassTester {
            field: sc.field().clone(),
            kernel_map: ker.cloned(),
            functionals: extra.iter().map(|c| c.iter().enumerate().filter(|e| *e.1 != 0).map(|(i, &v)| (i, v)).collect()).collect(),
        })
    }

    /// Dimension of the (co)homology.
    pub fn rank(&self) -> usize {
        self.functionals.len()
    }

    pub fn in_kernel(&self, x: &[Gf]) -> bool {
        self.kernel_map.as_ref().map_or(true, |m| m.mul_vec(&self.field, x).iter().all(|&v| v == 0))
    }

    /// Pairings of x against the dual classes; all zero iff x is a (co)boundary (for x in the kernel).
    pub fn pairings(&self, x: &[Gf]) -> Vec<Gf> {
        self.functionals.iter().map(|c| c.iter().fold(0, |acc, &(i, v)| acc ^ self.field.mul(v, x[i]))).collect()
    }

    pub fn is_trivial(&self, x: &[Gf]) -> bool {
        self.in_kernel(x) && self.pairings(x).iter().all(|&v| v == 0)
    }

    pub fn is_nontrivial_class(&self, x: &[Gf]) -> bool {
        self.in_kernel(x) && self.pairings(x).iter().any(|&v| v != 0)
    }
}

/// μ_syst(k) or μ_cosyst(k): least block weight of a nontrivial (co)homology class.
pub fn brute_mu(sc: &SheafComplex, k: usize, mode: DistMode, budget: usize) -> Result<Measured, AnalysisError> {
    let f = sc.field();
    let (trivial, extra) = quotient_basis(sc, k, mode)?;
    if extra.is_empty() {
        return Ok(Measured::trivial());
    }
    let blocks = sc.blocks(k);
    if fits(f, trivial.len() + extra.len(), budget).is_ok() {
        let (w, x) = min_nontrivial(f, &trivial, &extra, blocks, budget)?.expect("extra is nonempty");
        return Ok(Measured::exact(Ratio::new(w as u64, 1), MeasureMethod::Exhaustive, x, w));
    }
    let tester = ClassTester::new(sc, k, mode)?;
    let (ker, _) = maps(sc, k, mode)?;
    let ker_t = ker.map(|m| m.transpose());
    let (lower, found) = support_scan(f, ker_t.as_ref(), &tester, blocks, budget >> 6);
    if let Some(x) = found {
        return Ok(Measured::exact(Ratio::new(lower as u64, 1), MeasureMethod::SupportScan, x, lower));
    }
    let (w, x) = sample_upper(f, &trivial, &extra, blocks, 256, 0x6d75);
    Ok(Measured {
        lower: Ratio::new(lower as u64, 1),
        upper: Ratio::new(w as u64, 1),
        method: MeasureMethod::WeightCapped,
        witness: Some(x),
        witness_weight: Some(w),
    })
}

fn combinations(n: usize, w: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    if w > n {
        return;
    }
    let mut c: Vec<usize> = (0..w).collect();
    loop {
        if !visit(&c) {
            return;
        }
        let Some(i) = (0..w).rev().find(|&i| c[i] < n - w + i) else { return };
        c[i] += 1;
        for j in i + 1..w {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Scans supports by increasing size; returns (w, Some(x)) for the first nontrivial x supported on
/// w faces, or (w, None) when every support below w is certified empty before the budget runs out.
fn support_scan(f: &Field, ker_t: Option<&FieldMatrix>, tester: &ClassTester, blocks: &Blocks, max_evals: usize) -> (usize, Option<Vec<Gf>>) {
    let mut evals = 0usize;
    for w in 1..=blocks.count() {
        let mut found = None;
        let mut exhausted = false;
        combinations(blocks.count(), w, |faces| {
            evals += 1;
            if evals > max_evals {
                exhausted = true;
                return false;
            }
            let coords: Vec<usize> = faces.iter().flat_map(|&b| blocks.range(b)).collect();
            let local: Vec<Vec<Gf>> = match ker_t {
                None => unit_basis(coords.len()),
                Some(mt) => {
                    let mut rows: HashMap<usize, usize> = HashMap::new();
                    let mut trip = Vec::new();
                    for (ci, &c) in coords.iter().enumerate() {
                        for (r, v) in mt.row(c) {
                            let n = rows.len();
                            let ri = *rows.entry(r).or_insert(n);
                            trip.push((ri, ci, v));
                        }
                    }
                    kernel_basis_dense(f, &FieldMatrix::from_triplets(rows.len(), coords.len(), trip))
                }
            };
            for v in local {
                let mut x = vec![0; blocks.total()];
                for (ci, &c) in coords.iter().enumerate() {
                    x[c] = v[ci];
                }
                if tester.pairings(&x).iter().any(|&p| p != 0) {
                    found = Some(x);
                    return false;
                }
            }
            true
        });
        if found.is_some() {
            return (w, found);
        }
        if exhausted {
            return (w, None);
        }
    }
    (blocks.count() + 1, None)
}

fn sample_upper(f: &Field, trivial: &[Vec<Gf>], extra: &[Vec<Gf>], blocks: &Blocks, samples: usize, seed: u64) -> (usize, Vec<Gf>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (usize::MAX, Vec::new());
    for s in 0..samples {
        let mut alpha: Vec<usize> = (0..extra.len()).map(|_| rng.gen_range(0..f.order())).collect();
        if alpha.iter().all(|&a| a == 0) {
            alpha[s % extra.len()] = 1;
        }
        let mut x = combine(f, extra, &alpha, blocks.total());
        // sparse draws from the image keep the sample near the class representative
        for b in trivial {
            if rng.gen_bool(0.1) {
                f.axpy(&mut x, f.random_nonzero(&mut rng), b);
            }
        }
        let w = blocks.weight(&x);
        if w < best.0 {
            best = (w, x);
        }
    }
    best
}

/// A witness is in the kernel, represents a nonzero class, and has the reported weight.
pub fn verify_distance_witness(sc: &SheafComplex, k: usize, mode: DistMode, m: &Measured) -> Result<bool, AnalysisError> {
    let (Some(x), Some(w)) = (&m.witness, m.witness_weight) else {
        return Ok(m.method == MeasureMethod::Trivial);
    };
    let tester = ClassTester::new(sc, k, mode)?;
    Ok(tester.is_nontrivial_class(x) && sc.blocks(k).weight(x) == w && Ratio::new(w as u64, 1) == m.upper)
}

/// Adds random (co)boundaries to the witness and checks none falls below the reported minimum.
pub fn spot_check_witness(sc: &SheafComplex, k: usize, mode: DistMode, m: &Measured, samples: usize, seed: u64) -> Result<bool, AnalysisError> {
    let Some(x) = &m.witness else { return Ok(true) };
    let f = sc.field();
    let (_, im) = maps(sc, k, mode)?;
    let Some(im) = im else { return Ok(true) };
    let blocks = sc.blocks(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = m.lower;
    Ok((0..samples).all(|_| {
        let density = [0.02, 0.1, 0.5][rng.gen_range(0..3)];
        let y: Vec<Gf> = (0..im.cols()).map(|_| if rng.gen_bool(density) { f.random(&mut rng) } else { 0 }).collect();
        let mut v = im.mul_vec(f, &y);
        for (a, &b) in v.iter_mut().zip(x) {
            *a ^= b;
        }
        Ratio::new(blocks.weight(&v) as u64, 1) >= bound
    }))
}

/// Rows touched by a set of source columns, grouped by whole target faces.
#[derive(Clone, Debug)]
pub(crate) struct Patch {
    pub src: Vec<usize>,
    pub rows: Vec<usize>,
    pub blocks: Blocks,
    pub cols: Vec<Vec<Gf>>,
}

impl Patch {
    /// `map_t` is the transpose of the map (rows indexed by source coordinates).
    pub fn new(tgt: &Blocks, src: Vec<usize>, map_t: &FieldMatrix) -> Patch {
        let entries: Vec<Vec<(usize, Gf)>> = src.iter().map(|&c| map_t.row(c).collect()).collect();
        let faces: BTreeSet<usize> = entries.iter().flatten().map(|&(r, _)| tgt.owner(r)).collect();
        let mut rows = Vec::new();
        let mut sizes = Vec::new();
        for &b in &faces {
            sizes.push(tgt.size(b));
            rows.extend(tgt.range(b));
        }
        let pos: HashMap<usize, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let cols = entries
            .iter()
            .map(|e| {
                let mut v = vec![0; rows.len()];
                for &(r, x) in e {
                    v[pos[&r]] = x;
                }
                v
            })
            .collect();
        Patch { src, rows, blocks: Blocks::new(sizes), cols }
    }

    pub fn gather(&self, z: &[Gf]) -> Vec<Gf> {
        self.rows.iter().map(|&r| z[r]).collect()
    }

    pub fn independent_cols(&self, f: &Field) -> Vec<Vec<Gf>> {
        let trip = self.cols.iter().enumerate().flat_map(|(c, v)| v.iter().enumerate().filter(|e| *e.1 != 0).map(move |(r, &x)| (r, c, x)));
        column_basis(f, &FieldMatrix::from_triplets(self.rows.len(), self.cols.len(), trip.collect::<Vec<_>>()))
    }
}

struct ComPatch {
    patch: Patch,
    basis: Vec<Vec<Gf>>,
}

/// Vertex-local coboundary spaces δ(C^{k−1}(X_{≥v})) restricted to the k-faces they touch.
fn vertex_patches(sc: &SheafComplex, k: usize) -> Result<Vec<ComPatch>, AnalysisError> {
    let f = sc.field();
    let geom = sc.geometry();
    let map_t = sc.partial(k)?;
    (0..geom.level_size(0))
        .into_par_iter()
        .map(|vi| {
            let v = geom.face_at(0, vi);
            let src: Vec<usize> = geom.link_up(&v, k - 1).expect("level checked").iter().flat_map(|u| sc.face_coords(u)).collect();
            let patch = Patch::new(sc.blocks(k), src, map_t);
            let basis = patch.independent_cols(f);
            fits(f, basis.len(), PATCH_BUDGET)?;
            Ok(ComPatch { patch, basis })
        })
        .collect()
}

/// True when some element of offset + span(basis) is strictly lighter than `w0`.
fn improvable(f: &Field, offset: &[Gf], basis: &[Vec<Gf>], blocks: &Blocks, w0: usize) -> bool {
    let mut better = false;
    enumerate_span(f, offset, basis, blocks, PATCH_BUDGET, |_, w, _| {
        better = w < w0;
        !better
    })
    .expect("patch budget checked");
    better
}

fn co_minimal(f: &Field, patches: &[ComPatch], x: &[Gf]) -> bool {
    patches.iter().all(|p| {
        let xl = p.patch.gather(x);
        let w0 = p.patch.blocks.weight(&xl);
        w0 == 0 || !improvable(f, &xl, &p.basis, &p.patch.blocks, w0)
    })
}

/// Local co-minimality of a cochain, decided vertex by vertex.
pub fn is_locally_co_minimal(sc: &SheafComplex, k: usize, x: &[Gf]) -> Result<bool, AnalysisError> {
    check_level(sc, k)?;
    if k == 0 {
        return Ok(true);
    }
    Ok(co_minimal(sc.field(), &vertex_patches(sc, k)?, x))
}

fn pack(e: usize, digits: &[usize]) -> u64 {
    digits.iter().enumerate().fold(0, |acc, (i, &d)| acc | (d as u64) << (e * i))
}

fn unpack(e: usize, len: usize, key: u64) -> Vec<usize> {
    (0..len).map(|i| (key >> (e * i) & ((1 << e) - 1)) as usize).collect()
}

/// d_coloc(k): least block weight of a nonzero locally co-minimal cocycle.
pub fn d_coloc(sc: &SheafComplex, k: usize, budget: usize) -> Result<Measured, AnalysisError> {
    check_level(sc, k)?;
    let f = sc.field();
    let kernel = if k < sc.t() { kernel_basis_dense(f, sc.delta(k)?) } else { unit_basis(sc.dim(k)) };
    if kernel.is_empty() {
        return Ok(Measured::trivial());
    }
    fits(f, kernel.len(), budget)?;
    let blocks = sc.blocks(k);
    if k == 0 {
        let (w, x) = min_nontrivial(f, &[], &kernel, blocks, budget)?.expect("kernel is nonempty");
        return Ok(Measured::exact(Ratio::new(w as u64, 1), MeasureMethod::Exhaustive, x, w));
    }
    let patches = vertex_patches(sc, k)?;
    let zero = vec![0; blocks.total()];
    let mut hist = vec![0usize; blocks.count() + 1];
    enumerate_span(f, &zero, &kernel, blocks, budget, |_, w, _| {
        hist[w] += 1;
        true
    })?;
    hist[0] -= 1;
    let e = f.degree() as usize;
    let mut lo = 1;
    while lo <= blocks.count() {
        let mut hi = lo;
        let mut total = hist[lo];
        while hi < blocks.count() && total + hist[hi + 1] <= BATCH {
            hi += 1;
            total += hist[hi];
        }
        if total > 0 {
            let mut batch = Vec::with_capacity(total);
            enumerate_span(f, &zero, &kernel, blocks, budget, |_, w, d| {
                if (lo..=hi).contains(&w) {
                    batch.push((w as u32, pack(e, d)));
                }
                true
            })?;
            batch.sort_unstable();
            let hit = batch.par_iter().find_first(|&&(_, key)| {
                let x = combine(f, &kernel, &unpack(e, kernel.len(), key), blocks.total());
                co_minimal(f, &patches, &x)
            });
            if let Some(&(w, key)) = hit {
                let x = combine(f, &kernel, &unpack(e, kernel.len(), key), blocks.total());
                return Ok(Measured::exact(Ratio::new(w as u64, 1), MeasureMethod::Exhaustive, x, w as usize));
            }
        }
        lo = hi + 1;
    }
    Ok(Measured::trivial())
}

/// ε_cyc(k) or ε_cocyc(k): min over x ∉ ker of |map x| / dist(x, ker).
pub fn expansion(sc: &SheafComplex, k: usize, mode: ExpMode, budget: usize) -> Result<Measured, AnalysisError> {
    check_level(sc, k)?;
    let t = sc.t();
    let (map, tgt) = match mode {
        ExpMode::Cocyc if k < t => (sc.delta(k)?, sc.blocks(k + 1)),
        ExpMode::Cyc if k >= 1 => (sc.partial(k)?, sc.blocks(k - 1)),
        _ => return Err(AnalysisError::LevelOutOfRange { k, t }),
    };
    let src = sc.blocks(k);
    let res = min_ratio_auto(sc.field(), map, src, tgt, budget)?;
    let Some(best) = res.best else {
        if res.complete {
            return Ok(Measured::trivial());
        }
        return Ok(Measured {
            lower: Ratio::new(1, src.count() as u64),
            upper: Ratio::INFINITY,
            method: MeasureMethod::WeightCapped,
            witness: None,
            witness_weight: None,
        });
    };
    let value = Ratio::new(best.numer as u64, best.denom as u64);
    if res.complete {
        return Ok(Measured::exact(value, MeasureMethod::Exhaustive, best.x, best.denom));
    }
    Ok(Measured {
        lower: value.min(Ratio::new(1, src.count() as u64)),
        upper: value,
        method: MeasureMethod::WeightCapped,
        witness: Some(best.x),
        witness_weight: Some(best.denom),
    })
}

/// Recomputes |map x| and, when the kernel fits the budget, dist(x, ker) by coset enumeration.
pub fn verify_expansion_witness(sc: &SheafComplex, k: usize, mode: ExpMode, m: &Measured, budget: usize) -> Result<bool, AnalysisError> {
    let (Some(x), Some(d)) = (&m.witness, m.witness_weight) else {
        return Ok(m.method != MeasureMethod::Exhaustive || m.upper.is_infinite());
    };
    let f = sc.field();
    let (map, tgt) = match mode {
        ExpMode::Cocyc => (sc.delta(k)?, sc.blocks(k + 1)),
        ExpMode::Cyc => (sc.partial(k)?, sc.blocks(k - 1)),
    };
    let src = sc.blocks(k);
    let numer = tgt.weight(&map.mul_vec(f, x));
    if Ratio::new(numer as u64, d as u64) != m.upper || src.weight(x) != d {
        return Ok(false);
    }
    let kernel = kernel_basis_dense(f, map);
    if fits(f, kernel.len(), budget).is_err() {
        return Ok(true);
    }
    let (dist, _) = crate::cosets::coset_min(f, x, &kernel, src, budget)?;
    Ok(dist == d)
}

/// The dual complex on the same geometry with codes {h_i^⊥}.
pub fn dual_complex(sc: &SheafComplex) -> SheafComplex {
    sc.dual()
}

/// Checks on the dual: chain conditions, shared geometry, and the m ↔ n−m dimension swap.
pub fn dual_check(sc: &SheafComplex, seed: u64) -> Report {
    let d = sc.dual();
    let mut rep = d.verify_chain(seed);
    for e in &mut rep.entries {
        e.check_id = format!("dual.{}", e.check_id);
    }
    let f = sc.field();
    let codes = sc.codes();
    let dd = codes.dual().dual();
    let rows_ok = (0..codes.t()).all(|i| {
        let a = codes.h(i);
        let b = dd.h(i);
        let r = crate::ff2e::rank(f, a);
        let stacked = FieldMatrix::from_triplets(a.rows() + b.rows(), a.cols(), a.triplets().chain(b.triplets().map(|(r0, c, v)| (r0 + a.rows(), c, v))).collect::<Vec<_>>());
        r == crate::ff2e::rank(f, b) && r == crate::ff2e::rank(f, &stacked)
    });
    rep.check("dual.double_dual", "dual of dual spans the original row spaces", rows_ok, json!({}));
    let swapped = (0..codes.t()).all(|i| d.codes().m(i) == codes.n() - codes.m(i));
    rep.check("dual.dims", "dual code sizes are n − m_i", swapped, json!({"ms": codes.ms(), "dual_ms": d.codes().ms()}));
    let geom_ok = std::sync::Arc::ptr_eq(&sc.geometry_arc(), &d.geometry_arc());
    rep.check("dual.geometry", "dual shares the face tables", geom_ok, json!({}));
    rep
}

/// The constants of the co-distance bound, computed from the measured κ and a-coefficient tables.
#[derive(Clone, Debug, Serialize)]
pub struct CodistanceConstants {
    pub k: usize,
    pub lambda: f64,
    pub r: f64,
    /// κ_{t−i,k−i} for i = 0..=k (minimum lower bound over direction sets).
    pub kappa: Vec<Ratio>,
    /// a_{k,i} for i = 0..k.
    pub a: Vec<usize>,
    pub c1: f64,
    pub c2: f64,
    /// (1 − λC_1)/C_2 · r · |X(k)|.
    pub bound: f64,
    pub d_coloc: Option<u64>,
    pub vacuous: bool,
    pub holds: Option<bool>,
}

pub fn codistance_constants(sc: &SheafComplex, k: usize, d_coloc: Option<&Measured>, budget: usize) -> Result<CodistanceConstants, AnalysisError> {
    let t = sc.t();
    if k >= t {
        return Err(AnalysisError::LevelOutOfRange { k, t });
    }
    let geom = sc.geometry();
    let n = geom.n();
    let (lambda, r) = walks::expansion_params(geom)?;
    let all: Vec<usize> = (0..t).collect();
    let mut kappa = Vec::new();
    for i in 0..=k {
        let mut best = Ratio::INFINITY;
        for mask in crate::geometry::subsets_of(&all, t - i) {
            let dirs = crate::geometry::mask_elems(mask);
            let l = LocalComplex::new(&dirs, sc.codes())?;
            best = best.min(robustness(&l, k - i, budget)?.lower_bound);
        }
        kappa.push(best);
    }
    let a: Vec<usize> = (0..k).map(|i| walks::a_coeff(geom, k, i)).collect::<Result<_, _>>()?;
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    for l in 0..=k {
        let mut term = (binomial(k, l) * binomial(t - l, k - l) * (t - l)) as f64 * (1u64 << (k - l)) as f64;
        term *= a[l..k].iter().map(|&x| x as f64).product::<f64>();
        term /= kappa[l..=k].iter().map(|x| x.value()).product::<f64>();
        c1 += term;
        c2 += binomial(t, l) as f64 * (1u64 << (t - l - 1)) as f64 * (n as f64).powi(l as i32) * term;
    }
    let bound = (1.0 - lambda * c1) / c2 * r * geom.level_size(k) as f64;
    let vacuous = !(bound > 0.0);
    let d = d_coloc.and_then(|m| m.distance());
    let holds = match d_coloc {
        Some(m) if m.is_exact() => Some(vacuous || m.upper.value() >= bound),
        _ => None,
    };
    Ok(CodistanceConstants { k, lambda, r, kappa, a, c1, c2, bound, d_coloc: d, vacuous, holds })
}

/// min{1/max_v |X_{≥v}(i)|, d_coloc(i+1)/|X(i)|}: the lower bound on ε_cocyc(i) from local co-minimality.
pub fn cosys_exp_bound(sc: &SheafComplex, i: usize, d_next: &Measured) -> Ratio {
    let geom = sc.geometry();
    let star = (0..geom.level_size(0)).map(|v| geom.link_up(&geom.face_at(0, v), i).map(|l| l.len()).unwrap_or(0)).max().unwrap_or(1);
    let a = Ratio::new(1, star as u64);
    if d_next.lower.is_infinite() {
        return a;
    }
    a.min(Ratio::new(d_next.lower.num, d_next.lower.den * geom.level_size(i) as u64))
}

/// μ_syst(k) ≥ μ̃_cosyst(t−k) / (2nt)^t.
pub fn distance_inequality(sc: &SheafComplex, mu_syst: &Measured, mu_dual_cosyst: &Measured) -> Option<bool> {
    if !mu_syst.is_exact() || !mu_dual_cosyst.is_exact() {
        return None;
    }
    let g = sc.geometry();
    let scale = ((2 * g.n() * sc.t()) as f64).powi(sc.t() as i32);
    Some(mu_syst.upper.value() >= mu_dual_cosyst.upper.value() / scale)
}

/// Distances, expansion and the relations among them, level by level.
pub fn distance_ledger(sc: &SheafComplex, budget: usize, seed: u64) -> (Report, Vec<DistanceReport>) {
    let t = sc.t();
    let dual = sc.dual();
    let mut rep = Report::new();
    let mut out = Vec::new();
    let colocs: Vec<Option<Measured>> = (0..=t).map(|k| d_coloc(sc, k, budget).ok()).collect();
    for k in 0..=t {
        let mu_syst = brute_mu(sc, k, DistMode::Syst, budget).ok();
        let mu_cosyst = brute_mu(sc, k, DistMode::Cosyst, budget).ok();
        for (name, mode, m) in [("syst", DistMode::Syst, &mu_syst), ("cosyst", DistMode::Cosyst, &mu_cosyst)] {
            match m {
                Some(m) => {
                    let ok = verify_distance_witness(sc, k, mode, m).unwrap_or(false)
                        && spot_check_witness(sc, k, mode, m, 1000, seed ^ k as u64).unwrap_or(false);
                    rep.check(format!("analysis.mu_{name}.{k}"), "distance witness is a nontrivial class", ok, json!({"level": k, "value": m}));
                }
                None => rep.skip(format!("analysis.mu_{name}.{k}"), "distance witness is a nontrivial class", json!({"level": k, "reason": "budget"})),
            }
        }
        let coloc = colocs[k].clone();
        match (&mu_cosyst, &coloc) {
            (Some(mc), Some(dc)) if mc.is_exact() && dc.is_exact() => {
                rep.check(
                    format!("analysis.coloc.{k}"),
                    "co-systolic distance is at least the locally co-minimal distance",
                    mc.upper >= dc.upper,
                    json!({"level": k, "mu_cosyst": mc.upper, "d_coloc": dc.upper}),
                );
            }
            _ => rep.skip(format!("analysis.coloc.{k}"), "co-systolic distance is at least the locally co-minimal distance", json!({"level": k})),
        }
        let eps_cocyc = (k < t).then(|| expansion(sc, k, ExpMode::Cocyc, budget).ok()).flatten();
        let eps_cyc = (k >= 1).then(|| expansion(sc, k, ExpMode::Cyc, budget).ok()).flatten();
        for (name, mode, m) in [("cocyc", ExpMode::Cocyc, &eps_cocyc), ("cyc", ExpMode::Cyc, &eps_cyc)] {
            if let Some(m) = m {
                let ok = verify_expansion_witness(sc, k, mode, m, budget).unwrap_or(false);
                rep.check(format!("analysis.eps_{name}.{k}"), "expansion witness ratio re-verifies", ok, json!({"level": k, "value": m}));
            }
        }
        if let (Some(e), Some(Some(dn))) = (&eps_cocyc, colocs.get(k + 1)) {
            if e.is_exact() && dn.is_exact() {
                let bound = cosys_exp_bound(sc, k, dn);
                rep.check(
                    format!("analysis.cosys_exp.{k}"),
                    "co-cycle expansion is bounded below through local co-minimality",
                    e.lower >= bound,
                    json!({"level": k, "eps_cocyc": e.lower, "bound": bound}),
                );
            }
        }
        if let Some(ms) = &mu_syst {
            if let Ok(md) = brute_mu(&dual, t - k, DistMode::Cosyst, budget) {
                if let Some(ok) = distance_inequality(sc, ms, &md) {
                    rep.check(
                        format!("analysis.distance_ineq.{k}"),
                        "systolic distance against the dual co-systolic distance",
                        ok,
                        json!({"level": k, "mu_syst": ms.upper, "dual_mu_cosyst": md.upper}),
                    );
                }
            }
        }
        if k < t {
            if let Ok(c) = codistance_constants(sc, k, coloc.as_ref(), budget) {
                match c.holds {
                    Some(ok) => rep.check(format!("analysis.codistance.{k}"), "co-distance bound from measured constants", ok, json!(c)),
                    None => {
                        rep.skip(format!("analysis.codistance.{k}"), "co-distance bound from measured constants", json!(c));
                        false
                    }
                };
            }
        }
        out.push(DistanceReport { k, mu_syst, mu_cosyst, d_coloc: coloc, eps_cyc, eps_cocyc });
    }
    (rep, out)
}
