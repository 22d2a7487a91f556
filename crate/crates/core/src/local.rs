//! The local product complexes L_S: δ_S(x) = Σ_{j∈S−T} (I ⊗ h_jᵀ)x on faces ∏_{i∈T} A_i.

use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::cosets::{self, Ratio, SearchError};
use crate::ff2e::{kernel_basis_dense, rank, Blocks, DenseMatrix, Field, FieldMatrix, Gf};
use crate::geometry::{subsets_of, Face, Label, MAX_T};
use crate::report::Report;
use crate::sheaf::{coords_by_mask, Coords, LocalCodes, SheafComplex, SheafError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LocalError {
    #[error("direction set must be nonempty, ascending and within 0..t")]
    BadDirections,
    #[error("level {level} out of range for |S| = {s}")]
    LevelOutOfRange { level: usize, s: usize },
    #[error("coset space too large for the budget {budget}")]
    Undecidable { budget: usize },
    #[error("no full-row-rank {m}×{n} matrix exists")]
    NoFullRankTuple { m: usize, n: usize },
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

#[derive(Clone, Debug)]
struct LocalLevel {
    types: Vec<u32>,
    type_pos: HashMap<u32, usize>,
    blocks: Blocks,
}

/// C(L_S) for a direction subset S; all indices inside are local (0..|S|).
#[derive(Clone, Debug)]
pub struct LocalComplex {
    dirs: Vec<usize>,
    codes: LocalCodes,
    n: usize,
    coords: Vec<Coords>,
    levels: Vec<LocalLevel>,
    delta: Vec<FieldMatrix>,
    partial: Vec<FieldMatrix>,
}

impl LocalComplex {
    /// `dirs` are global direction indices into `codes`, ascending.
    pub fn new(dirs: &[usize], codes: &LocalCodes) -> Result<Self, LocalError> {
        if dirs.is_empty() || dirs.windows(2).any(|w| w[0] >= w[1]) || dirs.iter().any(|&d| d >= codes.t()) {
            return Err(LocalError::BadDirections);
        }
        let codes = codes.restricted(dirs);
        let s = dirs.len();
        let n = codes.n();
        let ms = codes.ms();
        let coords = coords_by_mask(s, &ms);
        let all: Vec<usize> = (0..s).collect();
        let levels = (0..=s)
            .map(|k| {
                let types = subsets_of(&all, k);
                let type_pos = types.iter().enumerate().map(|(i, &m)| (m, i)).collect();
                let per = n.pow(k as u32);
                let sizes: Vec<usize> = types.iter().flat_map(|&m| std::iter::repeat(coords[m as usize].size()).take(per)).collect();
                LocalLevel { types, type_pos, blocks: Blocks::new(sizes) }
            })
            .collect();
        let mut lc = LocalComplex { dirs: dirs.to_vec(), codes, n, coords, levels, delta: vec![], partial: vec![] };
        lc.delta = (0..s).map(|k| lc.assemble_delta(k)).collect();
        lc.partial = (1..=s).map(|k| lc.assemble_partial(k)).collect();
        Ok(lc)
    }

    pub fn dirs(&self) -> &[usize] {
        &self.dirs
    }

    pub fn s(&self) -> usize {
        self.dirs.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &Field {
        self.codes.field()
    }

    pub fn codes(&self) -> &LocalCodes {
        &self.codes
    }

    pub fn dim(&self, k: usize) -> usize {
        self.levels[k].blocks.total()
    }

    pub fn blocks(&self, k: usize) -> &Blocks {
        &self.levels[k].blocks
    }

    pub fn face_count(&self, k: usize) -> usize {
        self.levels[k].blocks.count()
    }

    /// δ_k : C^k → C^{k+1}.
    pub fn delta(&self, k: usize) -> Result<&FieldMatrix, LocalError> {
        self.delta.get(k).ok_or(LocalError::LevelOutOfRange { level: k, s: self.s() })
    }

    /// ∂_k : C_k → C_{k−1}.
    pub fn partial(&self, k: usize) -> Result<&FieldMatrix, LocalError> {
        if k == 0 {
            return Err(LocalError::LevelOutOfRange { level: 0, s: self.s() });
        }
        self.partial.get(k - 1).ok_or(LocalError::LevelOutOfRange { level: k, s: self.s() })
    }

    /// Face index of (type mask, generator digits indexed by local direction).
    pub fn face_index(&self, mask: u32, a: &[usize; MAX_T]) -> usize {
        let k = mask.count_ones() as usize;
        let code = (0..self.s()).filter(|&j| mask >> j & 1 == 1).fold(0, |acc, j| acc * self.n + a[j]);
        self.levels[k].type_pos[&mask] * self.n.pow(k as u32) + code
    }

    /// Inverse of [`face_index`](Self::face_index).
    pub fn face_at(&self, k: usize, idx: usize) -> (u32, [usize; MAX_T]) {
        let per = self.n.pow(k as u32);
        let mask = self.levels[k].types[idx / per];
        let mut code = idx % per;
        let mut a = [0; MAX_T];
        for j in (0..self.s()).rev().filter(|&j| mask >> j & 1 == 1) {
            a[j] = code % self.n;
            code /= self.n;
        }
        (mask, a)
    }

    fn base(&self, mask: u32, a: &[usize; MAX_T]) -> usize {
        let k = mask.count_ones() as usize;
        self.levels[k].blocks.range(self.face_index(mask, a)).start
    }

    fn assemble_delta(&self, k: usize) -> FieldMatrix {
        let upper = k + 1;
        let mut rows = Vec::with_capacity(self.dim(upper));
        for idx in 0..self.face_count(upper) {
            let (mask, a) = self.face_at(upper, idx);
            let small = &self.coords[mask as usize];
            for c in 0..small.size() {
                let mut row = Vec::new();
                for j in (0..self.s()).filter(|&j| mask >> j & 1 == 1) {
                    let lo = mask & !(1 << j);
                    let big = &self.coords[lo as usize];
                    let base = self.base(lo, &a);
                    let h = self.codes.h(j);
                    let mut d = small.decompose(c);
                    for r in 0..h.rows() {
                        let v = h.get(r, a[j]);
                        if v != 0 {
                            d[j] = r;
                            row.push(((base + big.compose(&d)) as u32, v));
                        }
                    }
                }
                row.sort_unstable_by_key(|e| e.0);
                rows.push(row);
            }
        }
        FieldMatrix::from_sorted_rows(self.dim(k), rows)
    }

    fn assemble_partial(&self, k: usize) -> FieldMatrix {
        let lower = k - 1;
        let mut rows = Vec::with_capacity(self.dim(lower));
        for idx in 0..self.face_count(lower) {
            let (mask, a) = self.face_at(lower, idx);
            let big = &self.coords[mask as usize];
            for c in 0..big.size() {
                let d = big.decompose(c);
                let mut row = Vec::new();
                for j in (0..self.s()).filter(|&j| mask >> j & 1 == 0) {
                    let hi = mask | 1 << j;
                    let small = &self.coords[hi as usize];
                    for aj in 0..self.n {
                        let v = self.codes.h(j).get(d[j], aj);
                        if v != 0 {
                            let mut au = a;
                            au[j] = aj;
                            row.push(((self.base(hi, &au) + small.compose(&d)) as u32, v));
                        }
                    }
                }
                row.sort_unstable_by_key(|e| e.0);
                rows.push(row);
            }
        }
        FieldMatrix::from_sorted_rows(self.dim(k), rows)
    }

    /// dim C_k = Σ_{|T|=k} n^k ∏_{i∈S−T} m_i.
    pub fn dim_formula(&self, k: usize) -> usize {
        let s = self.s();
        let all: Vec<usize> = (0..s).collect();
        subsets_of(&all, k)
            .iter()
            .map(|&t| self.n.pow(k as u32) * (0..s).filter(|&j| t >> j & 1 == 0).map(|j| self.codes.m(j)).product::<usize>())
            .sum()
    }

    /// Chain conditions, adjointness and dimensions.
    pub fn verify(&self) -> Report {
        let f = self.field();
        let s = self.s();
        let mut rep = Report::new();
        let tag = format!("{:?}", self.dirs);
        for k in 0..=s {
            rep.check(
                format!("local.dim.{tag}.{k}"),
                "local chain dimension",
                self.dim(k) == self.dim_formula(k),
                json!({"dirs": self.dirs, "level": k, "dim": self.dim(k), "formula": self.dim_formula(k)}),
            );
        }
        for k in 1..s {
            let pp = self.partial(k).unwrap().mul(f, self.partial(k + 1).unwrap());
            let dd = self.delta(k).unwrap().mul(f, self.delta(k - 1).unwrap());
            rep.check(format!("local.chain.{tag}.{k}"), "local boundary squares to zero", pp.is_zero() && dd.is_zero(), json!({"level": k}));
        }
        for k in 0..s {
            let ok = self.delta(k).unwrap().transpose() == *self.partial(k + 1).unwrap();
            rep.check(format!("local.adjoint.{tag}.{k}"), "local coboundary is the transpose of boundary", ok, json!({"level": k}));
        }
        rep
    }
}

/// rank ∂_{i+1} = dim ker ∂_i for i < |S|; the top homology is reported against ∏(n − m_j).
pub fn exactness_check(l: &LocalComplex) -> Report {
    let f = l.field();
    let s = l.s();
    let mut rep = Report::new();
    let ranks: Vec<usize> = (1..=s).map(|k| rank(f, l.partial(k).unwrap())).collect();
    let rank_of = |k: usize| if k == 0 || k > s { 0 } else { ranks[k - 1] };
    for i in 0..s {
        let ker = l.dim(i) - rank_of(i);
        let im = rank_of(i + 1);
        rep.check(
            format!("local.exact.{:?}.{i}", l.dirs()),
            "local complex exact below the top level",
            ker == im,
            json!({"dirs": l.dirs(), "level": i, "dim_ker": ker, "rank_next": im}),
        );
    }
    let top = l.dim(s) - rank_of(s);
    let expect: usize = (0..s).map(|j| l.n() - l.codes().m(j)).product();
    rep.check(
        format!("local.top_homology.{:?}", l.dirs()),
        "top-level cycles form the tensor code",
        top == expect,
        json!({"dirs": l.dirs(), "dim_ker_top": top, "tensor_dim": expect}),
    );
    rep
}

/// ⊗_{j∈S} ker h_j as vectors on the top level C_{|S|}(L_S).
pub fn tensor_kernel_basis(l: &LocalComplex) -> Vec<Vec<Gf>> {
    let f = l.field();
    let s = l.s();
    let kers: Vec<Vec<Vec<Gf>>> = (0..s).map(|j| kernel_basis_dense(f, l.codes().h(j))).collect();
    let counts: Vec<usize> = kers.iter().map(|k| k.len()).collect();
    let total: usize = counts.iter().product();
    let top = l.dim(s);
    (0..total)
        .map(|mut t| {
            let mut pick = vec![0; s];
            for j in (0..s).rev() {
                pick[j] = t % counts[j];
                t /= counts[j];
            }
            (0..top)
                .map(|idx| {
                    let (_, a) = l.face_at(s, idx);
                    (0..s).fold(1, |acc, j| f.mul(acc, kers[j][pick[j]][a[j]]))
                })
                .collect::<Vec<Gf>>()
        })
        .collect()
}

/// Compares span(tensor basis) with ker ∂_{|S|} by ranks.
pub fn tensor_kernel_check(l: &LocalComplex) -> Report {
    let f = l.field();
    let s = l.s();
    let tens = tensor_kernel_basis(l);
    let ker = kernel_basis_dense(f, l.partial(s).unwrap());
    let dim = l.dim(s);
    let r = |rows: &[Vec<Gf>]| DenseMatrix::from_row_vecs(dim, rows).rank(f);
    let joint: Vec<Vec<Gf>> = tens.iter().chain(&ker).cloned().collect();
    let (rt, rk, rj) = (r(&tens), r(&ker), r(&joint));
    let mut rep = Report::new();
    rep.check(
        format!("local.tensor_code.{:?}", l.dirs()),
        "top cycles equal the tensor of local kernels",
        rt == tens.len() && rt == rk && rk == rj,
        json!({"dirs": l.dirs(), "tensor_rank": rt, "kernel_dim": rk, "joint_rank": rj}),
    );
    rep
}

/// Whether no y ∈ C^{k−1} lowers |x + δy|, decided by enumerating the coset.
pub fn is_minimal(l: &LocalComplex, x: &[Gf], k: usize, budget: usize) -> Result<bool, LocalError> {
    if k > l.s() {
        return Err(LocalError::LevelOutOfRange { level: k, s: l.s() });
    }
    if k == 0 {
        return Ok(true);
    }
    let f = l.field();
    let im = cosets::column_basis(f, l.delta(k - 1)?);
    let w = l.blocks(k).weight(x);
    let mut minimal = true;
    cosets::enumerate_span(f, x, &im, l.blocks(k), budget, |_, wy, _| {
        if wy < w {
            minimal = false;
        }
        minimal
    })
    .map_err(|_| LocalError::Undecidable { budget })?;
    Ok(minimal)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exhaustive,
    WeightCapped,
    Vacuous,
}

#[derive(Clone, Debug, Serialize)]
pub struct RobustnessEstimate {
    pub level: usize,
    pub lower_bound: Ratio,
    pub upper_bound: Ratio,
    pub method: Method,
    pub partial: bool,
    /// Coset distance certified up to this weight.
    pub searched_weight: usize,
    pub witness: Option<Vec<Gf>>,
    /// (|δ_S x|, |x|) for the witness.
    pub witness_weights: Option<(usize, usize)>,
}

impl RobustnessEstimate {
    fn vacuous(level: usize) -> Self {
        RobustnessEstimate {
            level,
            lower_bound: Ratio::INFINITY,
            upper_bound: Ratio::INFINITY,
            method: Method::Vacuous,
            partial: false,
            searched_weight: 0,
            witness: None,
            witness_weights: None,
        }
    }
}

/// κ_{|S|,k}: min over minimal x ≠ 0 of |δ_S x| / (n|x|).
pub fn robustness(l: &LocalComplex, k: usize, budget: usize) -> Result<RobustnessEstimate, LocalError> {
    if k >= l.s() {
        return Err(LocalError::LevelOutOfRange { level: k, s: l.s() });
    }
    let f = l.field();
    let n = l.n() as u64;
    let res = cosets::min_ratio_auto(f, l.delta(k)?, l.blocks(k), l.blocks(k + 1), budget)?;
    let Some(best) = res.best else {
        if res.complete {
            return Ok(RobustnessEstimate::vacuous(k));
        }
        return Ok(RobustnessEstimate {
            level: k,
            lower_bound: Ratio::new(1, n * l.face_count(k) as u64),
            upper_bound: Ratio::INFINITY,
            method: Method::WeightCapped,
            partial: true,
            searched_weight: res.searched_weight,
            witness: None,
            witness_weights: None,
        });
    };
    let upper = Ratio::new(best.numer as u64, n * best.denom as u64);
    let lower = if res.complete { upper } else { upper.min(Ratio::new(1, n * l.face_count(k) as u64)) };
    Ok(RobustnessEstimate {
        level: k,
        lower_bound: lower,
        upper_bound: upper,
        method: if res.complete { Method::Exhaustive } else { Method::WeightCapped },
        partial: !res.complete,
        searched_weight: res.searched_weight,
        witness_weights: Some((best.numer, best.denom)),
        witness: Some(best.x),
    })
}

/// Independent re-check of a witness: minimal by coset enumeration and achieving its ratio.
pub fn verify_witness(l: &LocalComplex, est: &RobustnessEstimate, budget: usize) -> Result<bool, LocalError> {
    let (Some(x), Some((dw, xw))) = (&est.witness, est.witness_weights) else {
        return Ok(est.method == Method::Vacuous || est.partial);
    };
    let k = est.level;
    let dx = l.delta(k)?.mul_vec(l.field(), x);
    let ok_weights = l.blocks(k).weight(x) == xw && l.blocks(k + 1).weight(&dx) == dw && xw > 0;
    let ok_ratio = Ratio::new(dw as u64, (l.n() * xw) as u64) == est.upper_bound;
    Ok(ok_weights && ok_ratio && is_minimal(l, x, k, budget)?)
}

/// ρ = κ_{|S|,|S|−1}.
pub fn product_expansion(l: &LocalComplex, budget: usize) -> Result<RobustnessEstimate, LocalError> {
    robustness(l, l.s() - 1, budget)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Primal,
    Dual,
}

#[derive(Clone, Debug, Serialize)]
pub struct RobustnessCell {
    pub side: Side,
    pub dirs: Vec<usize>,
    pub estimate: RobustnessEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoWayReport {
    pub cells: Vec<RobustnessCell>,
    /// min lower bound over non-vacuous cells.
    pub kappa_lower: Ratio,
    /// min upper bound over non-vacuous cells.
    pub kappa_upper: Ratio,
    pub partial: bool,
}

/// Robustness of every (S, k) cell for {h_i} and {h_i^⊥}.
pub fn two_way_robustness(codes: &LocalCodes, budget: usize) -> Result<TwoWayReport, LocalError> {
    let t = codes.t();
    let all: Vec<usize> = (0..t).collect();
    let sides = [(Side::Primal, codes.clone()), (Side::Dual, codes.dual())];
    let mut jobs = Vec::new();
    for (side, c) in &sides {
        for size in 1..=t {
            for mask in subsets_of(&all, size) {
                let dirs: Vec<usize> = (0..t).filter(|&j| mask >> j & 1 == 1).collect();
                jobs.push((*side, c, dirs));
            }
        }
    }
    let cells: Vec<Vec<RobustnessCell>> = jobs
        .par_iter()
        .map(|(side, c, dirs)| -> Result<Vec<RobustnessCell>, LocalError> {
            let degenerate = dirs.iter().any(|&j| c.m(j) == 0);
            let l = if degenerate { None } else { Some(LocalComplex::new(dirs, c)?) };
            (0..dirs.len())
                .map(|k| {
                    let estimate = match &l {
                        None => RobustnessEstimate::vacuous(k),
                        Some(l) => robustness(l, k, budget)?,
                    };
                    Ok(RobustnessCell { side: *side, dirs: dirs.clone(), estimate })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let cells: Vec<RobustnessCell> = cells.into_iter().flatten().collect();
    let live = cells.iter().filter(|c| c.estimate.method != Method::Vacuous);
    let kappa_lower = live.clone().map(|c| c.estimate.lower_bound).min().unwrap_or(Ratio::INFINITY);
    let kappa_upper = live.map(|c| c.estimate.upper_bound).min().unwrap_or(Ratio::INFINITY);
    let partial = cells.iter().any(|c| c.estimate.partial);
    Ok(TwoWayReport { cells, kappa_lower, kappa_upper, partial })
}

/// Every m×n matrix in reduced row echelon form of rank m (one per row space).
pub fn echelon_matrices(f: &Field, m: usize, n: usize) -> Vec<FieldMatrix> {
    let q = f.order();
    let cols: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for pmask in subsets_of(&cols, m) {
        let piv: Vec<usize> = (0..n).filter(|&c| pmask >> c & 1 == 1).collect();
        let free: Vec<(usize, usize)> =
            (0..m).flat_map(|r| ((piv[r] + 1)..n).filter(|c| pmask >> c & 1 == 0).map(move |c| (r, c))).collect();
        let count = q.pow(free.len() as u32);
        for code in 0..count {
            let mut trip: Vec<(usize, usize, Gf)> = piv.iter().enumerate().map(|(r, &c)| (r, c, 1)).collect();
            let mut rest = code;
            for &(r, c) in &free {
                trip.push((r, c, (rest % q) as Gf));
                rest /= q;
            }
            out.push(FieldMatrix::from_triplets(m, n, trip));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct TupleSearchParams {
    pub t: usize,
    pub n: usize,
    pub ms: Vec<usize>,
    pub e: u32,
    pub trials: usize,
    pub budget: usize,
    pub seed: u64,
    /// Enumerate every tuple of row spaces regardless of `trials`.
    pub exhaust: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TupleScore {
    pub index: usize,
    pub kappa_lower: Ratio,
    pub kappa_upper: Ratio,
    pub partial: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TupleSearchResult {
    pub exhaustive: bool,
    pub evaluated: usize,
    /// Best tuple as dense rows per direction.
    pub best: Option<Vec<Vec<Vec<Gf>>>>,
    pub best_kappa: Option<Ratio>,
    pub best_report: Option<TwoWayReport>,
    /// Count of tuples per two-way κ (lower bound), keyed by its decimal string.
    pub census: BTreeMap<String, usize>,
    pub scores: Vec<TupleScore>,
}

/// Search over full-row-rank tuples for the best two-way robustness.
pub fn search_robust_tuple(p: &TupleSearchParams) -> Result<TupleSearchResult, LocalError> {
    let f = Field::new(p.e).map_err(|_| LocalError::BadDirections)?;
    if p.ms.len() != p.t || p.t == 0 || p.t > MAX_T {
        return Err(LocalError::BadDirections);
    }
    if let Some(&m) = p.ms.iter().find(|&&m| m > p.n) {
        return Err(LocalError::NoFullRankTuple { m, n: p.n });
    }
    let empty = TupleSearchResult {
        exhaustive: false,
        evaluated: 0,
        best: None,
        best_kappa: None,
        best_report: None,
        census: BTreeMap::new(),
        scores: vec![],
    };
    if p.trials == 0 && !p.exhaust {
        return Ok(empty);
    }
    // the number of row spaces, capped to keep enumeration tables small
    const ENUM_CAP: usize = 1 << 20;
    let q = f.order();
    let gauss = |m: usize| -> usize {
        let mut num = 1f64;
        for i in 0..m {
            num *= (q.pow((p.n - i) as u32) - 1) as f64 / (q.pow((i + 1) as u32) - 1) as f64;
        }
        num.round() as usize
    };
    let per: Vec<usize> = p.ms.iter().map(|&m| gauss(m)).collect();
    let total = per.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c)).unwrap_or(usize::MAX);
    let exhaustive = (p.exhaust || total <= p.trials) && total <= ENUM_CAP;
    let tuples: Vec<Vec<FieldMatrix>> = if exhaustive {
        let tables: Vec<Vec<FieldMatrix>> = p.ms.iter().map(|&m| echelon_matrices(&f, m, p.n)).collect();
        (0..total)
            .map(|mut idx| {
                let mut pick = vec![0; p.t];
                for j in (0..p.t).rev() {
                    pick[j] = idx % per[j];
                    idx /= per[j];
                }
                pick.iter().enumerate().map(|(j, &i)| tables[j][i].clone()).collect()
            })
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        (0..p.trials)
            .map(|_| {
                let c = LocalCodes::random(f.clone(), p.n, &p.ms, &mut rng).expect("shapes checked");
                (0..p.t).map(|j| c.h(j).clone()).collect()
            })
            .collect()
    };
    let reports: Vec<TwoWayReport> = tuples
        .par_iter()
        .map(|h| two_way_robustness(&LocalCodes::new(f.clone(), h.clone())?, p.budget))
        .collect::<Result<_, _>>()?;
    let mut census = BTreeMap::new();
    let mut scores = Vec::with_capacity(reports.len());
    let mut best: Option<usize> = None;
    for (i, r) in reports.iter().enumerate() {
        *census.entry(r.kappa_lower.to_string()).or_insert(0) += 1;
        scores.push(TupleScore { index: i, kappa_lower: r.kappa_lower, kappa_upper: r.kappa_upper, partial: r.partial });
        if best.map_or(true, |b| r.kappa_lower > reports[b].kappa_lower) {
            best = Some(i);
        }
    }
    let dense = |h: &FieldMatrix| -> Vec<Vec<Gf>> {
        let d = h.to_dense();
        (0..d.rows()).map(|r| d.row(r).to_vec()).collect()
    };
    Ok(TupleSearchResult {
        exhaustive,
        evaluated: reports.len(),
        best: best.map(|b| tuples[b].iter().map(dense).collect()),
        best_kappa: best.map(|b| reports[b].kappa_lower),
        best_report: best.map(|b| reports[b].clone()),
        census,
        scores,
    })
}

/// Matrices of C(X_{≥f}) against C(L_{S̄}) under the local–global face correspondence.
pub fn loc_glob_check(sc: &SheafComplex, f: &Face) -> Result<bool, LocalError> {
    let geom = sc.geometry();
    let t = sc.t();
    let dirs: Vec<usize> = (0..t).filter(|&j| f.bit(j).is_some()).collect();
    if dirs.is_empty() {
        return Ok(true);
    }
    let l = LocalComplex::new(&dirs, sc.codes())?;
    let to_global = |mask: u32, a: &[usize; MAX_T]| -> Face {
        let mut u = *f;
        for (lj, &j) in dirs.iter().enumerate() {
            if mask >> lj & 1 == 1 {
                u.set_label(j, Label::Gen(a[lj]));
                if f.bit(j) == Some(1) {
                    let p = geom.permset(j);
                    u.g = p.apply(p.inverse_of(a[lj]), u.g);
                }
            }
        }
        u
    };
    let d0 = f.dim();
    for k in 0..l.s() {
        let gd = sc.delta(d0 + k)?;
        let ld = l.delta(k)?;
        // global coordinate → local coordinate on the lower level
        let mut col_map: HashMap<usize, usize> = HashMap::new();
        for idx in 0..l.face_count(k) {
            let (mask, a) = l.face_at(k, idx);
            let g = sc.face_coords(&to_global(mask, &a));
            let lr = l.blocks(k).range(idx);
            if g.len() != lr.len() {
                return Ok(false);
            }
            for (gc, lc) in g.zip(lr) {
                col_map.insert(gc, lc);
            }
        }
        for idx in 0..l.face_count(k + 1) {
            let (mask, a) = l.face_at(k + 1, idx);
            let g = sc.face_coords(&to_global(mask, &a));
            let lr = l.blocks(k + 1).range(idx);
            if g.len() != lr.len() {
                return Ok(false);
            }
            for (gr, lrow) in g.zip(lr) {
                let mut mapped: Vec<(usize, Gf)> = gd.row(gr).filter_map(|(c, v)| col_map.get(&c).map(|&lc| (lc, v))).collect();
                mapped.sort_unstable();
                let local: Vec<(usize, Gf)> = ld.row(lrow).collect();
                if mapped != local {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
