//! Averaging operators, the walks W^{(k,ℓ)} and Op^{(k,ℓ)} on X(k), and the
//! neighborhood bookkeeping behind their expansion bound.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::builders::{components, estimate_expansion, BuildError};
use crate::geometry::{binomial, ComplexGeometry, Face, Label};
use crate::report::Report;

/// Largest |X(k)| for which walks are materialized.
pub const EXPLICIT_LIMIT: usize = 20_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WalkError {
    #[error("levels k = {k}, l = {l} invalid for t = {t}")]
    LevelOutOfRange { k: usize, l: usize, t: usize },
    #[error(transparent)]
    Build(#[from] BuildError),
}

fn check_levels(x: &ComplexGeometry, k: usize, l: usize) -> Result<(), WalkError> {
    if l > k || k >= x.t() {
        Err(WalkError::LevelOutOfRange { k, l, t: x.t() })
    } else {
        Ok(())
    }
}

/// Unsigned averaging operator between adjacent levels, as neighbor lists with a
/// uniform weight.
#[derive(Clone, Debug)]
pub struct Averaging {
    pub rows: Vec<Vec<u32>>,
    pub weight: f64,
}

impl Averaging {
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&j| phi[j as usize]).sum::<f64>() * self.weight).collect()
    }
}

/// (D, U) at `level` ≥ 1: D maps functions on X(level) to X(level−1) by averaging
/// over up-covers, U goes back by averaging over down-covers.
pub fn down_up_ops(x: &ComplexGeometry, level: usize) -> Result<(Averaging, Averaging), WalkError> {
    if level == 0 || level > x.t() {
        return Err(WalkError::LevelOutOfRange { k: level, l: level, t: x.t() });
    }
    let rows = |k: usize, up: bool| -> Vec<Vec<u32>> {
        (0..x.level_size(k))
            .into_par_iter()
            .map(|i| {
                let f = x.face_at(k, i);
                let cov = if up { x.covers_up(&f) } else { x.covers_down(&f) };
                cov.iter().map(|(c, _)| x.index_of(c) as u32).collect()
            })
            .collect()
    };
    let d = Averaging { rows: rows(level - 1, true), weight: 1.0 / ((x.t() - level + 1) * x.n()) as f64 };
    let u = Averaging { rows: rows(level, false), weight: 1.0 / (2 * level) as f64 };
    Ok((d, u))
}

/// max |E φ'·Dφ − E Uφ'·φ| over random pairs.
pub fn adjointness_deviation(x: &ComplexGeometry, level: usize, pairs: usize, seed: u64) -> Result<f64, WalkError> {
    let (d, u) = down_up_ops(x, level)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (x.level_size(level - 1), x.level_size(level));
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let phi: Vec<f64> = (0..hi).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let psi: Vec<f64> = (0..lo).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let left = psi.iter().zip(d.apply(&phi)).map(|(a, b)| a * b).sum::<f64>() / lo as f64;
        let right = u.apply(&psi).iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>() / hi as f64;
        worst = worst.max((left - right).abs());
    }
    Ok(worst)
}

/// The partition of (𝔡∘𝔲)X_{≥v}(k), each part sorted by canonical index.
#[derive(Clone, Debug)]
pub struct NeighborhoodSets {
    pub above: Vec<Face>,
    pub nb: Vec<Face>,
    pub op: Vec<Face>,
    /// (𝔡∘𝔲)X_{≥v}(k) as computed by the two-step incidence.
    pub down_up: Vec<Face>,
}

impl NeighborhoodSets {
    /// Disjointness and union, plus agreement of `above` with the up-link.
    pub fn partition_holds(&self, x: &ComplexGeometry, v: &Face, k: usize) -> bool {
        let mut link = x.link_up(v, k).unwrap_or_default();
        link.sort_by_key(|f| x.index_of(f));
        let mut all: Vec<Face> = self.above.iter().chain(&self.nb).chain(&self.op).copied().collect();
        all.sort_by_key(|f| x.index_of(f));
        let before = all.len();
        all.dedup();
        before == all.len() && all == self.down_up && link == self.above
    }
}

/// X_{≥v}(k), Nb_v(k) and Op_v(k) for dim v ≤ k < t.
pub fn neighborhoods(x: &ComplexGeometry, v: &Face, k: usize) -> Result<NeighborhoodSets, WalkError> {
    check_levels(x, k, v.dim())?;
    let mut du: Vec<Face> = Vec::new();
    for u in x.link_up(v, k + 1).expect("level checked") {
        du.extend(x.covers_down(&u).into_iter().map(|(f, _)| f));
    }
    du.sort_by_key(|f| x.index_of(f));
    du.dedup();
    let vv: HashSet<Face> = x.vertices(v).into_iter().collect();
    let mut out = NeighborhoodSets { above: vec![], nb: vec![], op: vec![], down_up: du.clone() };
    for f in du {
        if x.is_below(v, &f) {
            out.above.push(f);
        } else if x.vertices(&f).iter().any(|w| vv.contains(w)) {
            out.nb.push(f);
        } else {
            out.op.push(f);
        }
    }
    Ok(out)
}

fn nb_table(x: &ComplexGeometry, level: usize, k: usize) -> Vec<HashSet<Face>> {
    (0..x.level_size(level))
        .into_par_iter()
        .map(|i| neighborhoods(x, &x.face_at(level, i), k).expect("levels checked").nb.into_iter().collect())
        .collect()
}

/// a_{k,ℓ} by a full scan over triples (v_ℓ, v_k, v'_k).
pub fn a_coeff(x: &ComplexGeometry, k: usize, l: usize) -> Result<usize, WalkError> {
    if l >= k || k >= x.t() {
        return Err(WalkError::LevelOutOfRange { k, l, t: x.t() });
    }
    let nb = nb_table(x, l + 1, k);
    let best = (0..x.level_size(l))
        .into_par_iter()
        .map(|i| {
            let vl = x.face_at(l, i);
            let above = x.link_up(&vl, k).expect("level checked");
            let mut best = 0;
            for vk in &above {
                let mids: Vec<usize> = x
                    .link_down(vk, l + 1)
                    .expect("level checked")
                    .into_iter()
                    .filter(|m| x.is_below(&vl, m))
                    .map(|m| x.index_of(&m))
                    .collect();
                for vk2 in &above {
                    best = best.max(mids.iter().filter(|&&m| nb[m].contains(vk2)).count());
                }
            }
            best
        })
        .max()
        .unwrap_or(0);
    Ok(best)
}

/// Checks the multiset inclusion ⊔_{v_{ℓ+1}⪯v_k} Nb_{v_{ℓ+1}}(k) ⊆ a·⊔_{v_ℓ≺v_k} X_{≥v_ℓ}(k)
/// at every v_k; returns the number of faces v_k where it fails.
pub fn nb_bound_violations(x: &ComplexGeometry, k: usize, l: usize, a: usize) -> Result<usize, WalkError> {
    if l >= k || k >= x.t() {
        return Err(WalkError::LevelOutOfRange { k, l, t: x.t() });
    }
    let nb = nb_table(x, l + 1, k);
    let bad = (0..x.level_size(k))
        .into_par_iter()
        .filter(|&i| {
            let vk = x.face_at(k, i);
            let mut lhs: HashMap<Face, usize> = HashMap::new();
            for m in x.link_down(&vk, l + 1).expect("level checked") {
                for f in &nb[x.index_of(&m)] {
                    *lhs.entry(*f).or_default() += 1;
                }
            }
            let mut rhs: HashMap<Face, usize> = HashMap::new();
            for w in x.link_down(&vk, l).expect("level checked") {
                for f in x.link_up(&w, k).expect("level checked") {
                    *rhs.entry(f).or_default() += a;
                }
            }
            lhs.iter().any(|(f, &c)| rhs.get(f).copied().unwrap_or(0) < c)
        })
        .count();
    Ok(bad)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkKind {
    W,
    Op,
}

/// Rows of integer weights over a common denominator.
#[derive(Clone, Debug)]
pub enum WalkRepr {
    Explicit { denom: u64, rows: Vec<Vec<(u32, u64)>> },
    Sampler,
}

#[derive(Clone, Debug)]
pub struct WalkOperator {
    pub kind: WalkKind,
    pub k: usize,
    pub l: usize,
    /// Number of paths leaving any face: C(k,ℓ)C(t−ℓ,k−ℓ)(t−ℓ)2^{k−ℓ}n^{k+1−ℓ}.
    pub normalizer: u64,
    /// Path counts; for W these are also the Markov numerators over `normalizer`.
    pub adj: Option<Vec<Vec<(u32, u64)>>>,
    pub repr: WalkRepr,
}

pub fn normalizer(t: usize, n: usize, k: usize, l: usize) -> u64 {
    (binomial(k, l) * binomial(t - l, k - l) * (t - l) * (1 << (k - l)) * n.pow((k + 1 - l) as u32)) as u64
}

/// The face reached from v by one parallel step in direction i with generator a.
pub fn parallel_step(x: &ComplexGeometry, v: &Face, i: usize, a: usize) -> Face {
    let b = v.bit(i).expect("step direction must be free");
    let mut w = *v;
    w.g = x.permset(i).apply(a, v.g);
    w.set_label(i, Label::Bit(1 - b));
    w
}

fn free_dirs(x: &ComplexGeometry, v: &Face) -> Vec<usize> {
    (0..x.t()).filter(|&j| v.bit(j).is_some()).collect()
}

fn sorted_row(counts: HashMap<u32, u64>) -> Vec<(u32, u64)> {
    let mut row: Vec<(u32, u64)> = counts.into_iter().collect();
    row.sort_unstable();
    row
}

fn w_row(x: &ComplexGeometry, f: &Face, k: usize, l: usize) -> Vec<(u32, u64)> {
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for v in x.link_down(f, l).expect("level checked") {
        for i in free_dirs(x, &v) {
            for a in 0..x.n() {
                let v2 = parallel_step(x, &v, i, a);
                for f2 in x.link_up(&v2, k).expect("level checked") {
                    *counts.entry(x.index_of(&f2) as u32).or_default() += 1;
                }
            }
        }
    }
    sorted_row(counts)
}

pub fn walk_w(x: &ComplexGeometry, k: usize, l: usize) -> Result<WalkOperator, WalkError> {
    walk_w_with(x, k, l, EXPLICIT_LIMIT)
}

pub fn walk_w_with(x: &ComplexGeometry, k: usize, l: usize, limit: usize) -> Result<WalkOperator, WalkError> {
    check_levels(x, k, l)?;
    let z = normalizer(x.t(), x.n(), k, l);
    if x.level_size(k) > limit {
        return Ok(WalkOperator { kind: WalkKind::W, k, l, normalizer: z, adj: None, repr: WalkRepr::Sampler });
    }
    let rows: Vec<Vec<(u32, u64)>> =
        (0..x.level_size(k)).into_par_iter().map(|i| w_row(x, &x.face_at(k, i), k, l)).collect();
    Ok(WalkOperator { kind: WalkKind::W, k, l, normalizer: z, adj: Some(rows.clone()), repr: WalkRepr::Explicit { denom: z, rows } })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn walk_op(x: &ComplexGeometry, k: usize, l: usize) -> Result<WalkOperator, WalkError> {
    walk_op_with(x, k, l, EXPLICIT_LIMIT)
}

pub fn walk_op_with(x: &ComplexGeometry, k: usize, l: usize, limit: usize) -> Result<WalkOperator, WalkError> {
    check_levels(x, k, l)?;
    let z = normalizer(x.t(), x.n(), k, l);
    if x.level_size(k) > limit {
        return Ok(WalkOperator { kind: WalkKind::Op, k, l, normalizer: z, adj: None, repr: WalkRepr::Sampler });
    }
    let ops: Vec<Vec<u32>> = (0..x.level_size(l))
        .into_par_iter()
        .map(|i| {
            let op = neighborhoods(x, &x.face_at(l, i), k).expect("levels checked").op;
            op.iter().map(|f| x.index_of(f) as u32).collect()
        })
        .collect();
    let lcm = ops.iter().map(|o| o.len() as u64).filter(|&s| s > 0).fold(1u64, |acc, s| acc / gcd(acc, s) * s);
    let subfaces = (binomial(k, l) << (k - l)) as u64;
    let built: Vec<(Vec<(u32, u64)>, Vec<(u32, u64)>)> = (0..x.level_size(k))
        .into_par_iter()
        .map(|i| {
            let f = x.face_at(k, i);
            let mut adj: HashMap<u32, u64> = HashMap::new();
            let mut mk: HashMap<u32, u64> = HashMap::new();
            for v in x.link_down(&f, l).expect("level checked") {
                let o = &ops[x.index_of(&v)];
                for &j in o {
                    *adj.entry(j).or_default() += 1;
                    *mk.entry(j).or_default() += lcm / o.len() as u64;
                }
            }
            (sorted_row(adj), sorted_row(mk))
        })
        .collect();
    let (adj, rows): (Vec<_>, Vec<_>) = built.into_iter().unzip();
    Ok(WalkOperator { kind: WalkKind::Op, k, l, normalizer: z, adj: Some(adj), repr: WalkRepr::Explicit { denom: subfaces * lcm, rows } })
}

impl WalkOperator {
    /// Every row sums to the denominator (None in sampler mode).
    pub fn is_markov(&self) -> Option<bool> {
        match &self.repr {
            WalkRepr::Explicit { denom, rows } => Some(rows.iter().all(|r| r.iter().map(|e| e.1).sum::<u64>() == *denom)),
            WalkRepr::Sampler => None,
        }
    }

    pub fn is_symmetric(&self) -> Option<bool> {
        let WalkRepr::Explicit { rows, .. } = &self.repr else { return None };
        let mut fwd: Vec<(u32, u32, u64)> = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            fwd.extend(r.iter().map(|&(j, w)| (i as u32, j, w)));
        }
        let mut rev: Vec<(u32, u32, u64)> = fwd.iter().map(|&(i, j, w)| (j, i, w)).collect();
        rev.sort_unstable();
        Some(fwd == rev)
    }

    /// Column sums equal the denominator as well.
    pub fn is_doubly_stochastic(&self) -> Option<bool> {
        let WalkRepr::Explicit { denom, rows } = &self.repr else { return None };
        let mut col = vec![0u64; rows.len()];
        for r in rows {
            for &(j, w) in r {
                col[j as usize] += w;
            }
        }
        Some(self.is_markov()? && col.iter().all(|&c| c == *denom))
    }

    /// Row sums of the path counts, which must all equal the normalizer (W only).
    pub fn normalizer_holds(&self) -> Option<bool> {
        Some(self.adj.as_ref()?.iter().all(|r| r.iter().map(|e| e.1).sum::<u64>() == self.normalizer))
    }

    /// Total diagonal mass of the Markov operator, as (numerator, denominator).
    pub fn diagonal_mass(&self) -> Option<(u64, u64)> {
        let WalkRepr::Explicit { denom, rows } = &self.repr else { return None };
        let num = rows.iter().enumerate().map(|(i, r)| r.iter().filter(|e| e.0 == i as u32).map(|e| e.1).sum::<u64>()).sum();
        Some((num, *denom))
    }

    /// Dense Markov matrix in floating point.
    pub fn to_dense(&self) -> Option<nalgebra::DMatrix<f64>> {
        let WalkRepr::Explicit { denom, rows } = &self.repr else { return None };
        let mut m = nalgebra::DMatrix::zeros(rows.len(), rows.len());
        for (i, r) in rows.iter().enumerate() {
            for &(j, w) in r {
                m[(i, j as usize)] = w as f64 / *denom as f64;
            }
        }
        Some(m)
    }

    /// Σ_{f,f'∈A} adj[f][f'] for a sorted index set A.
    pub fn adj_form(&self, a: &[usize]) -> Option<u64> {
        Some(pair_sum(self.adj.as_ref()?, a))
    }

    /// One simulated step from f.
    pub fn sample_step(&self, x: &ComplexGeometry, f: &Face, rng: &mut impl Rng) -> Face {
        let subs = x.link_down(f, self.l).expect("level checked");
        let v = subs[rng.gen_range(0..subs.len())];
        match self.kind {
            WalkKind::W => {
                let free = free_dirs(x, &v);
                let i = free[rng.gen_range(0..free.len())];
                let v2 = parallel_step(x, &v, i, rng.gen_range(0..x.n()));
                let ups = x.link_up(&v2, self.k).expect("level checked");
                ups[rng.gen_range(0..ups.len())]
            }
            WalkKind::Op => {
                let op = neighborhoods(x, &v, self.k).expect("levels checked").op;
                op[rng.gen_range(0..op.len())]
            }
        }
    }
}

fn pair_sum(rows: &[Vec<(u32, u64)>], a: &[usize]) -> u64 {
    let mut member = vec![false; rows.len()];
    for &i in a {
        member[i] = true;
    }
    a.iter().map(|&i| rows[i].iter().filter(|e| member[e.0 as usize]).map(|e| e.1).sum::<u64>()).sum()
}

/// Entrywise Op_adj ≤ W_adj.
pub fn op_dominated(op: &WalkOperator, w: &WalkOperator) -> Option<bool> {
    let (oa, wa) = (op.adj.as_ref()?, w.adj.as_ref()?);
    Some(oa.iter().zip(wa).all(|(ro, rw)| {
        let m: HashMap<u32, u64> = rw.iter().copied().collect();
        ro.iter().all(|(j, c)| m.get(j).is_some_and(|d| d >= c))
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadForm {
    pub size: usize,
    pub value: f64,
    /// Exact value as a fraction when the walk is explicit.
    pub exact: Option<(u64, u64)>,
    /// 99% Wilson interval in sampler mode.
    pub interval: Option<(f64, f64)>,
    pub samples: usize,
}

const Z99: f64 = 2.575_829_303_548_901;

fn wilson(hits: usize, n: usize) -> (f64, f64) {
    let (n, p) = (n as f64, hits as f64 / n as f64);
    let z2 = Z99 * Z99;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z99 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// ⟨1_A, M 1_A⟩ for a sorted index set A. In sampler mode the sample count is
/// chosen so the interval width stays under 5% of `scale`.
pub fn quad_form(x: &ComplexGeometry, w: &WalkOperator, a: &[usize], scale: f64, rng: &mut impl Rng) -> QuadForm {
    match &w.repr {
        WalkRepr::Explicit { denom, rows } => {
            let num = pair_sum(rows, a);
            QuadForm { size: a.len(), value: num as f64 / *denom as f64, exact: Some((num, *denom)), interval: None, samples: 0 }
        }
        WalkRepr::Sampler => {
            if a.is_empty() {
                return QuadForm { size: 0, value: 0.0, exact: Some((0, 1)), interval: None, samples: 0 };
            }
            let s = a.len() as f64;
            let need = (Z99 * s / (0.05 * scale.max(f64::MIN_POSITIVE))).powi(2).ceil();
            let samples = need.clamp(1000.0, 1e7) as usize;
            let member: HashSet<usize> = a.iter().copied().collect();
            let mut hits = 0;
            for _ in 0..samples {
                let f = x.face_at(w.k, a[rng.gen_range(0..a.len())]);
                if member.contains(&x.index_of(&w.sample_step(x, &f, rng))) {
                    hits += 1;
                }
            }
            let (lo, hi) = wilson(hits, samples);
            QuadForm { size: a.len(), value: s * hits as f64 / samples as f64, exact: None, interval: Some((s * lo, s * hi)), samples }
        }
    }
}

/// The small-set expansion bound λ|A| + C(t,ℓ)2^{t−ℓ−1}n^ℓ|A|²/(r|X(k)|).
pub fn expansion_bound(x: &ComplexGeometry, k: usize, l: usize, size: usize, lambda: f64, r: f64) -> f64 {
    let s = size as f64;
    let c = (binomial(x.t(), l) * (1 << (x.t() - l - 1)) * x.n().pow(l as u32)) as f64;
    lambda * s + c * s * s / (r * x.level_size(k) as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadCheck {
    pub label: String,
    pub form: QuadForm,
    pub bound: f64,
    pub ok: bool,
}

pub fn quad_form_check(
    x: &ComplexGeometry,
    w: &WalkOperator,
    label: &str,
    a: &[usize],
    lambda: f64,
    r: f64,
    rng: &mut impl Rng,
) -> QuadCheck {
    let bound = expansion_bound(x, w.k, w.l, a.len(), lambda, r);
    let form = quad_form(x, w, a, bound, rng);
    let top = form.interval.map(|i| i.1).unwrap_or(form.value);
    let ok = top <= bound * (1.0 + 1e-12) + 1e-12;
    QuadCheck { label: label.to_string(), form, bound, ok }
}

/// (λ, r) taken over all directions: the largest λ and the smallest r.
pub fn expansion_params(x: &ComplexGeometry) -> Result<(f64, f64), WalkError> {
    let mut lambda = 0.0f64;
    let mut r = 1.0f64;
    for p in x.permsets() {
        let rep = estimate_expansion(x.group_size(), p)?;
        lambda = lambda.max(rep.lambda_max);
        r = r.min(rep.r);
    }
    Ok((lambda, r))
}

/// ⟨y, My⟩ ≤ λ‖y‖² + ‖y‖₁²/|V| on every component of every Cayley walk, with λ
/// the component's own second eigenvalue magnitude. Returns (violations, trials).
pub fn ac_check(x: &ComplexGeometry, trials: usize, seed: u64) -> Result<(usize, usize), WalkError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut bad, mut tried) = (0, 0);
    for p in x.permsets() {
        let rep = estimate_expansion(x.group_size(), p)?;
        for (members, spec) in components(x.group_size(), p).iter().zip(&rep.components) {
            let pos: HashMap<u32, usize> = members.iter().enumerate().map(|(i, &g)| (g, i)).collect();
            for trial in 0..trials {
                let y: Vec<f64> = match trial % 3 {
                    0 => (0..members.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    1 => (0..members.len()).map(|_| rng.gen_range(0.0..1.0)).collect(),
                    _ => (0..members.len()).map(|_| if rng.gen_bool(0.3) { 1.0 } else { 0.0 }).collect(),
                };
                let my: Vec<f64> = members
                    .iter()
                    .map(|&g| (0..p.n()).map(|a| y[pos[&p.apply(a, g)]]).sum::<f64>() / p.n() as f64)
                    .collect();
                let lhs: f64 = y.iter().zip(&my).map(|(a, b)| a * b).sum();
                let l2: f64 = y.iter().map(|v| v * v).sum();
                let l1: f64 = y.iter().map(|v| v.abs()).sum();
                let rhs = spec.lambda * l2 + l1 * l1 / members.len() as f64;
                tried += 1;
                if lhs > rhs + 1e-9 * (1.0 + rhs.abs()) {
                    bad += 1;
                }
            }
        }
    }
    Ok((bad, tried))
}

/// Link sets X_{≥v}(k) for every v of dimension ≤ k, type classes X(S) and their
/// pairwise unions, and unions of the vertex links below each k-face.
pub fn adversarial_sets(x: &ComplexGeometry, k: usize) -> Vec<(String, Vec<usize>)> {
    let sorted = |mut v: Vec<usize>| {
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut out = Vec::new();
    for lv in 0..=k {
        for i in 0..x.level_size(lv) {
            let v = x.face_at(lv, i);
            let link = x.link_up(&v, k).expect("level checked");
            out.push((format!("link.{lv}.{i}"), sorted(link.iter().map(|f| x.index_of(f)).collect())));
        }
    }
    let types = x.types(k).to_vec();
    for &m in &types {
        out.push((format!("type.{m}"), x.type_range(m).collect()));
    }
    for (p, &m) in types.iter().enumerate() {
        for &m2 in &types[p + 1..] {
            out.push((format!("types.{m}.{m2}"), sorted(x.type_range(m).chain(x.type_range(m2)).collect())));
        }
    }
    if k > 0 {
        for i in 0..x.level_size(k) {
            let u = x.face_at(k, i);
            let mut all = Vec::new();
            for v in x.vertices(&u) {
                all.extend(x.link_up(&v, k).expect("level checked").iter().map(|f| x.index_of(f)));
            }
            out.push((format!("star.{i}"), sorted(all)));
        }
    }
    out
}

/// Random sets with densities spread evenly over 1%..50%.
pub fn random_sets(x: &ComplexGeometry, k: usize, count: usize, seed: u64) -> Vec<(String, Vec<usize>)> {
    let size = x.level_size(k);
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let d = if count > 1 { 0.01 + 0.49 * i as f64 / (count - 1) as f64 } else { 0.01 };
            let m = ((d * size as f64).round() as usize).clamp(1, size);
            let mut v = sample(&mut rng, size, m).into_vec();
            v.sort_unstable();
            (format!("random.{i}"), v)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkStats {
    pub k: usize,
    pub l: usize,
    pub faces: usize,
    pub normalizer: u64,
    pub explicit: bool,
    pub markov: Option<bool>,
    pub symmetric: Option<bool>,
    pub doubly_stochastic: Option<bool>,
    pub normalizer_holds: Option<bool>,
    pub diagonal_mass: Option<(u64, u64)>,
    pub op_markov: Option<bool>,
    pub op_dominated: Option<bool>,
    pub sets_checked: usize,
    pub violations: usize,
    pub min_slack: f64,
}

/// Every walk-side check on one geometry.
pub fn walk_ledger(x: &ComplexGeometry, random_count: usize, seed: u64) -> Result<Report, WalkError> {
    let mut rep = Report::new();
    let t = x.t();
    for level in 1..=t {
        let dev = adjointness_deviation(x, level, 100, seed ^ level as u64)?;
        rep.check(format!("walks.adjoint.{level}"), "down-up adjointness", dev < 1e-12, json!({ "max_deviation": dev }));
    }
    for k in 0..t {
        for lv in 0..=k {
            let bad = (0..x.level_size(lv))
                .into_par_iter()
                .filter(|&i| {
                    let v = x.face_at(lv, i);
                    !neighborhoods(x, &v, k).expect("levels checked").partition_holds(x, &v, k)
                })
                .count();
            rep.check(format!("walks.partition.{k}.{lv}"), "down-up neighborhood partition", bad == 0, json!({ "bad": bad }));
        }
    }
    let mut table = BTreeMap::new();
    for k in 1..t {
        for l in 0..k {
            let a = a_coeff(x, k, l)?;
            table.insert(format!("{k},{l}"), a);
            rep.check(format!("walks.a_bound.{k}.{l}"), "a_{k,l} <= 2^t", a <= 1 << t, json!({ "a": a }));
            if k == t - 1 {
                rep.check(format!("walks.a_top.{l}"), "a_{t-1,l} = 1", a == 1, json!({ "a": a }));
            }
            let bad = nb_bound_violations(x, k, l, a)?;
            rep.check(format!("walks.nb_bound.{k}.{l}"), "Nb multiset covering", bad == 0, json!({ "bad": bad }));
        }
    }
    rep.check("walks.a_table", "a_{k,l} table", true, json!(table));
    let (lambda, r) = expansion_params(x)?;
    let (bad, tried) = ac_check(x, 30, seed)?;
    rep.check("walks.ac", "expander mixing primitive", bad == 0, json!({ "violations": bad, "trials": tried }));
    for k in 0..t {
        let mut sets = random_sets(x, k, random_count, seed.wrapping_add(k as u64));
        sets.push(("empty".into(), vec![]));
        sets.push(("all".into(), (0..x.level_size(k)).collect()));
        sets.extend(adversarial_sets(x, k));
        for l in 0..=k {
            let w = walk_w(x, k, l)?;
            let op = walk_op(x, k, l)?;
            let rng = ChaCha8Rng::seed_from_u64(seed ^ (k * 16 + l) as u64);
            let checks: Vec<QuadCheck> = sets
                .par_iter()
                .enumerate()
                .map(|(i, (label, a))| {
                    let mut r2 = rng.clone();
                    r2.set_stream(i as u64);
                    quad_form_check(x, &w, label, a, lambda, r, &mut r2)
                })
                .collect();
            let violations: Vec<&QuadCheck> = checks.iter().filter(|c| !c.ok).collect();
            let min_slack = checks.iter().map(|c| c.bound - c.form.value).fold(f64::INFINITY, f64::min);
            let op_sets_ok = match (&op.adj, &w.adj) {
                (Some(_), Some(_)) => sets.iter().all(|(_, a)| op.adj_form(a) <= w.adj_form(a)),
                _ => true,
            };
            let stats = WalkStats {
                k,
                l,
                faces: x.level_size(k),
                normalizer: w.normalizer,
                explicit: matches!(w.repr, WalkRepr::Explicit { .. }),
                markov: w.is_markov(),
                symmetric: w.is_symmetric(),
                doubly_stochastic: w.is_doubly_stochastic(),
                normalizer_holds: w.normalizer_holds(),
                diagonal_mass: w.diagonal_mass(),
                op_markov: op.is_markov(),
                op_dominated: op_dominated(&op, &w),
                sets_checked: checks.len(),
                violations: violations.len(),
                min_slack,
            };
            let id = format!("{k}.{l}");
            let exact_ok = stats.markov != Some(false)
                && stats.symmetric != Some(false)
                && stats.doubly_stochastic != Some(false)
                && stats.normalizer_holds != Some(false);
            rep.check(format!("walks.w_exact.{id}"), "walk W symmetric doubly stochastic", exact_ok, json!(stats));
            rep.check(
                format!("walks.op_le_w.{id}"),
                "Op_adj dominated by W_adj",
                stats.op_markov != Some(false) && stats.op_dominated != Some(false) && op_sets_ok,
                json!({ "op_markov": stats.op_markov, "entrywise": stats.op_dominated }),
            );
            let first: Vec<&str> = violations.iter().take(5).map(|c| c.label.as_str()).collect();
            rep.check(
                format!("walks.expansion.{id}"),
                "small-set expansion of W",
                violations.is_empty(),
                json!({ "lambda": lambda, "r": r, "sets": checks.len(), "violations": violations.len(), "first": first, "min_slack": min_slack }),
            );
        }
    }
    Ok(rep)
}
