//! Local-view cochains F_k(f) = C_k(X_{≥f}), the maps Δ_k and ∂_L between them,
//! and the arrow chase that fills cycles.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::ff2e::{DenseMatrix, FieldMatrix, Gf, LinalgError, Solver};
use crate::geometry::Face;
use crate::sheaf::SheafComplex;

/// An i-cochain with coefficients in F_k: per face f ∈ X(i), a vector indexed by X_{≥f}(k).
/// Only nonzero entries are stored; keys are face indices within their level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalViewCochain {
    pub level: usize,
    pub k: usize,
    pub views: BTreeMap<u32, BTreeMap<u32, Vec<Gf>>>,
}

impl LocalViewCochain {
    pub fn zero(level: usize, k: usize) -> Self {
        LocalViewCochain { level, k, views: BTreeMap::new() }
    }

    /// Block weight: faces with a nonzero view.
    pub fn weight(&self) -> usize {
        self.views.len()
    }

    pub fn is_zero(&self) -> bool {
        self.views.is_empty()
    }

    pub fn get(&self, f: usize, u: usize) -> Option<&[Gf]> {
        self.views.get(&(f as u32)).and_then(|m| m.get(&(u as u32))).map(|v| v.as_slice())
    }

    /// Adds `val` into entry (f, u), dropping it if it cancels.
    pub fn add_entry(&mut self, f: usize, u: usize, val: &[Gf]) {
        if val.iter().all(|&v| v == 0) {
            return;
        }
        let view = self.views.entry(f as u32).or_default();
        match view.entry(u as u32) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(val.to_vec());
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                for (a, &b) in e.get_mut().iter_mut().zip(val) {
                    *a ^= b;
                }
                if e.get().iter().all(|&v| v == 0) {
                    e.remove();
                }
            }
        }
        if view.is_empty() {
            self.views.remove(&(f as u32));
        }
    }

    pub fn add(&mut self, other: &LocalViewCochain) -> Result<(), AnalysisError> {
        if (self.level, self.k) != (other.level, other.k) {
            return Err(AnalysisError::ShapeMismatch(format!(
                "({}, {}) + ({}, {})",
                self.level, self.k, other.level, other.k
            )));
        }
        for (&f, view) in &other.views {
            for (&u, val) in view {
                self.add_entry(f as usize, u as usize, val);
            }
        }
        Ok(())
    }

    /// Total number of stored (face, k-face) entries.
    pub fn entries(&self) -> usize {
        self.views.values().map(|v| v.len()).sum()
    }
}

/// x restricted to every X_{≥f}(k), f ∈ X(level).
pub fn local_views(sc: &SheafComplex, x: &[Gf], k: usize, level: usize) -> Result<LocalViewCochain, AnalysisError> {
    if k > sc.t() || level > k || x.len() != sc.dim(k) {
        return Err(AnalysisError::ShapeMismatch(format!("chain of length {} at level {k}, view level {level}", x.len())));
    }
    let geom = sc.geometry();
    let blocks = sc.blocks(k);
    let mut out = LocalViewCochain::zero(level, k);
    for ui in 0..blocks.count() {
        let val = &x[blocks.range(ui)];
        if val.iter().all(|&v| v == 0) {
            continue;
        }
        let u = geom.face_at(k, ui);
        for f in geom.link_down(&u, level).expect("level checked") {
            out.add_entry(geom.index_of(&f), ui, val);
        }
    }
    Ok(out)
}

/// A random cochain: each face of the level carries a nonzero view with probability `density`.
pub fn random_view(sc: &SheafComplex, level: usize, k: usize, density: f64, rng: &mut impl Rng) -> LocalViewCochain {
    let geom = sc.geometry();
    let f = sc.field();
    let mut out = LocalViewCochain::zero(level, k);
    for fi in 0..geom.level_size(level) {
        if !rng.gen_bool(density) {
            continue;
        }
        let face = geom.face_at(level, fi);
        for u in geom.link_up(&face, k).expect("level checked") {
            if rng.gen_bool(0.5) {
                let val: Vec<Gf> = (0..sc.coords(u.type_mask()).size()).map(|_| f.random(rng)).collect();
                out.add_entry(fi, geom.index_of(&u), &val);
            }
        }
    }
    out
}

/// Δ_k: y(f')[u] = Σ_{f ⋖ f'} y(f)[u]. Pure restriction of index sets.
pub fn delta_k_apply(sc: &SheafComplex, y: &LocalViewCochain) -> Result<LocalViewCochain, AnalysisError> {
    let geom = sc.geometry();
    let mut out = LocalViewCochain::zero(y.level + 1, y.k);
    if y.level >= y.k {
        return Ok(out);
    }
    for (&fi, view) in &y.views {
        let f = geom.face_at(y.level, fi as usize);
        let ups: Vec<Face> = geom.covers_up(&f).into_iter().map(|(u, _)| u).collect();
        for (&ui, val) in view {
            let u = geom.face_at(y.k, ui as usize);
            for fp in &ups {
                if geom.is_below(fp, &u) {
                    out.add_entry(geom.index_of(fp), ui as usize, val);
                }
            }
        }
    }
    Ok(out)
}

/// ∂_L: the boundary of C(X_{≥f}) applied inside each face's view.
pub fn partial_l(sc: &SheafComplex, y: &LocalViewCochain) -> Result<LocalViewCochain, AnalysisError> {
    if y.k == 0 {
        return Err(AnalysisError::ShapeMismatch("∂_L on F_0".into()));
    }
    let geom = sc.geometry();
    let mut out = LocalViewCochain::zero(y.level, y.k - 1);
    if y.k - 1 < y.level {
        return Ok(out);
    }
    for (&fi, view) in &y.views {
        let f = geom.face_at(y.level, fi as usize);
        for (&ui, val) in view {
            let u = geom.face_at(y.k, ui as usize);
            for (w, _) in geom.covers_down(&u) {
                if geom.is_below(&f, &w) {
                    let r = sc.restrict(val, &u, &w)?;
                    out.add_entry(fi as usize, geom.index_of(&w), &r);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SolveStats {
    pub y_weight: usize,
    pub z_weight: usize,
    /// 2^{2t} n^t |y|.
    pub bound: f64,
}

impl SolveStats {
    pub fn within_bound(&self) -> bool {
        self.z_weight as f64 <= self.bound
    }
}

/// z with Δ_k z = y, solved independently over each hypercube X_{≤u}, u ∈ X(k).
pub fn delta_k_solve(sc: &SheafComplex, y: &LocalViewCochain) -> Result<(LocalViewCochain, SolveStats), AnalysisError> {
    if y.level == 0 || y.level > y.k {
        return Err(AnalysisError::ShapeMismatch(format!("Δ-solve from level {} with k = {}", y.level, y.k)));
    }
    if !delta_k_apply(sc, y)?.is_zero() {
        return Err(AnalysisError::NotACocycle);
    }
    let geom = sc.geometry();
    let f = sc.field();
    let (i, k) = (y.level, y.k);
    // per k-face: the views it receives from faces of level i
    let mut by_u: BTreeMap<u32, Vec<(u32, &Vec<Gf>)>> = BTreeMap::new();
    for (&fi, view) in &y.views {
        for (&ui, val) in view {
            by_u.entry(ui).or_default().push((fi, val));
        }
    }
    let mut cache: HashMap<usize, Solver> = HashMap::new();
    let mut out = LocalViewCochain::zero(i - 1, k);
    for (&ui, got) in &by_u {
        let u = geom.face_at(k, ui as usize);
        let rows = geom.link_down(&u, i).expect("level checked");
        let cols = geom.link_down(&u, i - 1).expect("level checked");
        // the incidence between hypercube levels depends only on dim u
        let solver = cache.entry(u.dim()).or_insert_with(|| {
            let trip: Vec<(usize, usize, Gf)> = rows
                .iter()
                .enumerate()
                .flat_map(|(r, fr)| cols.iter().enumerate().filter(|(_, fc)| geom.is_below(fc, fr)).map(move |(c, _)| (r, c, 1)))
                .collect();
            Solver::new(f, &FieldMatrix::from_triplets(rows.len(), cols.len(), trip))
        });
        let row_pos: HashMap<usize, usize> = rows.iter().enumerate().map(|(p, fr)| (geom.index_of(fr), p)).collect();
        let dim = got[0].1.len();
        let mut sol = vec![vec![0 as Gf; dim]; cols.len()];
        for c in 0..dim {
            let mut rhs = vec![0; rows.len()];
            for &(fi, val) in got {
                rhs[row_pos[&(fi as usize)]] = val[c];
            }
            let x = solver.solve(f, &rhs).map_err(|_| AnalysisError::NotACocycle)?;
            for (q, &v) in x.iter().enumerate() {
                sol[q][c] = v;
            }
        }
        for (q, g) in cols.iter().enumerate() {
            out.add_entry(geom.index_of(g), ui as usize, &sol[q]);
        }
    }
    let g = sc.geometry();
    let stats = SolveStats {
        y_weight: y.weight(),
        z_weight: out.weight(),
        bound: (1u64 << (2 * sc.t())) as f64 * (g.n() as f64).powi(sc.t() as i32) * y.weight() as f64,
    };
    Ok((out, stats))
}

/// The global chain whose restriction to every vertex is z, after checking the views agree.
pub fn stitch(sc: &SheafComplex, z: &LocalViewCochain) -> Result<Vec<Gf>, AnalysisError> {
    if z.level != 0 {
        return Err(AnalysisError::ShapeMismatch(format!("stitch from level {}", z.level)));
    }
    let geom = sc.geometry();
    let blocks = sc.blocks(z.k);
    let mut out = vec![0; blocks.total()];
    let mut seen = vec![false; blocks.count()];
    for view in z.views.values() {
        for (&ui, val) in view {
            let ui = ui as usize;
            if seen[ui] {
                continue;
            }
            seen[ui] = true;
            let u = geom.face_at(z.k, ui);
            for v in geom.vertices(&u) {
                if z.get(geom.index_of(&v), ui) != Some(val.as_slice()) {
                    return Err(AnalysisError::InconsistentViews { face: ui });
                }
            }
            out[blocks.range(ui)].copy_from_slice(val);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FillPath {
    /// Zero input.
    Zero,
    /// Some pushed difference vanished at stage r.
    Local { r: usize },
    /// Top-level tensor codewords were decoded onto the dual complex.
    Dual,
}

#[derive(Clone, Debug, Serialize)]
pub struct FillTrace {
    pub k: usize,
    pub path: FillPath,
    pub x_weight: usize,
    pub x0_weight: usize,
    /// (|x^{(r)}|, |z^{(r)}|) per stage before back-propagation.
    pub stages: Vec<(usize, usize)>,
    pub z_weight: usize,
    /// (t² 2^{2t} n^{t+1})^t.
    pub bound: f64,
    pub solve_stats: Vec<SolveStats>,
}

#[derive(Clone, Debug)]
pub enum FillOutcome {
    Filled { z: Vec<Gf>, trace: FillTrace },
    /// x̃ ∈ C^{t−k}(X̃): a cocycle of the dual complex that is not a coboundary.
    Obstruction { witness: Vec<Gf>, level: usize, trace: FillTrace },
}

impl FillOutcome {
    pub fn trace(&self) -> &FillTrace {
        match self {
            FillOutcome::Filled { trace, .. } | FillOutcome::Obstruction { trace, .. } => trace,
        }
    }
}

/// Fills cycles of one complex; holds the dual complex and its factored coboundaries.
pub struct CycleFiller<'a> {
    sc: &'a SheafComplex,
    dual: SheafComplex,
    solvers: Vec<OnceLock<Solver>>,
}

/// E_f: dual coefficients at f ↦ values on X_{≥f}(t), the tensor of (h_j^⊥)ᵀ over the free directions.
fn encoder(sc: &SheafComplex, dual: &SheafComplex, f: &Face) -> DenseMatrix {
    let geom = sc.geometry();
    let ups = geom.link_up(f, sc.t()).expect("top level");
    let coords = dual.coords(f.type_mask());
    let codes = sc.codes();
    let fld = sc.field();
    let dirs: Vec<usize> = (0..sc.t()).filter(|&j| f.bit(j).is_some()).collect();
    let mut e = DenseMatrix::zeros(ups.len(), coords.size());
    for (r, u) in ups.iter().enumerate() {
        for c in 0..coords.size() {
            let d = coords.decompose(c);
            let v = dirs.iter().fold(1, |acc, &j| fld.mul(acc, codes.hperp(j).get(d[j], u.gen(j).unwrap())));
            e.set(r, c, v);
        }
    }
    e
}

impl<'a> CycleFiller<'a> {
    pub fn new(sc: &'a SheafComplex) -> Self {
        let dual = sc.dual();
        CycleFiller { sc, solvers: (0..sc.t()).map(|_| OnceLock::new()).collect(), dual }
    }

    pub fn dual(&self) -> &SheafComplex {
        &self.dual
    }

    fn dual_solver(&self, level: usize) -> Result<&Solver, AnalysisError> {
        let m = self.dual.delta(level)?;
        Ok(self.solvers[level].get_or_init(|| Solver::new(self.dual.field(), m)))
    }

    /// z at the same level with ∂_L z = x, solved face by face; zero views stay zero.
    fn lift(&self, x: &LocalViewCochain) -> Result<LocalViewCochain, AnalysisError> {
        let sc = self.sc;
        let geom = sc.geometry();
        let fld = sc.field();
        let kk = x.k + 1;
        let partial = sc.partial(kk)?;
        let parts: Vec<Result<Vec<(usize, usize, Vec<Gf>)>, AnalysisError>> = x
            .views
            .par_iter()
            .map(|(&fi, view)| {
                let f = geom.face_at(x.level, fi as usize);
                let rows_f = geom.link_up(&f, x.k).expect("level checked");
                let cols_f = geom.link_up(&f, kk).expect("level checked");
                let mut col_pos = HashMap::new();
                let mut col_owner = Vec::new();
                for (ci, u) in cols_f.iter().enumerate() {
                    for c in sc.face_coords(u) {
                        col_pos.insert(c, col_owner.len());
                        col_owner.push(ci);
                    }
                }
                let mut trip = Vec::new();
                let mut rhs = Vec::new();
                for w in &rows_f {
                    let wi = geom.index_of(w);
                    let val = view.get(&(wi as u32));
                    for (off, r) in sc.face_coords(w).enumerate() {
                        for (c, v) in partial.row(r) {
                            if let Some(&p) = col_pos.get(&c) {
                                trip.push((rhs.len(), p, v));
                            }
                        }
                        rhs.push(val.map_or(0, |v| v[off]));
                    }
                }
                let m = FieldMatrix::from_triplets(rhs.len(), col_owner.len(), trip);
                let sol = Solver::new(fld, &m)
                    .solve(fld, &rhs)
                    .map_err(|_| AnalysisError::LiftFailed { level: x.level, face: fi as usize })?;
                let mut out = Vec::new();
                let mut p = 0;
                for u in &cols_f {
                    let len = sc.face_coords(u).len();
                    out.push((fi as usize, geom.index_of(u), sol[p..p + len].to_vec()));
                    p += len;
                }
                Ok(out)
            })
            .collect();
        let mut z = LocalViewCochain::zero(x.level, kk);
        for part in parts {
            for (fi, ui, val) in part? {
                z.add_entry(fi, ui, &val);
            }
        }
        Ok(z)
    }

    /// Decodes top-level tensor codewords into a dual cochain.
    fn decode_top(&self, x: &LocalViewCochain) -> Result<Vec<Gf>, AnalysisError> {
        let sc = self.sc;
        let geom = sc.geometry();
        let fld = sc.field();
        let mut out = vec![0; self.dual.dim(x.level)];
        let mut cache: HashMap<u32, Solver> = HashMap::new();
        for (&fi, view) in &x.views {
            let f = geom.face_at(x.level, fi as usize);
            let solver = cache.entry(f.type_mask()).or_insert_with(|| Solver::new(fld, &encoder(sc, &self.dual, &f).to_sparse()));
            let rhs: Vec<Gf> = geom
                .link_up(&f, sc.t())
                .expect("top level")
                .iter()
                .map(|u| view.get(&(geom.index_of(u) as u32)).map_or(0, |v| v[0]))
                .collect();
            let xt = solver.solve(fld, &rhs).map_err(|_| AnalysisError::LiftFailed { level: x.level, face: fi as usize })?;
            out[self.dual.face_coords(&f)].copy_from_slice(&xt);
        }
        Ok(out)
    }

    /// Re-encodes a dual cochain at `level` as views with coefficients in F_t.
    fn encode(&self, u: &[Gf], level: usize) -> LocalViewCochain {
        let sc = self.sc;
        let geom = sc.geometry();
        let fld = sc.field();
        let mut out = LocalViewCochain::zero(level, sc.t());
        let mut cache: HashMap<u32, DenseMatrix> = HashMap::new();
        for fi in 0..geom.level_size(level) {
            let f = geom.face_at(level, fi);
            let val = &u[self.dual.face_coords(&f)];
            if val.iter().all(|&v| v == 0) {
                continue;
            }
            let e = cache.entry(f.type_mask()).or_insert_with(|| encoder(sc, &self.dual, &f));
            let enc = e.mul_vec(fld, val);
            for (w, &v) in geom.link_up(&f, sc.t()).expect("top level").iter().zip(&enc) {
                out.add_entry(fi, geom.index_of(w), &[v]);
            }
        }
        out
    }

    /// z ∈ C_{k+1} with ∂z = x, or an obstruction on the dual complex.
    pub fn fill(&self, x: &[Gf], k: usize) -> Result<FillOutcome, AnalysisError> {
        let sc = self.sc;
        let t = sc.t();
        if k > t {
            return Err(AnalysisError::LevelOutOfRange { k, t });
        }
        if x.len() != sc.dim(k) {
            return Err(AnalysisError::ShapeMismatch(format!("chain of length {} at level {k}", x.len())));
        }
        if k >= 1 && sc.partial(k)?.mul_vec(sc.field(), x).iter().any(|&v| v != 0) {
            return Err(AnalysisError::NotACycle);
        }
        let n = sc.geometry().n() as f64;
        let tf = t as f64;
        let mut trace = FillTrace {
            k,
            path: FillPath::Zero,
            x_weight: sc.blocks(k).weight(x),
            x0_weight: 0,
            stages: Vec::new(),
            z_weight: 0,
            bound: (tf * tf * 4f64.powi(t as i32) * n.powi(t as i32 + 1)).powi(t as i32),
            solve_stats: Vec::new(),
        };
        let out_len = if k < t { sc.dim(k + 1) } else { 0 };
        if trace.x_weight == 0 {
            return Ok(FillOutcome::Filled { z: vec![0; out_len], trace });
        }
        let x0 = local_views(sc, x, k, 0)?;
        trace.x0_weight = x0.weight();
        debug_assert!(trace.x0_weight <= trace.x_weight << k);
        let mut xs = vec![x0];
        let mut zs: Vec<LocalViewCochain> = Vec::new();
        for r in 0..t - k {
            let z = self.lift(&xs[r])?;
            let next = delta_k_apply(sc, &z)?;
            trace.stages.push((xs[r].weight(), z.weight()));
            zs.push(z);
            if next.is_zero() {
                trace.path = FillPath::Local { r };
                return self.finish(x, k, zs, r, trace);
            }
            xs.push(next);
        }
        // x^{(t−k)} has tensor-codeword views; move to the dual complex
        let top = t - k;
        let xt = self.decode_top(&xs[top])?;
        trace.path = FillPath::Dual;
        if top == 0 {
            return Ok(FillOutcome::Obstruction { witness: xt, level: 0, trace });
        }
        let solver = self.dual_solver(top - 1)?;
        let ut = match solver.solve(self.dual.field(), &xt) {
            Ok(u) => u,
            Err(LinalgError::NoSolution) => return Ok(FillOutcome::Obstruction { witness: xt, level: top, trace }),
            Err(e) => return Err(AnalysisError::ShapeMismatch(e.to_string())),
        };
        let corr = self.encode(&ut, top - 1);
        zs[top - 1].add(&corr)?;
        self.finish(x, k, zs, top - 1, trace)
    }

    fn finish(&self, x: &[Gf], k: usize, mut zs: Vec<LocalViewCochain>, mut r: usize, mut trace: FillTrace) -> Result<FillOutcome, AnalysisError> {
        let sc = self.sc;
        while r > 0 {
            let (u, stats) = delta_k_solve(sc, &zs[r])?;
            trace.solve_stats.push(stats);
            let w = partial_l(sc, &u)?;
            zs[r - 1].add(&w)?;
            r -= 1;
        }
        let z = stitch(sc, &zs[0])?;
        let fld = sc.field();
        if sc.partial(k + 1)?.mul_vec(fld, &z) != x {
            return Err(AnalysisError::FillMismatch);
        }
        trace.z_weight = sc.blocks(k + 1).weight(&z);
        Ok(FillOutcome::Filled { z, trace })
    }
}
