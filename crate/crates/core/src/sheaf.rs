//! Local coefficient spaces over the faces of X and the global (co)boundary maps.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::ff2e::{kernel_basis_dense, rank, Blocks, Field, FieldMatrix, Gf};
use crate::geometry::{subsets_of, ComplexGeometry, Face, MAX_T};
use crate::report::Report;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SheafError {
    #[error("level {level} out of range")]
    LevelOutOfRange { level: usize },
    #[error("face is not covered by the target face")]
    NotCovering,
    #[error("target face is not covered by the source face")]
    NotCovered,
    #[error("local code {direction} has rank {rank} < {rows} rows")]
    FullRowRank { direction: usize, rank: usize, rows: usize },
    #[error("local code shapes: {0}")]
    Shape(String),
}

/// Parity-check matrices h_1..h_t (m_i × n) and their duals.
#[derive(Clone, Debug)]
pub struct LocalCodes {
    field: Field,
    n: usize,
    h: Vec<FieldMatrix>,
    hperp: Vec<FieldMatrix>,
}

/// Rows form a basis of ker h, so that h^⊥·hᵀ = 0.
pub fn dual_matrix(f: &Field, h: &FieldMatrix) -> FieldMatrix {
    let k = kernel_basis_dense(f, h);
    FieldMatrix::from_dense_rows(k.len(), h.cols(), &k)
}

impl LocalCodes {
    /// Requires every h_i to have full row rank and n columns.
    pub fn new(field: Field, h: Vec<FieldMatrix>) -> Result<Self, SheafError> {
        let codes = Self::new_unchecked(field, h)?;
        for (i, hi) in codes.h.iter().enumerate() {
            let r = rank(&codes.field, hi);
            if r != hi.rows() {
                return Err(SheafError::FullRowRank { direction: i, rank: r, rows: hi.rows() });
            }
        }
        Ok(codes)
    }

    /// Skips the rank check (used for fault injection); shapes are still checked.
    pub fn new_unchecked(field: Field, h: Vec<FieldMatrix>) -> Result<Self, SheafError> {
        if h.is_empty() || h.len() > MAX_T {
            return Err(SheafError::Shape(format!("{} codes", h.len())));
        }
        let n = h[0].cols();
        if h.iter().any(|m| m.cols() != n || m.rows() > n) {
            return Err(SheafError::Shape("every h_i must be m_i × n with m_i ≤ n".into()));
        }
        let q = field.order() as Gf;
        if h.iter().any(|m| m.triplets().any(|(_, _, v)| v >= q)) {
            return Err(SheafError::Shape("entry outside the field".into()));
        }
        let hperp = h.iter().map(|m| dual_matrix(&field, m)).collect();
        Ok(LocalCodes { field, n, h, hperp })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn t(&self) -> usize {
        self.h.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self, i: usize) -> usize {
        self.h[i].rows()
    }

    pub fn ms(&self) -> Vec<usize> {
        self.h.iter().map(|h| h.rows()).collect()
    }

    pub fn h(&self, i: usize) -> &FieldMatrix {
        &self.h[i]
    }

    pub fn hperp(&self, i: usize) -> &FieldMatrix {
        &self.hperp[i]
    }

    /// Uniformly random full-row-rank matrices (rejection sampling).
    pub fn random<R: Rng + ?Sized>(field: Field, n: usize, ms: &[usize], rng: &mut R) -> Result<Self, SheafError> {
        if ms.iter().any(|&m| m > n) {
            return Err(SheafError::Shape("m_i > n".into()));
        }
        let h = ms
            .iter()
            .map(|&m| loop {
                let rows: Vec<Vec<Gf>> = (0..m).map(|_| (0..n).map(|_| field.random(rng)).collect()).collect();
                let hm = FieldMatrix::from_dense_rows(m, n, &rows);
                if rank(&field, &hm) == m {
                    break hm;
                }
            })
            .collect();
        Self::new(field, h)
    }

    /// Codes {h_i^⊥}.
    pub fn dual(&self) -> LocalCodes {
        LocalCodes::new_unchecked(self.field.clone(), self.hperp.clone()).expect("dual shapes")
    }

    pub fn restricted(&self, dirs: &[usize]) -> LocalCodes {
        LocalCodes::new_unchecked(self.field.clone(), dirs.iter().map(|&i| self.h[i].clone()).collect()).expect("shapes")
    }
}

/// Mixed-radix coordinates over ∏_{j ∈ dirs} [m_j], first direction most significant.
#[derive(Clone, Debug)]
pub struct Coords {
    dirs: Vec<usize>,
    radix: Vec<usize>,
    weight: Vec<usize>,
    size: usize,
}

impl Coords {
    pub fn new(dirs: Vec<usize>, ms: &[usize]) -> Self {
        let radix: Vec<usize> = dirs.iter().map(|&j| ms[j]).collect();
        let mut weight = vec![0; dirs.len()];
        let mut w = 1;
        for p in (0..dirs.len()).rev() {
            weight[p] = w;
            w *= radix[p];
        }
        Coords { dirs, radix, weight, size: w }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dirs(&self) -> &[usize] {
        &self.dirs
    }

    /// Digits indexed by direction.
    #[inline]
    pub fn decompose(&self, c: usize) -> [usize; MAX_T] {
        let mut d = [0; MAX_T];
        for (p, &j) in self.dirs.iter().enumerate() {
            d[j] = c / self.weight[p] % self.radix[p];
        }
        d
    }

    #[inline]
    pub fn compose(&self, d: &[usize; MAX_T]) -> usize {
        self.dirs.iter().enumerate().map(|(p, &j)| d[j] * self.weight[p]).sum()
    }
}

/// Coordinate systems for every type mask: coordinates of V_S run over the complement of S.
pub fn coords_by_mask(t: usize, ms: &[usize]) -> Vec<Coords> {
    (0..1u32 << t).map(|mask| Coords::new((0..t).filter(|&j| mask >> j & 1 == 0).collect(), ms)).collect()
}

#[derive(Clone, Debug)]
struct Layout {
    total: usize,
    blocks: Blocks,
}

/// X together with local codes: coefficient layout and cached global maps.
#[derive(Debug)]
pub struct SheafComplex {
    geom: Arc<ComplexGeometry>,
    codes: LocalCodes,
    coords: Vec<Coords>,
    layouts: Vec<Layout>,
    delta: Vec<OnceLock<FieldMatrix>>,
    partial: Vec<OnceLock<FieldMatrix>>,
}

/// ∏_{j∉S} m_j.
pub fn coeff_dim(mask: u32, codes: &LocalCodes) -> usize {
    (0..codes.t()).filter(|&j| mask >> j & 1 == 0).map(|j| codes.m(j)).product()
}

impl SheafComplex {
    pub fn new(geom: Arc<ComplexGeometry>, codes: LocalCodes) -> Result<Self, SheafError> {
        let t = geom.t();
        if codes.t() != t || codes.n() != geom.n() {
            return Err(SheafError::Shape(format!(
                "geometry has t={}, n={}; codes have t={}, n={}",
                t,
                geom.n(),
                codes.t(),
                codes.n()
            )));
        }
        let ms = codes.ms();
        let coords = coords_by_mask(t, &ms);
        let layouts = (0..=t)
            .map(|k| {
                let per = geom.per_type(k);
                let mut off = 0;
                let mut sizes = Vec::with_capacity(geom.level_size(k));
                for &mask in geom.types(k) {
                    let d = coords[mask as usize].size();
                    off += d * per;
                    sizes.extend(std::iter::repeat(d).take(per));
                }
                Layout { total: off, blocks: Blocks::new(sizes) }
            })
            .collect();
        Ok(SheafComplex {
            geom,
            codes,
            coords,
            layouts,
            delta: (0..t).map(|_| OnceLock::new()).collect(),
            partial: (0..=t).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn geometry(&self) -> &ComplexGeometry {
        &self.geom
    }

    pub fn geometry_arc(&self) -> Arc<ComplexGeometry> {
        self.geom.clone()
    }

    pub fn codes(&self) -> &LocalCodes {
        &self.codes
    }

    pub fn field(&self) -> &Field {
        self.codes.field()
    }

    pub fn t(&self) -> usize {
        self.geom.t()
    }

    pub fn coords(&self, mask: u32) -> &Coords {
        &self.coords[mask as usize]
    }

    /// dim C_k.
    pub fn dim(&self, k: usize) -> usize {
        self.layouts[k].total
    }

    pub fn blocks(&self, k: usize) -> &Blocks {
        &self.layouts[k].blocks
    }

    /// Coordinate range of the face with level index `idx`.
    pub fn face_range(&self, k: usize, idx: usize) -> std::ops::Range<usize> {
        self.layouts[k].blocks.range(idx)
    }

    pub fn face_coords(&self, f: &Face) -> std::ops::Range<usize> {
        self.face_range(f.dim(), self.geom.index_of(f))
    }

    /// The dual complex: same geometry with codes {h_i^⊥}.
    pub fn dual(&self) -> SheafComplex {
        SheafComplex::new(self.geom.clone(), self.codes.dual()).expect("same shapes")
    }

    /// co-res along a single covering f' ⋖_i f.
    pub fn co_restrict(&self, z: &[Gf], fp: &Face, f: &Face) -> Result<Vec<Gf>, SheafError> {
        let i = self.covering_direction(fp, f).ok_or(SheafError::NotCovering)?;
        let fld = self.field();
        let a = f.gen(i).unwrap();
        let (small, big) = (self.coords(f.type_mask()), self.coords(fp.type_mask()));
        assert_eq!(z.len(), big.size());
        let h = self.codes.h(i);
        Ok((0..small.size())
            .map(|c| {
                let mut d = small.decompose(c);
                (0..h.rows()).fold(0, |acc, r| {
                    d[i] = r;
                    acc ^ fld.mul(h.get(r, a), z[big.compose(&d)])
                })
            })
            .collect())
    }

    /// res along a single covering f ⋖_i f'.
    pub fn restrict(&self, z: &[Gf], fp: &Face, f: &Face) -> Result<Vec<Gf>, SheafError> {
        let i = self.covering_direction(f, fp).ok_or(SheafError::NotCovered)?;
        let fld = self.field();
        let a = fp.gen(i).unwrap();
        let (small, big) = (self.coords(fp.type_mask()), self.coords(f.type_mask()));
        assert_eq!(z.len(), small.size());
        let h = self.codes.h(i);
        let mut out = vec![0; big.size()];
        for (c, &zc) in z.iter().enumerate() {
            let mut d = small.decompose(c);
            for r in 0..h.rows() {
                d[i] = r;
                out[big.compose(&d)] = fld.mul(zc, h.get(r, a));
            }
        }
        Ok(out)
    }

    /// Composite co-restriction from f' to f ⪰ f' along the path that adds
    /// directions in the given order.
    pub fn co_restrict_path(&self, z: &[Gf], fp: &Face, f: &Face, order: &[usize]) -> Result<Vec<Gf>, SheafError> {
        if !self.geom.is_below(fp, f) {
            return Err(SheafError::NotCovering);
        }
        let mut cur = *fp;
        let mut val = z.to_vec();
        for &j in order {
            if cur.gen(j).is_some() {
                continue;
            }
            let Some(a) = f.gen(j) else { continue };
            let next = self
                .geom
                .covers_up(&cur)
                .into_iter()
                .map(|(u, _)| u)
                .find(|u| u.gen(j) == Some(a) && self.geom.is_below(u, f))
                .ok_or(SheafError::NotCovering)?;
            val = self.co_restrict(&val, &cur, &next)?;
            cur = next;
        }
        if cur != *f {
            return Err(SheafError::NotCovering);
        }
        Ok(val)
    }

    fn covering_direction(&self, lo: &Face, hi: &Face) -> Option<usize> {
        if lo.dim() + 1 != hi.dim() {
            return None;
        }
        self.geom.covers_down(hi).into_iter().find(|(d, _)| d == lo).map(|(_, j)| j)
    }

    /// δ_i : C^i → C^{i+1}, rows indexed by (face, coordinate) of level i+1.
    pub fn delta(&self, i: usize) -> Result<&FieldMatrix, SheafError> {
        if i >= self.t() {
            return Err(SheafError::LevelOutOfRange { level: i });
        }
        Ok(self.delta[i].get_or_init(|| self.assemble_delta(i)))
    }

    /// ∂_i : C_i → C_{i−1}, assembled from restriction maps.
    pub fn partial(&self, i: usize) -> Result<&FieldMatrix, SheafError> {
        if i == 0 || i > self.t() {
            return Err(SheafError::LevelOutOfRange { level: i });
        }
        Ok(self.partial[i].get_or_init(|| self.assemble_partial(i)))
    }

    fn assemble_delta(&self, i: usize) -> FieldMatrix {
        let geom = &*self.geom;
        let level = i + 1;
        let nfaces = geom.level_size(level);
        let rows: Vec<Vec<Vec<(u32, Gf)>>> = (0..nfaces)
            .into_par_iter()
            .map(|fi| {
                let f = geom.face_at(level, fi);
                let small = self.coords(f.type_mask());
                let downs = geom.covers_down(&f);
                (0..small.size())
                    .map(|c| {
                        let mut row = Vec::with_capacity(downs.len() * self.codes.n());
                        for (fp, j) in &downs {
                            let base = self.face_coords(fp).start;
                            let big = self.coords(fp.type_mask());
                            let a = f.gen(*j).unwrap();
                            let h = self.codes.h(*j);
                            let mut d = small.decompose(c);
                            for r in 0..h.rows() {
                                let v = h.get(r, a);
                                if v != 0 {
                                    d[*j] = r;
                                    row.push(((base + big.compose(&d)) as u32, v));
                                }
                            }
                        }
                        merge_row(row)
                    })
                    .collect()
            })
            .collect();
        FieldMatrix::from_sorted_rows(self.dim(i), rows.into_iter().flatten().collect())
    }

    fn assemble_partial(&self, i: usize) -> FieldMatrix {
        let geom = &*self.geom;
        let level = i - 1;
        let rows: Vec<Vec<Vec<(u32, Gf)>>> = (0..geom.level_size(level))
            .into_par_iter()
            .map(|wi| {
                let w = geom.face_at(level, wi);
                let big = self.coords(w.type_mask());
                let ups = geom.covers_up(&w);
                (0..big.size())
                    .map(|c| {
                        let d0 = big.decompose(c);
                        let mut row = Vec::with_capacity(ups.len());
                        for (u, j) in &ups {
                            let small = self.coords(u.type_mask());
                            let a = u.gen(*j).unwrap();
                            let v = self.codes.h(*j).get(d0[*j], a);
                            if v != 0 {
                                let mut d = d0;
                                d[*j] = 0;
                                row.push(((self.face_coords(u).start + small.compose(&d)) as u32, v));
                            }
                        }
                        merge_row(row)
                    })
                    .collect()
            })
            .collect();
        FieldMatrix::from_sorted_rows(self.dim(i), rows.into_iter().flatten().collect())
    }

    /// D_i = N n^i 2^{t−i} Σ_{|T|=t−i} ∏_{j∈T} m_j.
    pub fn dim_formula(&self, i: usize) -> usize {
        let t = self.t();
        let g = &self.geom;
        let all: Vec<usize> = (0..t).collect();
        let s: usize = subsets_of(&all, t - i)
            .iter()
            .map(|&mask| (0..t).filter(|&j| mask >> j & 1 == 1).map(|j| self.codes.m(j)).product::<usize>())
            .sum();
        g.group_size() * g.n().pow(i as u32) * (1 << (t - i)) * s
    }

    pub fn chain_dims(&self) -> Vec<usize> {
        (0..=self.t()).map(|i| self.dim(i)).collect()
    }

    /// Exact chain-complex checks with one entry per identity.
    pub fn verify_chain(&self, seed: u64) -> Report {
        let mut rep = Report::new();
        let t = self.t();
        let f = self.field();
        for i in 0..t {
            let h = self.codes.h(i);
            let r = rank(f, h);
            rep.check(
                format!("chain.full_row_rank.{i}"),
                "local code has full row rank",
                r == h.rows(),
                json!({"direction": i, "rows": h.rows(), "rank": r}),
            );
        }
        for i in 0..=t {
            rep.check(
                format!("chain.dim.{i}"),
                "chain dimension formula",
                self.dim(i) == self.dim_formula(i),
                json!({"level": i, "enumerated": self.dim(i), "formula": self.dim_formula(i)}),
            );
        }
        for i in 1..t {
            let prod = self.partial(i).unwrap().mul(f, self.partial(i + 1).unwrap());
            rep.check(
                format!("chain.partial_squared.{i}"),
                "boundary squares to zero",
                prod.is_zero(),
                json!({"level": i, "nonzeros": prod.nnz(), "witness": prod.triplets().next().map(|(r, c, _)| [r, c])}),
            );
            let prod = self.delta(i).unwrap().mul(f, self.delta(i - 1).unwrap());
            rep.check(
                format!("chain.delta_squared.{i}"),
                "coboundary squares to zero",
                prod.is_zero(),
                json!({"level": i - 1, "nonzeros": prod.nnz()}),
            );
        }
        for i in 0..t {
            let ok = self.delta(i).unwrap().transpose() == *self.partial(i + 1).unwrap();
            rep.check(format!("chain.adjoint.{i}"), "coboundary is the transpose of boundary", ok, json!({"level": i}));
        }
        let (bad, tried) = self.path_independence(seed, 50);
        rep.check(
            "chain.path_independence",
            "composed co-restriction is path independent",
            bad == 0,
            json!({"samples": tried, "violations": bad}),
        );
        let maxm = (0..t).map(|j| self.codes.m(j)).max().unwrap_or(0);
        let n = self.geom.n();
        for i in 0..t {
            let d = self.delta(i).unwrap();
            let rw = d.row_weights().into_iter().max().unwrap_or(0);
            let cw = d.col_weights().into_iter().max().unwrap_or(0);
            rep.check(
                format!("chain.sparsity.{i}"),
                "coboundary row and column weights bounded",
                rw <= 2 * (i + 1) * n && cw <= (t - i) * n * maxm,
                json!({"level": i, "max_row_weight": rw, "max_col_weight": cw}),
            );
        }
        rep
    }

    /// Compares co-restrictions along two different paths over sampled rank-2 gaps.
    pub fn path_independence(&self, seed: u64, samples: usize) -> (usize, usize) {
        let geom = &*self.geom;
        let t = self.t();
        if t < 2 {
            return (0, 0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = self.field();
        let (mut bad, mut tried) = (0, 0);
        for _ in 0..samples {
            let k = rng.gen_range(2..=t);
            let top = geom.face_at(k, rng.gen_range(0..geom.level_size(k)));
            let lows = geom.link_down(&top, k - 2).unwrap();
            let low = lows[rng.gen_range(0..lows.len())];
            let dirs: Vec<usize> = (0..t).filter(|&j| top.gen(j).is_some() && low.gen(j).is_none()).collect();
            let z: Vec<Gf> = (0..self.coords(low.type_mask()).size()).map(|_| f.random(&mut rng)).collect();
            let one = self.co_restrict_path(&z, &low, &top, &dirs).unwrap();
            let rev: Vec<usize> = dirs.iter().rev().copied().collect();
            let two = self.co_restrict_path(&z, &low, &top, &rev).unwrap();
            tried += 1;
            if one != two {
                bad += 1;
            }
        }
        (bad, tried)
    }
}

fn merge_row(mut row: Vec<(u32, Gf)>) -> Vec<(u32, Gf)> {
    row.sort_unstable_by_key(|e| e.0);
    let mut out: Vec<(u32, Gf)> = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 ^= v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|e| e.1 != 0);
    out
}
