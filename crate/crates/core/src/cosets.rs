//! Exhaustive searches over quotient spaces: syndrome-distance tables for
//! min-ratio problems and Gray-code enumeration of subspaces.

use std::collections::HashMap;

use crate::ff2e::{Blocks, DenseMatrix, Field, FieldMatrix, Gf};

pub const DEFAULT_BUDGET: usize = 1 << 24;
/// Largest local space enumerated per generator block.
const BLOCK_CAP: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("search space of q^{dim} states (q = {q}) exceeds the budget {budget}")]
    BudgetExceeded { q: usize, dim: usize, budget: usize },
}

fn check_budget(f: &Field, dim: usize, budget: usize) -> Result<usize, SearchError> {
    let bits = f.degree() as usize * dim;
    if bits >= 63 || (1usize << bits) > budget {
        return Err(SearchError::BudgetExceeded { q: f.order(), dim, budget });
    }
    Ok(1 << bits)
}

/// Loopless reflected mixed-radix Gray code over r digits in [0, q).
pub struct Gray {
    q: usize,
    digits: Vec<usize>,
    focus: Vec<usize>,
    up: Vec<bool>,
}

impl Gray {
    pub fn new(r: usize, q: usize) -> Self {
        Gray { q, digits: vec![0; r], focus: (0..=r).collect(), up: vec![true; r] }
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    /// Advances one step; returns (position, old digit, new digit).
    pub fn step(&mut self) -> Option<(usize, usize, usize)> {
        let r = self.digits.len();
        let j = self.focus[0];
        self.focus[0] = 0;
        if j == r {
            return None;
        }
        let old = self.digits[j];
        let new = if self.up[j] { old + 1 } else { old - 1 };
        self.digits[j] = new;
        if new == 0 || new == self.q - 1 {
            self.up[j] = !self.up[j];
            self.focus[j] = self.focus[j + 1];
            self.focus[j + 1] = j + 1;
        }
        Some((j, old, new))
    }
}

/// Running vector with block-support counts.
struct Tracker<'a> {
    blocks: &'a Blocks,
    v: Vec<Gf>,
    nz: Vec<u32>,
    weight: usize,
}

impl<'a> Tracker<'a> {
    fn new(blocks: &'a Blocks, v: Vec<Gf>) -> Self {
        let mut nz = vec![0u32; blocks.count()];
        for (i, &x) in v.iter().enumerate() {
            if x != 0 {
                nz[blocks.owner(i)] += 1;
            }
        }
        let weight = nz.iter().filter(|&&c| c > 0).count();
        Tracker { blocks, v, nz, weight }
    }

    #[inline]
    fn add(&mut self, f: &Field, c: Gf, col: &[(usize, Gf)]) {
        for &(i, x) in col {
            let before = self.v[i];
            let after = before ^ f.mul(c, x);
            self.v[i] = after;
            if (before == 0) != (after == 0) {
                let b = self.blocks.owner(i);
                if after == 0 {
                    self.nz[b] -= 1;
                    if self.nz[b] == 0 {
                        self.weight -= 1;
                    }
                } else {
                    self.nz[b] += 1;
                    if self.nz[b] == 1 {
                        self.weight += 1;
                    }
                }
            }
        }
    }
}

fn sparse(v: &[Gf]) -> Vec<(usize, Gf)> {
    v.iter().enumerate().filter(|e| *e.1 != 0).map(|(i, &x)| (i, x)).collect()
}

/// Visits every vector offset + Σ α_i basis_i (α in reflected Gray order, starting at α = 0)
/// with its block weight and coefficient digits. Returning false from `visit` stops early.
pub fn enumerate_span(
    f: &Field,
    offset: &[Gf],
    basis: &[Vec<Gf>],
    blocks: &Blocks,
    budget: usize,
    mut visit: impl FnMut(&[Gf], usize, &[usize]) -> bool,
) -> Result<usize, SearchError> {
    check_budget(f, basis.len(), budget)?;
    let cols: Vec<Vec<(usize, Gf)>> = basis.iter().map(|b| sparse(b)).collect();
    let mut tr = Tracker::new(blocks, offset.to_vec());
    let mut gray = Gray::new(basis.len(), f.order());
    let mut visited = 1;
    if !visit(&tr.v, tr.weight, gray.digits()) {
        return Ok(visited);
    }
    while let Some((j, old, new)) = gray.step() {
        tr.add(f, (old ^ new) as Gf, &cols[j]);
        visited += 1;
        if !visit(&tr.v, tr.weight, gray.digits()) {
            break;
        }
    }
    Ok(visited)
}

/// Independent columns of `m` (first pivots of its echelon form).
pub fn column_basis(f: &Field, m: &FieldMatrix) -> Vec<Vec<Gf>> {
    let mut d = m.to_dense();
    let piv = d.rref(f);
    let t = m.transpose();
    piv.iter()
        .map(|&c| {
            let mut v = vec![0; m.rows()];
            for (r, x) in t.row(c) {
                v[r] = x;
            }
            v
        })
        .collect()
}

/// Extends an independent list `base` by vectors from `more`, keeping those that raise the rank.
pub fn extend_basis(f: &Field, base: &[Vec<Gf>], more: &[Vec<Gf>]) -> Vec<Vec<Gf>> {
    let mut echelon: Vec<(usize, Vec<Gf>)> = Vec::new();
    let reduce = |ech: &[(usize, Vec<Gf>)], v: &mut Vec<Gf>| {
        for (p, row) in ech {
            let c = v[*p];
            if c != 0 {
                f.axpy(v, c, row);
            }
        }
    };
    let push = |ech: &mut Vec<(usize, Vec<Gf>)>, v: &[Gf]| -> bool {
        let mut w = v.to_vec();
        reduce(ech, &mut w);
        match w.iter().position(|&x| x != 0) {
            Some(p) => {
                let inv = f.inv(w[p]);
                f.scale(&mut w, inv);
                for (_, row) in ech.iter_mut() {
                    let c = row[p];
                    if c != 0 {
                        f.axpy(row, c, &w);
                    }
                }
                ech.push((p, w));
                true
            }
            None => false,
        }
    };
    for v in base {
        push(&mut echelon, v);
    }
    more.iter().filter(|v| push(&mut echelon, v)).cloned().collect()
}

/// Coordinates on im(map): pivot rows R and columns q_i with s = Σ s[R_i] q_i for s ∈ im(map).
struct ImageCoords {
    rows: Vec<usize>,
    q: Vec<Vec<(usize, Gf)>>,
}

fn image_coords(f: &Field, map: &FieldMatrix) -> ImageCoords {
    let b = column_basis(f, map);
    let r = b.len();
    if r == 0 {
        return ImageCoords { rows: vec![], q: vec![] };
    }
    let mut bt = DenseMatrix::from_row_vecs(map.rows(), &b);
    let rows = bt.rref(f);
    // K = B[R, :], invert via [K | I]
    let mut aug = DenseMatrix::zeros(r, 2 * r);
    for (i, &row) in rows.iter().enumerate() {
        for (l, bl) in b.iter().enumerate() {
            aug.set(i, l, bl[row]);
        }
        aug.set(i, r + i, 1);
    }
    aug.rref(f);
    let q = (0..r)
        .map(|i| {
            let mut col = vec![0; map.rows()];
            for (l, bl) in b.iter().enumerate() {
                let c = aug.get(l, r + i);
                if c != 0 {
                    f.axpy(&mut col, c, bl);
                }
            }
            sparse(&col)
        })
        .collect();
    ImageCoords { rows, q }
}

/// Nonnegative rational in lowest terms; a zero denominator stands for +∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            return Self::INFINITY;
        }
        let g = gcd(num, den).max(1);
        Ratio { num: num / g, den: den / g }
    }

    pub const INFINITY: Ratio = Ratio { num: 1, den: 0 };

    pub fn is_infinite(&self) -> bool {
        self.den == 0
    }

    pub fn value(&self) -> f64 {
        if self.den == 0 {
            f64::INFINITY
        } else {
            self.num as f64 / self.den as f64
        }
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => std::cmp::Ordering::Equal,
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            _ => (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128)),
        }
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// A ratio |target weight| / |source weight| realized by a source vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioWitness {
    pub numer: usize,
    pub denom: usize,
    pub x: Vec<Gf>,
}

impl RatioWitness {
    pub fn value(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }

    fn better(&self, numer: usize, denom: usize) -> bool {
        numer * self.denom < self.numer * denom
    }
}

#[derive(Clone, Debug)]
pub struct RatioSearch {
    pub rank: usize,
    pub states: usize,
    pub generators: usize,
    /// Largest coset distance reached.
    pub radius: usize,
    /// True when every syndrome was reached (exhaustive); otherwise distances are exact
    /// only up to `searched_weight`.
    pub complete: bool,
    pub searched_weight: usize,
    pub best: Option<RatioWitness>,
}

struct Generators {
    keys: Vec<u64>,
    src: Vec<(usize, Vec<Gf>)>,
}

fn pack(f: &Field, digits: &[Gf]) -> u64 {
    let e = f.degree();
    digits.iter().enumerate().fold(0u64, |acc, (i, &d)| acc | (d as u64) << (e as usize * i))
}

fn generators(f: &Field, map: &FieldMatrix, rows: &[usize], src: &Blocks) -> Result<Generators, SearchError> {
    let q = f.order();
    let map_r = map.select_rows(rows).transpose();
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut out = Generators { keys: vec![], src: vec![] };
    for b in 0..src.count() {
        let range = src.range(b);
        let size = range.len();
        let bits = f.degree() as usize * size;
        if bits >= 32 || 1usize << bits > BLOCK_CAP {
            return Err(SearchError::BudgetExceeded { q, dim: size, budget: BLOCK_CAP });
        }
        let colkeys: Vec<Vec<Gf>> = range
            .clone()
            .map(|c| {
                let mut d = vec![0; rows.len()];
                for (i, x) in map_r.row(c) {
                    d[i] = x;
                }
                d
            })
            .collect();
        for code in 1..1usize << bits {
            let c: Vec<Gf> = (0..size).map(|l| (code >> (f.degree() as usize * l) & (q - 1)) as Gf).collect();
            let mut digits = vec![0; rows.len()];
            for (l, &cl) in c.iter().enumerate() {
                if cl != 0 {
                    f.axpy(&mut digits, cl, &colkeys[l]);
                }
            }
            let key = pack(f, &digits);
            if key != 0 && !seen.contains_key(&key) {
                seen.insert(key, out.keys.len());
                out.keys.push(key);
                out.src.push((b, c));
            }
        }
    }
    Ok(out)
}

fn rebuild_x(src: &Blocks, gens: &Generators, path: impl Iterator<Item = usize>) -> Vec<Gf> {
    let mut x = vec![0; src.total()];
    for g in path {
        let (b, c) = &gens.src[g];
        for (i, &v) in src.range(*b).zip(c) {
            x[i] ^= v;
        }
    }
    x
}

/// min over s ∈ im(map) − {0} of |s|_tgt / d(s), where d(s) is the least source block weight
/// of a preimage. Equivalently min over x ∉ ker(map) of |map x| / dist(x, ker map).
pub fn min_ratio(f: &Field, map: &FieldMatrix, src: &Blocks, tgt: &Blocks, budget: usize) -> Result<RatioSearch, SearchError> {
    let ic = image_coords(f, map);
    let r = ic.rows.len();
    let states = check_budget(f, r, budget)?;
    let gens = generators(f, map, &ic.rows, src)?;
    const UNSEEN: u8 = u8::MAX;
    let mut dist = vec![UNSEEN; states];
    let mut parent = vec![u32::MAX; states];
    dist[0] = 0;
    let mut frontier = vec![0u64];
    let mut radius = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &s in &frontier {
            for (gi, &k) in gens.keys.iter().enumerate() {
                let t = (s ^ k) as usize;
                if dist[t] == UNSEEN {
                    dist[t] = radius as u8 + 1;
                    parent[t] = gi as u32;
                    next.push(t as u64);
                }
            }
        }
        if !next.is_empty() {
            radius += 1;
            assert!(radius < UNSEEN as usize, "coset radius overflow");
        }
        frontier = next;
    }
    // weights of all syndromes along a Gray walk of the image coordinates
    let e = f.degree() as usize;
    let mut tr = Tracker::new(tgt, vec![0; map.rows()]);
    let mut gray = Gray::new(r, f.order());
    let mut key = 0u64;
    let mut best: Option<(usize, usize, u64)> = None;
    while let Some((j, old, new)) = gray.step() {
        let delta = (old ^ new) as Gf;
        tr.add(f, delta, &ic.q[j]);
        key ^= (delta as u64) << (e * j);
        let d = dist[key as usize] as usize;
        if key != 0 {
            let w = tr.weight;
            let improve = match best {
                None => true,
                Some((bw, bd, _)) => w * bd < bw * d,
            };
            if improve {
                best = Some((w, d, key));
            }
        }
    }
    let best = best.map(|(numer, denom, key)| {
        let mut path = Vec::new();
        let mut k = key;
        while k != 0 {
            let g = parent[k as usize] as usize;
            path.push(g);
            k ^= gens.keys[g];
        }
        RatioWitness { numer, denom, x: rebuild_x(src, &gens, path.into_iter()) }
    });
    Ok(RatioSearch { rank: r, states, generators: gens.keys.len(), radius, complete: true, searched_weight: radius, best })
}

/// Breadth-first search truncated once `budget` syndromes have been stored; the ratio is
/// minimized over syndromes whose distance is certified (all levels fully expanded).
pub fn min_ratio_capped(f: &Field, map: &FieldMatrix, src: &Blocks, tgt: &Blocks, budget: usize) -> Result<RatioSearch, SearchError> {
    let ic = image_coords(f, map);
    let r = ic.rows.len();
    if f.degree() as usize * r > 64 {
        return Err(SearchError::BudgetExceeded { q: f.order(), dim: r, budget });
    }
    let gens = generators(f, map, &ic.rows, src)?;
    let mut seen: HashMap<u64, (u32, u32)> = HashMap::new();
    seen.insert(0, (0, u32::MAX));
    let mut levels: Vec<Vec<u64>> = vec![vec![0]];
    let mut complete = false;
    loop {
        let last = levels.last().unwrap();
        let mut next = Vec::new();
        let mut overflow = false;
        'outer: for &s in last {
            for (gi, &k) in gens.keys.iter().enumerate() {
                let t = s ^ k;
                if let std::collections::hash_map::Entry::Vacant(v) = seen.entry(t) {
                    v.insert((levels.len() as u32, gi as u32));
                    next.push(t);
                    if seen.len() > budget {
                        overflow = true;
                        break 'outer;
                    }
                }
            }
        }
        if overflow {
            for t in next {
                seen.remove(&t);
            }
            break;
        }
        if next.is_empty() {
            complete = true;
            break;
        }
        levels.push(next);
    }
    let searched = levels.len() - 1;
    let mut best: Option<RatioWitness> = None;
    for (d, level) in levels.iter().enumerate().skip(1) {
        for &key in level {
            let mut path = Vec::new();
            let mut k = key;
            while k != 0 {
                let g = seen[&k].1 as usize;
                path.push(g);
                k ^= gens.keys[g];
            }
            let x = rebuild_x(src, &gens, path.into_iter());
            let w = tgt.weight(&map.mul_vec(f, &x));
            if best.as_ref().map_or(true, |b| b.better(w, d)) {
                best = Some(RatioWitness { numer: w, denom: d, x });
            }
        }
    }
    Ok(RatioSearch {
        rank: r,
        states: seen.len(),
        generators: gens.keys.len(),
        radius: searched,
        complete,
        searched_weight: searched,
        best,
    })
}

/// Exact search when it fits the budget, otherwise the truncated search.
pub fn min_ratio_auto(f: &Field, map: &FieldMatrix, src: &Blocks, tgt: &Blocks, budget: usize) -> Result<RatioSearch, SearchError> {
    match min_ratio(f, map, src, tgt, budget) {
        Err(SearchError::BudgetExceeded { .. }) => min_ratio_capped(f, map, src, tgt, budget),
        other => other,
    }
}

/// Minimum block weight over x ∈ span(basis) ⊕ span(extra) with a nonzero `extra` component,
/// i.e. over the nontrivial classes of span(basis ∪ extra) / span(basis).
pub fn min_nontrivial(
    f: &Field,
    trivial: &[Vec<Gf>],
    extra: &[Vec<Gf>],
    blocks: &Blocks,
    budget: usize,
) -> Result<Option<(usize, Vec<Gf>)>, SearchError> {
    if extra.is_empty() {
        return Ok(None);
    }
    let basis: Vec<Vec<Gf>> = extra.iter().chain(trivial).cloned().collect();
    let h = extra.len();
    let zero = vec![0; blocks.total()];
    let mut best: Option<(usize, Vec<Gf>)> = None;
    enumerate_span(f, &zero, &basis, blocks, budget, |v, w, digits| {
        if digits[..h].iter().any(|&d| d != 0) && best.as_ref().map_or(true, |b| w < b.0) {
            best = Some((w, v.to_vec()));
        }
        true
    })?;
    Ok(best)
}

/// Every element of a span with its weight, sorted by (weight, enumeration order).
pub fn span_by_weight(f: &Field, basis: &[Vec<Gf>], blocks: &Blocks, budget: usize) -> Result<Vec<(usize, Vec<usize>)>, SearchError> {
    let zero = vec![0; blocks.total()];
    let mut out = Vec::new();
    enumerate_span(f, &zero, basis, blocks, budget, |_, w, d| {
        out.push((w, d.to_vec()));
        true
    })?;
    out.sort_by_key(|e| e.0);
    Ok(out)
}

/// Σ α_i basis_i.
pub fn combine(f: &Field, basis: &[Vec<Gf>], alpha: &[usize], len: usize) -> Vec<Gf> {
    let mut v = vec![0; len];
    for (b, &a) in basis.iter().zip(alpha) {
        if a != 0 {
            f.axpy(&mut v, a as Gf, b);
        }
    }
    v
}

/// min over y of |x + Σ y_i basis_i| by enumeration.
pub fn coset_min(f: &Field, x: &[Gf], basis: &[Vec<Gf>], blocks: &Blocks, budget: usize) -> Result<(usize, Vec<Gf>), SearchError> {
    let mut best = (usize::MAX, Vec::new());
    enumerate_span(f, x, basis, blocks, budget, |v, w, _| {
        if w < best.0 {
            best = (w, v.to_vec());
        }
        true
    })?;
    Ok(best)
}
