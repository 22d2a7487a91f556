//! Concrete generator families and spectral estimates of their Cayley graphs.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::{GeometryError, PermutationSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("direction {direction}: duplicate generator {generator}")]
    DuplicateGenerator { direction: usize, generator: u64 },
    #[error("base graph is not regular: {0}")]
    NotRegular(String),
    #[error("lift labels do not invert along reversed edge (vertex {vertex}, generator {generator})")]
    LiftAssignmentMismatch { vertex: usize, generator: usize },
    #[error("power iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    ConvergenceFailure { residual: f64, iterations: usize },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// XOR translations of (Z/2)^m, one generator list per direction.
pub fn group_z2e(m: u32, gens: &[Vec<u64>]) -> Result<(usize, Vec<PermutationSet>), BuildError> {
    if m > 24 {
        return Err(BuildError::Invalid(format!("rank {m} too large")));
    }
    let size = 1usize << m;
    let mut out = Vec::new();
    for (j, list) in gens.iter().enumerate() {
        for (i, &x) in list.iter().enumerate() {
            if x >= size as u64 {
                return Err(BuildError::Invalid(format!("generator {x} outside (Z/2)^{m}")));
            }
            if list[..i].contains(&x) {
                return Err(BuildError::DuplicateGenerator { direction: j, generator: x });
            }
        }
        let perms = list.iter().map(|&x| (0..size as u32).map(|g| g ^ x as u32).collect()).collect();
        out.push(PermutationSet::new(j, perms)?);
    }
    Ok((size, out))
}

/// Translations of Z/N by the given residues, one list per direction.
pub fn group_cyclic(order: usize, gens: &[Vec<i64>]) -> Result<(usize, Vec<PermutationSet>), BuildError> {
    if order == 0 {
        return Err(BuildError::Invalid("empty group".into()));
    }
    let mut out = Vec::new();
    for (j, list) in gens.iter().enumerate() {
        let res: Vec<u64> = list.iter().map(|&s| s.rem_euclid(order as i64) as u64).collect();
        for (i, &x) in res.iter().enumerate() {
            if res[..i].contains(&x) {
                return Err(BuildError::DuplicateGenerator { direction: j, generator: x });
            }
        }
        let perms = res.iter().map(|&s| (0..order as u64).map(|g| ((g + s) % order as u64) as u32).collect()).collect();
        out.push(PermutationSet::new(j, perms)?);
    }
    Ok((order, out))
}

/// Finite abelian group Z/d_1 × … × Z/d_r, elements encoded in mixed radix (first factor most significant).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbelianGroup {
    pub factors: Vec<u32>,
}

impl AbelianGroup {
    pub fn new(factors: Vec<u32>) -> Result<Self, BuildError> {
        if factors.iter().any(|&d| d == 0) {
            return Err(BuildError::Invalid("zero invariant factor".into()));
        }
        Ok(AbelianGroup { factors })
    }

    pub fn order(&self) -> usize {
        self.factors.iter().map(|&d| d as usize).product()
    }

    pub fn digits(&self, x: usize) -> Vec<u32> {
        let mut d = vec![0; self.factors.len()];
        let mut rest = x;
        for i in (0..self.factors.len()).rev() {
            d[i] = (rest % self.factors[i] as usize) as u32;
            rest /= self.factors[i] as usize;
        }
        d
    }

    pub fn encode(&self, digits: &[u32]) -> usize {
        digits.iter().zip(&self.factors).fold(0, |acc, (&x, &d)| acc * d as usize + (x % d) as usize)
    }

    pub fn add(&self, x: usize, y: usize) -> usize {
        let (a, b) = (self.digits(x), self.digits(y));
        self.encode(&a.iter().zip(&b).zip(&self.factors).map(|((&p, &q), &d)| (p + q) % d).collect::<Vec<_>>())
    }

    pub fn neg(&self, x: usize) -> usize {
        let a = self.digits(x);
        self.encode(&a.iter().zip(&self.factors).map(|(&p, &d)| (d - p) % d).collect::<Vec<_>>())
    }
}

/// A Cayley base graph on an abelian group with an H-valued label on every
/// oriented edge (v, v + γ_i).
#[derive(Clone, Debug)]
pub struct BaseGraphSpec {
    pub base: AbelianGroup,
    pub generators: Vec<usize>,
    pub lift: AbelianGroup,
    /// `labels[v][i]` is the H-element on the edge leaving v along γ_i.
    pub labels: Vec<Vec<usize>>,
}

impl BaseGraphSpec {
    /// Every oriented edge labelled by the same element.
    pub fn constant(base: AbelianGroup, generators: Vec<usize>, lift: AbelianGroup, label: usize) -> Self {
        let labels = vec![vec![label; generators.len()]; base.order()];
        BaseGraphSpec { base, generators, lift, labels }
    }

    /// Uniformly random labels made consistent on reversed edges.
    pub fn random(base: AbelianGroup, generators: Vec<usize>, lift: AbelianGroup, seed: u64) -> Result<Self, BuildError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nv = base.order();
        let rev = reverse_index(&base, &generators)?;
        let mut labels = vec![vec![usize::MAX; generators.len()]; nv];
        for v in 0..nv {
            for i in 0..generators.len() {
                if labels[v][i] != usize::MAX {
                    continue;
                }
                let w = base.add(v, generators[i]);
                let s = rng.gen_range(0..lift.order());
                labels[v][i] = s;
                labels[w][rev[i]] = lift.neg(s);
            }
        }
        Ok(BaseGraphSpec { base, generators, lift, labels })
    }

    pub fn n(&self) -> usize {
        self.generators.len()
    }
}

fn reverse_index(base: &AbelianGroup, gens: &[usize]) -> Result<Vec<usize>, BuildError> {
    for (i, &g) in gens.iter().enumerate() {
        if g == 0 {
            return Err(BuildError::NotRegular(format!("generator {i} is the identity (self-loop)")));
        }
        if gens[..i].contains(&g) {
            return Err(BuildError::NotRegular(format!("generator {i} repeats (multi-edge)")));
        }
    }
    gens.iter()
        .enumerate()
        .map(|(i, &g)| {
            let ng = base.neg(g);
            gens.iter()
                .position(|&h| h == ng)
                .ok_or_else(|| BuildError::NotRegular(format!("generator {i} has no inverse in the list")))
        })
        .collect()
}

/// The t-fold product of an H-lift of a Cayley base graph: G = H × V_0^t, and the
/// direction-j generator i sends (h, …, v_j, …) to (h + s(v_j, i), …, v_j + γ_i, …).
/// The double-cover bit of each direction is the face coordinate b_j.
pub fn abelian_lift_product(spec: &BaseGraphSpec, t: usize) -> Result<(usize, Vec<PermutationSet>), BuildError> {
    let nv = spec.base.order();
    let nh = spec.lift.order();
    if spec.labels.len() != nv || spec.labels.iter().any(|l| l.len() != spec.n()) {
        return Err(BuildError::Invalid("label table shape".into()));
    }
    let rev = reverse_index(&spec.base, &spec.generators)?;
    for v in 0..nv {
        for i in 0..spec.n() {
            let w = spec.base.add(v, spec.generators[i]);
            if spec.labels[w][rev[i]] != spec.lift.neg(spec.labels[v][i]) {
                return Err(BuildError::LiftAssignmentMismatch { vertex: v, generator: i });
            }
        }
    }
    let size = nh * nv.pow(t as u32);
    if size > u32::MAX as usize {
        return Err(BuildError::Invalid("group too large".into()));
    }
    // element (h, v_1..v_t) encoded as h·nv^t + Σ v_j·nv^{t-1-j}
    let stride = |j: usize| nv.pow((t - 1 - j) as u32);
    let mut sets = Vec::with_capacity(t);
    for j in 0..t {
        let perms = (0..spec.n())
            .map(|i| {
                (0..size)
                    .map(|x| {
                        let h = x / nv.pow(t as u32);
                        let vj = x / stride(j) % nv;
                        let h2 = spec.lift.add(h, spec.labels[vj][i]);
                        let vj2 = spec.base.add(vj, spec.generators[i]);
                        let rest = x % nv.pow(t as u32) - vj * stride(j) + vj2 * stride(j);
                        (h2 * nv.pow(t as u32) + rest) as u32
                    })
                    .collect()
            })
            .collect();
        sets.push(PermutationSet::new(j, perms)?);
    }
    Ok((size, sets))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentSpectrum {
    pub size: usize,
    /// Largest eigenvalue on the complement of the constants.
    pub second_eigenvalue: f64,
    /// Second-largest eigenvalue magnitude (1 for bipartite components).
    pub lambda: f64,
    pub method: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub components: Vec<ComponentSpectrum>,
    pub lambda_max: f64,
    pub r: f64,
}

pub const DENSE_LIMIT: usize = 2000;

/// Connected components of the Cayley graph, each sorted, ordered by least element.
pub fn components(size: usize, a: &PermutationSet) -> Vec<Vec<u32>> {
    let mut comp = vec![usize::MAX; size];
    let mut out: Vec<Vec<u32>> = Vec::new();
    for s in 0..size {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s as u32];
        comp[s] = id;
        let mut head = 0;
        while head < members.len() {
            let g = members[head];
            head += 1;
            for i in 0..a.n() {
                let h = a.apply(i, g);
                if comp[h as usize] == usize::MAX {
                    comp[h as usize] = id;
                    members.push(h);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// Checks that the count matrix #{a : a(g) = h} is symmetric; rows sum to n by construction.
pub fn markov_symmetric(size: usize, a: &PermutationSet) -> bool {
    let mut edges: Vec<(u32, u32)> = (0..size as u32).flat_map(|g| (0..a.n()).map(move |i| (g, i))).map(|(g, i)| (g, a.apply(i, g))).collect();
    let mut rev: Vec<(u32, u32)> = edges.iter().map(|&(g, h)| (h, g)).collect();
    edges.sort_unstable();
    rev.sort_unstable();
    edges == rev
}

fn local_operator(members: &[u32], a: &PermutationSet) -> (Vec<usize>, usize) {
    // neighbor lists in local indices, flattened n per vertex
    let pos: std::collections::HashMap<u32, usize> = members.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let mut nb = Vec::with_capacity(members.len() * a.n());
    for &g in members {
        for i in 0..a.n() {
            nb.push(pos[&a.apply(i, g)]);
        }
    }
    (nb, a.n())
}

fn dense_spectrum(members: &[u32], a: &PermutationSet) -> ComponentSpectrum {
    let s = members.len();
    let (nb, n) = local_operator(members, a);
    let mut m = DMatrix::<f64>::zeros(s, s);
    for v in 0..s {
        for &w in &nb[v * n..(v + 1) * n] {
            m[(v, w)] += 1.0 / n as f64;
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let (second, lambda) = if s < 2 {
        (0.0, 0.0)
    } else {
        (ev[1], ev[1..].iter().fold(0.0f64, |acc, &x| acc.max(x.abs())))
    };
    ComponentSpectrum { size: s, second_eigenvalue: second, lambda, method: "dense" }
}

/// Top eigenvalue of a symmetric operator restricted to the complement of constants.
fn power_top(s: usize, apply: &dyn Fn(&[f64]) -> Vec<f64>, seed: u64) -> Result<f64, BuildError> {
    const TOL: f64 = 1e-9;
    const MAX_IT: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deflate = |x: &mut Vec<f64>| {
        let mean = x.iter().sum::<f64>() / s as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        }
        norm
    };
    let mut x: Vec<f64> = (0..s).map(|_| rng.gen::<f64>() - 0.5).collect();
    if deflate(&mut x) == 0.0 {
        return Ok(0.0);
    }
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_IT {
        let mut y = apply(&x);
        let mean = y.iter().sum::<f64>() / s as f64;
        y.iter_mut().for_each(|v| *v -= mean);
        let mu: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        residual = x.iter().zip(&y).map(|(a, b)| (b - mu * a).powi(2)).sum::<f64>().sqrt();
        if residual < TOL {
            return Ok(mu);
        }
        x = y;
        if deflate(&mut x) == 0.0 {
            return Ok(0.0);
        }
    }
    Err(BuildError::ConvergenceFailure { residual, iterations: MAX_IT })
}

fn power_spectrum(members: &[u32], a: &PermutationSet, seed: u64) -> Result<ComponentSpectrum, BuildError> {
    let s = members.len();
    let (nb, n) = local_operator(members, a);
    let m = move |x: &[f64]| -> Vec<f64> {
        (0..s).map(|v| nb[v * n..(v + 1) * n].iter().map(|&w| x[w]).sum::<f64>() / n as f64).collect()
    };
    // (M + I)/2 is positive semidefinite, so its top eigenvalue on 1⊥ gives the signed λ_2
    let shifted = |x: &[f64]| -> Vec<f64> { m(x).iter().zip(x).map(|(a, b)| (a + b) / 2.0).collect() };
    let squared = |x: &[f64]| -> Vec<f64> { m(&m(x)) };
    let second = 2.0 * power_top(s, &shifted, seed)? - 1.0;
    let lambda = power_top(s, &squared, seed ^ 0x5eed)?.max(0.0).sqrt();
    Ok(ComponentSpectrum { size: s, second_eigenvalue: second, lambda, method: "power" })
}

/// Spectral data of the normalized Cayley operator, component by component.
pub fn estimate_expansion(size: usize, a: &PermutationSet) -> Result<ExpansionReport, BuildError> {
    estimate_expansion_with(size, a, DENSE_LIMIT)
}

/// As [`estimate_expansion`] with an explicit size threshold for the dense solver.
pub fn estimate_expansion_with(size: usize, a: &PermutationSet, dense_limit: usize) -> Result<ExpansionReport, BuildError> {
    let comps = components(size, a);
    let components = comps
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.len() <= dense_limit {
                Ok(dense_spectrum(c, a))
            } else {
                power_spectrum(c, a, 0x9e37_79b9 ^ i as u64)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let lambda_max = components.iter().fold(0.0f64, |acc, c| acc.max(c.lambda));
    let r = components.iter().map(|c| c.size).min().unwrap_or(0) as f64 / size as f64;
    Ok(ExpansionReport { components, lambda_max, r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abelian_group_arithmetic() {
        let g = AbelianGroup::new(vec![2, 3]).unwrap();
        assert_eq!(g.order(), 6);
        for x in 0..6 {
            assert_eq!(g.add(x, g.neg(x)), 0);
        }
        assert_eq!(g.add(g.encode(&[1, 2]), g.encode(&[1, 2])), g.encode(&[0, 1]));
    }
}
