//! Small-set flip decoding of co-chain syndromes.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{fits, AnalysisError, ClassTester, DistMode, Patch};
use crate::cosets::enumerate_span;
use crate::ff2e::Gf;
use crate::sheaf::SheafComplex;

/// Local flip spaces up to this many elements are enumerated in full.
pub const FLIP_ENUM_LIMIT: usize = 1 << 16;

struct FlipPatch {
    patch: Patch,
    full: bool,
}

/// Flip decoder for syndromes of δ_k. Patches are the faces v ∈ X(ℓ), ℓ ≤ k, in canonical
/// order; a flip is supported on X_{≥v}(k).
pub struct FlipDecoder<'a> {
    sc: &'a SheafComplex,
    k: usize,
    patches: Vec<FlipPatch>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeOutcome {
    Success,
    Stalled,
}

#[derive(Clone, Debug)]
pub struct DecodeResult {
    pub outcome: DecodeOutcome,
    pub x_hat: Vec<Gf>,
    pub residual: Vec<Gf>,
    pub residual_weight: usize,
    pub iterations: usize,
}

impl<'a> FlipDecoder<'a> {
    pub fn new(sc: &'a SheafComplex, k: usize) -> Result<Self, AnalysisError> {
        if k >= sc.t() {
            return Err(AnalysisError::LevelOutOfRange { k, t: sc.t() });
        }
        let geom = sc.geometry();
        let f = sc.field();
        let map_t = sc.partial(k + 1)?;
        let faces: Vec<(usize, usize)> = (0..=k).flat_map(|l| (0..geom.level_size(l)).map(move |i| (l, i))).collect();
        let patches = faces
            .par_iter()
            .map(|&(l, i)| {
                let v = geom.face_at(l, i);
                let src: Vec<usize> = geom.link_up(&v, k).expect("level checked").iter().flat_map(|u| sc.face_coords(u)).collect();
                let full = fits(f, src.len(), FLIP_ENUM_LIMIT).is_ok();
                FlipPatch { patch: Patch::new(sc.blocks(k + 1), src, map_t), full }
            })
            .collect();
        Ok(FlipDecoder { sc, k, patches })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn patch_count(&self) -> usize {
        self.patches.len()
    }

    /// Patches searched by full enumeration (the rest use single-coordinate flips).
    pub fn full_count(&self) -> usize {
        self.patches.iter().filter(|p| p.full).count()
    }

    /// Lightest reachable local syndrome and the flip reaching it, if it beats w0.
    fn best_flip(&self, p: &FlipPatch, zl: &[Gf], w0: usize) -> Option<(usize, Vec<Gf>)> {
        let f = self.sc.field();
        let blocks = &p.patch.blocks;
        let mut best: Option<(usize, Vec<Gf>)> = None;
        if p.full {
            enumerate_span(f, zl, &p.patch.cols, blocks, FLIP_ENUM_LIMIT, |_, w, d| {
                if w < best.as_ref().map_or(w0, |b| b.0) {
                    best = Some((w, d.iter().map(|&x| x as Gf).collect()));
                }
                true
            })
            .expect("size checked");
        } else {
            for (i, col) in p.patch.cols.iter().enumerate() {
                for c in 1..f.order() as Gf {
                    let mut v = zl.to_vec();
                    f.axpy(&mut v, c, col);
                    let w = blocks.weight(&v);
                    if w < best.as_ref().map_or(w0, |b| b.0) {
                        let mut y = vec![0; p.patch.cols.len()];
                        y[i] = c;
                        best = Some((w, y));
                    }
                }
            }
        }
        best
    }

    /// Decodes a syndrome z ∈ C^{k+1}: the first face (in canonical order) with an improving
    /// flip applies its best flip, and the scan restarts.
    pub fn decode(&self, z: &[Gf], max_iters: usize) -> DecodeResult {
        let f = self.sc.field();
        let tb = self.sc.blocks(self.k + 1);
        let mut z = z.to_vec();
        let mut x_hat = vec![0; self.sc.dim(self.k)];
        let mut weight = tb.weight(&z);
        let mut iterations = 0;
        let outcome = loop {
            if weight == 0 {
                break DecodeOutcome::Success;
            }
            if iterations == max_iters {
                break DecodeOutcome::Stalled;
            }
            let mut applied = false;
            for p in &self.patches {
                let zl = p.patch.gather(&z);
                let w0 = p.patch.blocks.weight(&zl);
                if w0 == 0 {
                    continue;
                }
                if let Some((w, y)) = self.best_flip(p, &zl, w0) {
                    let mut v = zl;
                    for (i, &c) in y.iter().enumerate() {
                        if c != 0 {
                            x_hat[p.patch.src[i]] ^= c;
                            f.axpy(&mut v, c, &p.patch.cols[i]);
                        }
                    }
                    for (&r, &val) in p.patch.rows.iter().zip(&v) {
                        z[r] = val;
                    }
                    weight = weight - w0 + w;
                    applied = true;
                    break;
                }
            }
            if !applied {
                break DecodeOutcome::Stalled;
            }
            iterations += 1;
        };
        DecodeResult { outcome, x_hat, residual_weight: weight, residual: z, iterations }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub weight: usize,
    pub shots: usize,
    /// Syndrome driven to zero.
    pub cleared: usize,
    /// Residual error x + x̂ is a coboundary.
    pub success: usize,
    pub mean_iterations: f64,
}

impl CurvePoint {
    pub fn success_rate(&self) -> f64 {
        self.success as f64 / self.shots.max(1) as f64
    }
}

/// Random errors of each block weight; shots run in parallel with one rng stream each.
/// `syndrome_noise` flips each syndrome coordinate with that probability.
pub fn decode_curve(
    dec: &FlipDecoder,
    weights: &[usize],
    shots: usize,
    seed: u64,
    syndrome_noise: f64,
) -> Result<Vec<CurvePoint>, AnalysisError> {
    let sc = dec.sc;
    let k = dec.k;
    let f = sc.field();
    let blocks = sc.blocks(k);
    let delta = sc.delta(k)?;
    let tester = ClassTester::new(sc, k, DistMode::Cosyst)?;
    let max_iters = blocks.count().max(1) * 4;
    weights
        .iter()
        .map(|&w| {
            if w > blocks.count() {
                return Err(AnalysisError::ShapeMismatch(format!("error weight {w} exceeds {} faces", blocks.count())));
            }
            let results: Vec<(bool, bool, usize)> = (0..shots)
                .into_par_iter()
                .map(|s| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream((w as u64) << 32 | s as u64);
                    let mut x = vec![0; blocks.total()];
                    for b in sample(&mut rng, blocks.count(), w) {
                        let r = blocks.range(b);
                        loop {
                            for i in r.clone() {
                                x[i] = f.random(&mut rng);
                            }
                            if x[r.clone()].iter().any(|&v| v != 0) {
                                break;
                            }
                        }
                    }
                    let mut z = delta.mul_vec(f, &x);
                    if syndrome_noise > 0.0 {
                        for v in z.iter_mut() {
                            if rng.gen_bool(syndrome_noise) {
                                *v ^= f.random_nonzero(&mut rng);
                            }
                        }
                    }
                    let res = dec.decode(&z, max_iters);
                    let mut e = x;
                    for (a, &b) in e.iter_mut().zip(&res.x_hat) {
                        *a ^= b;
                    }
                    (res.outcome == DecodeOutcome::Success, tester.is_trivial(&e), res.iterations)
                })
                .collect();
            Ok(CurvePoint {
                weight: w,
                shots,
                cleared: results.iter().filter(|r| r.0).count(),
                success: results.iter().filter(|r| r.1).count(),
                mean_iterations: results.iter().map(|r| r.2 as f64).sum::<f64>() / shots.max(1) as f64,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RatePoint {
    pub p: f64,
    pub shots: usize,
    pub cleared: usize,
    pub success: usize,
    pub mean_error_weight: f64,
    pub mean_iterations: f64,
}

/// Each face carries an independent nonzero error with probability p.
pub fn decode_rate(dec: &FlipDecoder, p: f64, shots: usize, seed: u64, syndrome_noise: f64) -> Result<RatePoint, AnalysisError> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&syndrome_noise) {
        return Err(AnalysisError::ShapeMismatch(format!("probabilities must lie in [0, 1]: p = {p}, syndrome noise = {syndrome_noise}")));
    }
    let sc = dec.sc;
    let f = sc.field();
    let blocks = sc.blocks(dec.k);
    let delta = sc.delta(dec.k)?;
    let tester = ClassTester::new(sc, dec.k, DistMode::Cosyst)?;
    let max_iters = blocks.count().max(1) * 4;
    let results: Vec<(bool, bool, usize, usize)> = (0..shots)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let mut x = vec![0; blocks.total()];
            let mut w = 0;
            for b in 0..blocks.count() {
                if rng.gen_bool(p) {
                    let r = blocks.range(b);
                    loop {
                        for i in r.clone() {
                            x[i] = f.random(&mut rng);
                        }
                        if x[r.clone()].iter().any(|&v| v != 0) {
                            break;
                        }
                    }
                    w += 1;
                }
            }
            let mut z = delta.mul_vec(f, &x);
            if syndrome_noise > 0.0 {
                for v in z.iter_mut() {
                    if rng.gen_bool(syndrome_noise) {
                        *v ^= f.random_nonzero(&mut rng);
                    }
                }
            }
            let res = dec.decode(&z, max_iters);
            for (a, &b) in x.iter_mut().zip(&res.x_hat) {
                *a ^= b;
            }
            (res.outcome == DecodeOutcome::Success, tester.is_trivial(&x), w, res.iterations)
        })
        .collect();
    let n = shots.max(1) as f64;
    Ok(RatePoint {
        p,
        shots,
        cleared: results.iter().filter(|r| r.0).count(),
        success: results.iter().filter(|r| r.1).count(),
        mean_error_weight: results.iter().map(|r| r.2 as f64).sum::<f64>() / n,
        mean_iterations: results.iter().map(|r| r.3 as f64).sum::<f64>() / n,
    })
}
