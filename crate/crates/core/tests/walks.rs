use std::collections::HashSet;

use hdx_core::builders::{group_cyclic, group_z2e};
use hdx_core::geometry::{ComplexGeometry, Face, Label};
use hdx_core::walks::*;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn z2e(m: u32, gens: &[Vec<u64>]) -> ComplexGeometry {
    let (size, ps) = group_z2e(m, gens).unwrap();
    ComplexGeometry::build(size, ps).unwrap()
}

fn cyclic(order: usize, gens: &[Vec<i64>]) -> ComplexGeometry {
    let (size, ps) = group_cyclic(order, gens).unwrap();
    ComplexGeometry::build(size, ps).unwrap()
}

fn small_square() -> ComplexGeometry {
    cyclic(4, &[vec![1, -1], vec![1, -1]])
}

fn cube8() -> ComplexGeometry {
    z2e(3, &[vec![1, 2], vec![4, 5], vec![6, 7]])
}

fn disjoint(x: &ComplexGeometry, f: &Face, g: &Face) -> bool {
    let vf: HashSet<Face> = x.vertices(f).into_iter().collect();
    x.vertices(g).iter().all(|w| !vf.contains(w))
}

// Nb and Op straight from their definitions, scanning all faces.
fn brute_sets(x: &ComplexGeometry, v: &Face, k: usize) -> (Vec<Face>, Vec<Face>, Vec<Face>) {
    let tops: Vec<Face> = x.faces(k + 1).filter(|u| x.is_below(v, u)).collect();
    let (mut above, mut nb, mut op) = (vec![], vec![], vec![]);
    for f in x.faces(k) {
        if !tops.iter().any(|u| x.is_below(&f, u)) {
            continue;
        }
        if x.is_below(v, &f) {
            above.push(f);
        } else if disjoint(x, v, &f) {
            op.push(f);
        } else {
            nb.push(f);
        }
    }
    (above, nb, op)
}

#[test]
fn averaging_fixes_constants_and_is_adjoint() {
    let x = small_square();
    for level in 1..=2 {
        let (d, u) = down_up_ops(&x, level).unwrap();
        let one_hi = vec![1.0; x.level_size(level)];
        let one_lo = vec![1.0; x.level_size(level - 1)];
        assert!(d.apply(&one_hi).iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(u.apply(&one_lo).iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(adjointness_deviation(&x, level, 100, 9).unwrap() < 1e-12);
    }
    let (_, u) = down_up_ops(&x, 1).unwrap();
    let v = x.face_at(0, 5);
    let mut ind = vec![0.0; x.level_size(0)];
    ind[5] = 1.0;
    let img = u.apply(&ind);
    for (i, e) in x.faces(1).enumerate() {
        let expect = if x.is_below(&v, &e) { 0.5 } else { 0.0 };
        assert_eq!(img[i], expect);
    }
    assert!(down_up_ops(&x, 0).is_err());
}

#[test]
fn neighborhoods_match_definitions() {
    for x in [small_square(), cube8()] {
        for k in 0..x.t() {
            for lv in 0..=k {
                for v in x.faces(lv).step_by(7) {
                    let s = neighborhoods(&x, &v, k).unwrap();
                    assert!(s.partition_holds(&x, &v, k));
                    let (above, nb, op) = brute_sets(&x, &v, k);
                    assert_eq!((s.above, s.nb, s.op), (above, nb, op));
                }
            }
        }
    }
}

#[test]
fn line_opposites_are_edge_endpoints() {
    let x = cyclic(7, &[vec![1, -1, 3, -3]]);
    for v in x.faces(0) {
        let s = neighborhoods(&x, &v, 0).unwrap();
        assert!(s.nb.is_empty());
        assert_eq!(s.above, vec![v]);
        let mut ends: Vec<Face> = x
            .covers_up(&v)
            .into_iter()
            .flat_map(|(e, _)| x.covers_down(&e))
            .map(|(w, _)| w)
            .filter(|w| *w != v)
            .collect();
        ends.sort_by_key(|f| x.index_of(f));
        ends.dedup();
        assert_eq!(s.op, ends);
    }
}

#[test]
fn square_vertex_opposites() {
    // t=2 over Z_4 with generators ±1: a vertex sits in 4 squares, each
    // contributing its two far edges; edges meeting a vertex contain it
    let x = small_square();
    for v in x.faces(0) {
        let s = neighborhoods(&x, &v, 1).unwrap();
        assert_eq!(s.above.len(), 4);
        assert_eq!(s.op.len(), 8);
        assert!(s.nb.is_empty());
    }
}

fn brute_a(x: &ComplexGeometry, k: usize, l: usize) -> usize {
    let nb: Vec<(Face, Vec<Face>)> = x.faces(l + 1).map(|m| (m, brute_sets(x, &m, k).1)).collect();
    let mut best = 0;
    for vl in x.faces(l) {
        let above: Vec<Face> = x.faces(k).filter(|f| x.is_below(&vl, f)).collect();
        for vk in &above {
            for vk2 in &above {
                let c = nb.iter().filter(|(m, s)| x.is_below(&vl, m) && x.is_below(m, vk) && s.contains(vk2)).count();
                best = best.max(c);
            }
        }
    }
    best
}

#[test]
fn a_coefficients() {
    let x = small_square();
    assert_eq!(a_coeff(&x, 1, 0).unwrap(), 1);
    assert_eq!(brute_a(&x, 1, 0), 1);
    assert!(a_coeff(&x, 1, 1).is_err());
    let c = cube8();
    assert_eq!(a_coeff(&c, 2, 0).unwrap(), 1);
    assert_eq!(a_coeff(&c, 2, 1).unwrap(), 1);
    let a10 = a_coeff(&c, 1, 0).unwrap();
    assert_eq!(a10, brute_a(&c, 1, 0));
    assert_eq!(a10, 1);
    for (k, l) in [(1, 0), (2, 0), (2, 1)] {
        let a = a_coeff(&c, k, l).unwrap();
        assert!(a <= 8);
        assert_eq!(nb_bound_violations(&c, k, l, a).unwrap(), 0);
    }
}

#[test]
fn nb_bound_is_tight_at_a() {
    // with a smaller multiplier the inclusion must break somewhere
    let c = cube8();
    let a = a_coeff(&c, 1, 0).unwrap();
    assert!(nb_bound_violations(&c, 1, 0, a - 1).unwrap() > 0);
}

#[test]
fn walk_on_a_line_is_the_double_cover() {
    let gens = vec![1i64, -1, 2, -2];
    let (size, ps) = group_cyclic(9, &[gens.clone()]).unwrap();
    let x = ComplexGeometry::build(size, ps.clone()).unwrap();
    let w = walk_w(&x, 0, 0).unwrap();
    assert_eq!(w.normalizer, 4);
    let dense = w.to_dense().unwrap();
    let mut cover = DMatrix::<f64>::zeros(2 * size, 2 * size);
    let mut cay = DMatrix::<f64>::zeros(size, size);
    for g in 0..size as u32 {
        for a in 0..gens.len() {
            let h = ps[0].apply(a, g);
            cay[(g as usize, h as usize)] += 0.25;
            for b in 0..2u8 {
                let f = x.index_of(&Face::new(g, &[Label::Bit(b)]));
                let f2 = x.index_of(&Face::new(h, &[Label::Bit(1 - b)]));
                cover[(f, f2)] += 0.25;
            }
        }
    }
    assert_eq!(dense, cover);
    let mut ev_w: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
    let mut ev_c: Vec<f64> = SymmetricEigen::new(cay).eigenvalues.iter().flat_map(|&e| [e, -e]).collect();
    ev_w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev_c.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in ev_w.iter().zip(&ev_c) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn walks_are_exactly_doubly_stochastic() {
    for x in [small_square(), cube8(), cyclic(5, &[vec![1, -1, 2, -2], vec![1, -1, 2, -2]])] {
        for k in 0..x.t() {
            for l in 0..=k {
                let w = walk_w(&x, k, l).unwrap();
                assert_eq!(w.is_markov(), Some(true));
                assert_eq!(w.is_symmetric(), Some(true));
                assert_eq!(w.is_doubly_stochastic(), Some(true));
                assert_eq!(w.normalizer_holds(), Some(true));
                let op = walk_op(&x, k, l).unwrap();
                assert_eq!(op.is_markov(), Some(true));
                assert_eq!(op_dominated(&op, &w), Some(true));
            }
        }
    }
    assert!(walk_w(&small_square(), 2, 0).is_err());
    assert!(walk_w(&small_square(), 0, 1).is_err());
}

#[test]
fn normalizer_on_the_square() {
    let x = small_square();
    // C(k,l)C(t-l,k-l)(t-l)2^{k-l}n^{k+1-l} with t = n = 2
    assert_eq!(walk_w(&x, 0, 0).unwrap().normalizer, 4);
    assert_eq!(walk_w(&x, 1, 0).unwrap().normalizer, 2 * 2 * 2 * 4);
    assert_eq!(walk_w(&x, 1, 1).unwrap().normalizer, 2);
}

// W as the composition U^{k-l} M D^{k-l}.
fn composed(x: &ComplexGeometry, k: usize, l: usize, phi: &[f64]) -> Vec<f64> {
    let mut cur = phi.to_vec();
    for level in (l + 1..=k).rev() {
        cur = down_up_ops(x, level).unwrap().0.apply(&cur);
    }
    let stepped: Vec<f64> = x
        .faces(l)
        .map(|v| {
            let free: Vec<usize> = (0..x.t()).filter(|&j| v.bit(j).is_some()).collect();
            let mut s = 0.0;
            for &i in &free {
                for a in 0..x.n() {
                    let mut w = v;
                    w.g = x.permset(i).apply(a, v.g);
                    w.set_label(i, Label::Bit(1 - v.bit(i).unwrap()));
                    s += cur[x.index_of(&w)];
                }
            }
            s / (free.len() * x.n()) as f64
        })
        .collect();
    cur = stepped;
    for level in l + 1..=k {
        cur = down_up_ops(x, level).unwrap().1.apply(&cur);
    }
    cur
}

#[test]
fn walk_matches_operator_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for x in [small_square(), cube8()] {
        for k in 0..x.t() {
            for l in 0..=k {
                let w = walk_w(&x, k, l).unwrap().to_dense().unwrap();
                for _ in 0..5 {
                    let phi: Vec<f64> = (0..x.level_size(k)).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let direct = &w * nalgebra::DVector::from_vec(phi.clone());
                    let comp = composed(&x, k, l, &phi);
                    for (a, b) in direct.iter().zip(&comp) {
                        assert!((a - b).abs() < 1e-12, "k={k} l={l}");
                    }
                }
            }
        }
    }
}

#[test]
fn quadratic_forms() {
    let x = z2e(4, &[vec![1, 2, 3], vec![4, 8, 12]]);
    let (lambda, r) = expansion_params(&x).unwrap();
    assert!((lambda - 1.0 / 3.0).abs() < 1e-9);
    assert!((r - 0.25).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..2 {
        for l in 0..=k {
            let w = walk_w(&x, k, l).unwrap();
            let empty = quad_form_check(&x, &w, "empty", &[], lambda, r, &mut rng);
            assert_eq!(empty.form.value, 0.0);
            assert!(empty.ok);
            let all: Vec<usize> = (0..x.level_size(k)).collect();
            let full = quad_form_check(&x, &w, "all", &all, lambda, r, &mut rng);
            assert_eq!(full.form.exact, Some((w.normalizer * all.len() as u64, w.normalizer)));
            assert!(full.ok);
            let dense = w.to_dense().unwrap();
            for (_, a) in random_sets(&x, k, 10, 3) {
                let mut ind = nalgebra::DVector::zeros(x.level_size(k));
                a.iter().for_each(|&i| ind[i] = 1.0);
                let q = quad_form_check(&x, &w, "r", &a, lambda, r, &mut rng);
                assert!((q.form.value - ind.dot(&(&dense * &ind))).abs() < 1e-9);
                assert!(q.ok);
            }
        }
    }
}

#[test]
fn sampler_interval_covers_exact_value() {
    let x = small_square();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (k, l) in [(0, 0), (1, 0), (1, 1)] {
        let exact = walk_w(&x, k, l).unwrap();
        let sampled = walk_w_with(&x, k, l, 0).unwrap();
        assert!(sampled.is_markov().is_none());
        let a: Vec<usize> = (0..x.level_size(k)).step_by(3).collect();
        let e = quad_form(&x, &exact, &a, 50.0, &mut rng);
        let s = quad_form(&x, &sampled, &a, 50.0, &mut rng);
        let (lo, hi) = s.interval.unwrap();
        assert!(lo <= e.value && e.value <= hi, "{lo} {} {hi}", e.value);
        assert!(hi - lo < 0.05 * 50.0);
        let op = walk_op_with(&x, k, l, 0).unwrap();
        let f = x.face_at(k, 0);
        for _ in 0..20 {
            let g = op.sample_step(&x, &f, &mut rng);
            assert_eq!(g.dim(), k);
        }
    }
}

#[test]
fn mixing_primitive() {
    let x = cyclic(12, &[vec![1, -1, 5, -5], vec![3, -3, 4, -4]]);
    let (bad, tried) = ac_check(&x, 40, 2).unwrap();
    assert_eq!(bad, 0);
    assert!(tried >= 80);
}

#[test]
fn ledger_on_small_instances() {
    for x in [small_square(), cube8()] {
        let rep = walk_ledger(&x, 20, 11).unwrap();
        let fails: Vec<_> = rep.failures().map(|e| &e.check_id).collect();
        assert!(fails.is_empty(), "{fails:?}");
        assert!(rep.get("walks.a_table").is_some());
    }
}
