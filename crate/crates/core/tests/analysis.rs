use std::sync::Arc;

use hdx_core::analysis::*;
use hdx_core::builders::{group_cyclic, group_z2e};
use hdx_core::cosets::Ratio;
use hdx_core::ff2e::*;
use hdx_core::geometry::ComplexGeometry;
use hdx_core::sheaf::{LocalCodes, SheafComplex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn geom_cyclic(order: usize, gens: &[Vec<i64>]) -> Arc<ComplexGeometry> {
    let (size, ps) = group_cyclic(order, gens).unwrap();
    Arc::new(ComplexGeometry::build(size, ps).unwrap())
}

fn geom_z2e(m: u32, gens: &[Vec<u64>]) -> Arc<ComplexGeometry> {
    let (size, ps) = group_z2e(m, gens).unwrap();
    Arc::new(ComplexGeometry::build(size, ps).unwrap())
}

fn complex(geom: Arc<ComplexGeometry>, e: u32, h: Vec<Vec<Vec<Gf>>>) -> SheafComplex {
    let f = field_make(e).unwrap();
    let h = h.iter().map(|rows| FieldMatrix::from_rows(rows)).collect();
    SheafComplex::new(geom, LocalCodes::new(f, h).unwrap()).unwrap()
}

fn line_z4() -> SheafComplex {
    complex(geom_cyclic(4, &[vec![1, -1, 2]]), 1, vec![vec![vec![1, 1, 1]]])
}

/// t = 2 on Z_3 with A = {±1} in both directions and h = [1 1].
fn tiny_square() -> SheafComplex {
    complex(geom_cyclic(3, &[vec![1, -1], vec![1, -1]]), 1, vec![vec![vec![1, 1]], vec![vec![1, 1]]])
}

/// t = 2 on Z_5 with three generators per direction, mixed codes.
fn square_z5() -> SheafComplex {
    complex(geom_cyclic(5, &[vec![1, -1, 0], vec![2, -2, 0]]), 1, vec![vec![vec![1, 1, 1]], vec![vec![1, 1, 0], vec![0, 1, 1]]])
}

fn cube8() -> SheafComplex {
    complex(geom_z2e(3, &[vec![1, 2], vec![4, 5], vec![6, 7]]), 1, vec![vec![vec![1, 1]]; 3])
}

fn all_vectors(q: usize, len: usize) -> impl Iterator<Item = Vec<Gf>> {
    let total = q.pow(len as u32);
    (0..total).map(move |mut c| {
        (0..len)
            .map(|_| {
                let d = c % q;
                c /= q;
                d as Gf
            })
            .collect()
    })
}

fn stacked_rank(f: &Field, m: Option<&FieldMatrix>, x: &[Gf]) -> (usize, usize) {
    let mut rows: Vec<Vec<Gf>> = match m {
        Some(m) => {
            let t = m.transpose();
            (0..t.rows())
                .map(|r| {
                    let mut v = vec![0; x.len()];
                    for (c, a) in t.row(r) {
                        v[c] = a;
                    }
                    v
                })
                .collect()
        }
        None => vec![],
    };
    let base = rank(f, &FieldMatrix::from_dense_rows(rows.len(), x.len(), &rows));
    rows.push(x.to_vec());
    (base, rank(f, &FieldMatrix::from_dense_rows(rows.len(), x.len(), &rows)))
}

/// Least weight of a nontrivial class by enumerating the kernel and testing image membership by
/// rank. `None` when the kernel is too large to enumerate.
fn oracle_mu(sc: &SheafComplex, k: usize, mode: DistMode) -> Option<Option<usize>> {
    let f = sc.field();
    let t = sc.t();
    let (ker, im) = match mode {
        DistMode::Cosyst => (
            (k < t).then(|| sc.delta(k).unwrap()),
            (k >= 1).then(|| sc.delta(k - 1).unwrap()),
        ),
        DistMode::Syst => (
            (k >= 1).then(|| sc.partial(k).unwrap()),
            (k < t).then(|| sc.partial(k + 1).unwrap()),
        ),
    };
    let basis = match ker {
        Some(m) => kernel_basis_dense(f, m),
        None => (0..sc.dim(k)).map(|i| (0..sc.dim(k)).map(|j| (i == j) as Gf).collect()).collect(),
    };
    if basis.len() > 16 {
        return None;
    }
    let blocks = sc.blocks(k);
    let mut best: Option<usize> = None;
    for alpha in all_vectors(f.order(), basis.len()).skip(1) {
        let mut x = vec![0; sc.dim(k)];
        for (b, &a) in basis.iter().zip(&alpha) {
            if a != 0 {
                f.axpy(&mut x, a, b);
            }
        }
        let w = blocks.weight(&x);
        if best.map_or(true, |b| w < b) {
            let (r0, r1) = stacked_rank(f, im, &x);
            if r1 > r0 {
                best = Some(w);
            }
        }
    }
    Some(best)
}

fn measured_distance(m: &Measured) -> Option<usize> {
    if m.upper.is_infinite() {
        None
    } else {
        assert!(m.is_exact());
        Some(m.distance().unwrap() as usize)
    }
}

#[test]
fn mu_on_the_line_matches_kernel_enumeration() {
    let sc = line_z4();
    let m = brute_mu(&sc, 0, DistMode::Cosyst, 1 << 20).unwrap();
    assert_eq!(Some(measured_distance(&m)), oracle_mu(&sc, 0, DistMode::Cosyst));
    assert!(verify_distance_witness(&sc, 0, DistMode::Cosyst, &m).unwrap());
    for (k, mode) in [(1, DistMode::Syst), (1, DistMode::Cosyst), (0, DistMode::Syst)] {
        let m = brute_mu(&sc, k, mode, 1 << 20).unwrap();
        assert_eq!(Some(measured_distance(&m)), oracle_mu(&sc, k, mode), "level {k} {mode:?}");
        assert!(verify_distance_witness(&sc, k, mode, &m).unwrap());
    }
}

#[test]
fn mu_on_small_squares_matches_oracle() {
    let mut checked = 0;
    for sc in [tiny_square(), square_z5()] {
        for k in 0..=2 {
            for mode in [DistMode::Syst, DistMode::Cosyst] {
                let m = brute_mu(&sc, k, mode, 1 << 22).unwrap();
                if let Some(want) = oracle_mu(&sc, k, mode) {
                    assert_eq!(measured_distance(&m), want, "level {k} {mode:?}");
                    if want.is_none() {
                        assert_eq!(m.method, MeasureMethod::Trivial);
                    }
                    checked += 1;
                }
                assert!(verify_distance_witness(&sc, k, mode, &m).unwrap());
                assert!(spot_check_witness(&sc, k, mode, &m, 1000, 7).unwrap());
            }
        }
    }
    assert!(checked >= 8);
}

#[test]
fn support_scan_agrees_with_enumeration() {
    let sc = square_z5();
    for k in 0..=2 {
        for mode in [DistMode::Syst, DistMode::Cosyst] {
            let full = brute_mu(&sc, k, mode, 1 << 22).unwrap();
            // a budget too small for the quotient forces the support scan
            let scan = brute_mu(&sc, k, mode, 1 << 14).unwrap();
            if scan.is_exact() {
                assert_eq!(scan.upper, full.upper, "level {k} {mode:?}");
            } else {
                assert!(scan.lower <= full.upper && full.upper <= scan.upper);
            }
            assert!(verify_distance_witness(&sc, k, mode, &scan).unwrap());
        }
    }
}

#[test]
fn class_tester_matches_rank_membership() {
    let sc = square_z5();
    let f = sc.field();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..=2 {
        let tester = ClassTester::new(&sc, k, DistMode::Cosyst).unwrap();
        let ker = if k < 2 { kernel_basis_dense(f, sc.delta(k).unwrap()) } else { vec![] };
        let im = (k >= 1).then(|| sc.delta(k - 1).unwrap());
        for _ in 0..50 {
            let mut x = vec![0; sc.dim(k)];
            for b in &ker {
                if rng.gen_bool(0.5) {
                    f.axpy(&mut x, 1, b);
                }
            }
            if k == 2 {
                x = (0..sc.dim(k)).map(|_| rng.gen_range(0..2)).collect();
            }
            let (r0, r1) = stacked_rank(f, im, &x);
            assert_eq!(tester.is_trivial(&x), r0 == r1);
        }
    }
}

fn oracle_coloc(sc: &SheafComplex, k: usize) -> Option<usize> {
    let f = sc.field();
    let geom = sc.geometry();
    let ker = kernel_basis_dense(f, sc.delta(k).unwrap());
    let d = sc.delta(k - 1).unwrap();
    let blocks = sc.blocks(k);
    let locals: Vec<Vec<usize>> = (0..geom.level_size(0))
        .map(|v| geom.link_up(&geom.face_at(0, v), k - 1).unwrap().iter().flat_map(|u| sc.face_coords(u)).collect())
        .collect();
    let mut best = None;
    for alpha in all_vectors(f.order(), ker.len()).skip(1) {
        let mut x = vec![0; sc.dim(k)];
        for (b, &a) in ker.iter().zip(&alpha) {
            f.axpy(&mut x, a, b);
        }
        let w = blocks.weight(&x);
        if best.map_or(false, |b| w >= b) {
            continue;
        }
        let minimal = locals.iter().all(|cols| {
            all_vectors(f.order(), cols.len()).all(|ys| {
                let mut y = vec![0; sc.dim(k - 1)];
                for (&c, &v) in cols.iter().zip(&ys) {
                    y[c] = v;
                }
                let mut z = d.mul_vec(f, &y);
                for (a, &b) in z.iter_mut().zip(&x) {
                    *a ^= b;
                }
                blocks.weight(&z) >= w
            })
        });
        if minimal {
            best = Some(w);
        }
    }
    best
}

#[test]
fn d_coloc_matches_definition() {
    {
        let sc = tiny_square();
        for k in 1..2 {
            let m = d_coloc(&sc, k, 1 << 20).unwrap();
            assert_eq!(measured_distance(&m), oracle_coloc(&sc, k), "level {k}");
            if let Some(x) = &m.witness {
                assert!(is_locally_co_minimal(&sc, k, x).unwrap());
                assert!(sc.delta(k).unwrap().mul_vec(sc.field(), x).iter().all(|&v| v == 0));
            }
            let mu = brute_mu(&sc, k, DistMode::Cosyst, 1 << 22).unwrap();
            assert!(mu.upper >= m.upper);
        }
    }
}

#[test]
fn d_coloc_at_level_zero_is_cosystolic_distance() {
    for sc in [line_z4(), tiny_square(), square_z5()] {
        let m = d_coloc(&sc, 0, 1 << 20).unwrap();
        let mu = brute_mu(&sc, 0, DistMode::Cosyst, 1 << 20).unwrap();
        assert_eq!(m.upper, mu.upper);
        assert!(m.is_exact());
    }
}

fn oracle_eps_cocyc(sc: &SheafComplex, k: usize) -> Ratio {
    let f = sc.field();
    let d = sc.delta(k).unwrap();
    let ker = kernel_basis_dense(f, d);
    let kernel: Vec<Vec<Gf>> = all_vectors(f.order(), ker.len())
        .map(|alpha| {
            let mut v = vec![0; sc.dim(k)];
            for (b, &a) in ker.iter().zip(&alpha) {
                f.axpy(&mut v, a, b);
            }
            v
        })
        .collect();
    let (src, tgt) = (sc.blocks(k), sc.blocks(k + 1));
    let mut best = Ratio::INFINITY;
    for x in all_vectors(f.order(), sc.dim(k)) {
        let num = tgt.weight(&d.mul_vec(f, &x));
        if num == 0 {
            continue;
        }
        let dist = kernel
            .iter()
            .map(|y| src.weight(&x.iter().zip(y).map(|(a, b)| a ^ b).collect::<Vec<_>>()))
            .min()
            .unwrap();
        best = best.min(Ratio::new(num as u64, dist as u64));
    }
    best
}

#[test]
fn cocycle_expansion_matches_definition_scan() {
    let sc = tiny_square();
    let m = expansion(&sc, 0, ExpMode::Cocyc, 1 << 22).unwrap();
    assert!(m.is_exact());
    assert_eq!(m.upper, oracle_eps_cocyc(&sc, 0));
    assert!(verify_expansion_witness(&sc, 0, ExpMode::Cocyc, &m, 1 << 22).unwrap());
    // the bound through locally co-minimal distance never exceeds the exact value
    let dn = d_coloc(&sc, 1, 1 << 22).unwrap();
    assert!(cosys_exp_bound(&sc, 0, &dn) <= m.lower);
    let line = line_z4();
    let m = expansion(&line, 0, ExpMode::Cocyc, 1 << 20).unwrap();
    assert_eq!(m.upper, oracle_eps_cocyc(&line, 0));
}

#[test]
fn cycle_expansion_witness_reverifies() {
    let sc = square_z5();
    for k in 1..=2 {
        let m = expansion(&sc, k, ExpMode::Cyc, 1 << 22).unwrap();
        assert!(verify_expansion_witness(&sc, k, ExpMode::Cyc, &m, 1 << 22).unwrap(), "level {k}");
        assert!(m.lower <= m.upper);
    }
}

#[test]
fn dual_complex_invariants() {
    for sc in [line_z4(), square_z5(), cube8()] {
        let rep = dual_check(&sc, 5);
        assert!(rep.all_pass(), "{:?}", rep.failures().collect::<Vec<_>>());
        let dd = dual_complex(&dual_complex(&sc));
        assert_eq!(dd.chain_dims(), sc.chain_dims());
    }
    // h = [1 1 1]: the dual code is spanned by the two weight-2 checks
    let sc = line_z4();
    let d = dual_complex(&sc);
    assert_eq!(d.codes().m(0), 2);
    let m = brute_mu(&d, 0, DistMode::Cosyst, 1 << 20).unwrap();
    assert_eq!(Some(measured_distance(&m)), oracle_mu(&d, 0, DistMode::Cosyst));
}

fn random_chain(sc: &SheafComplex, k: usize, density: f64, rng: &mut ChaCha8Rng) -> Vec<Gf> {
    let f = sc.field();
    let blocks = sc.blocks(k);
    let mut x = vec![0; blocks.total()];
    for b in 0..blocks.count() {
        if rng.gen_bool(density) {
            for i in blocks.range(b) {
                x[i] = f.random(rng);
            }
        }
    }
    x
}

#[test]
fn delta_squares_to_zero_and_commutes_with_local_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for sc in [square_z5(), cube8()] {
        let t = sc.t();
        for trial in 0..100 {
            let k = 1 + trial % t;
            let level = trial % k;
            let y = random_view(&sc, level, k, 0.2, &mut rng);
            let dy = delta_k_apply(&sc, &y).unwrap();
            assert!(delta_k_apply(&sc, &dy).unwrap().is_zero());
            let lhs = partial_l(&sc, &dy).unwrap();
            let rhs = delta_k_apply(&sc, &partial_l(&sc, &y).unwrap()).unwrap();
            assert_eq!(lhs, rhs, "trial {trial}");
        }
    }
}

#[test]
fn global_chains_have_closed_views() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let sc = cube8();
    for k in 0..=3 {
        let x = random_chain(&sc, k, 0.3, &mut rng);
        let v = local_views(&sc, &x, k, 0).unwrap();
        assert!(v.weight() <= sc.blocks(k).weight(&x) << k);
        assert!(delta_k_apply(&sc, &v).unwrap().is_zero());
        assert_eq!(stitch(&sc, &v).unwrap(), x);
    }
}

#[test]
fn delta_solve_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for sc in [square_z5(), cube8()] {
        let t = sc.t();
        for trial in 0..60 {
            let k = 1 + trial % t;
            let level = trial % k;
            let z0 = random_view(&sc, level, k, 0.1, &mut rng);
            let y = delta_k_apply(&sc, &z0).unwrap();
            let (z, stats) = delta_k_solve(&sc, &y).unwrap();
            assert_eq!(delta_k_apply(&sc, &z).unwrap(), y);
            assert!(stats.within_bound(), "{stats:?}");
        }
        let zero = LocalViewCochain::zero(1, 2);
        assert!(delta_k_solve(&sc, &zero).unwrap().0.is_zero());
    }
}

#[test]
fn delta_solve_is_local_to_each_face() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let sc = cube8();
    let geom = sc.geometry();
    let z0 = random_view(&sc, 0, 2, 0.3, &mut rng);
    let y = delta_k_apply(&sc, &z0).unwrap();
    let (z, _) = delta_k_solve(&sc, &y).unwrap();
    let u = *y.views.values().next().unwrap().keys().next().unwrap() as usize;
    let mut only = LocalViewCochain::zero(y.level, y.k);
    for (&f, view) in &y.views {
        if let Some(v) = view.get(&(u as u32)) {
            only.add_entry(f as usize, u, v);
        }
    }
    let (zu, _) = delta_k_solve(&sc, &only).unwrap();
    let uf = geom.face_at(2, u);
    for (&g, view) in &zu.views {
        assert!(geom.is_below(&geom.face_at(0, g as usize), &uf));
        assert_eq!(view.keys().copied().collect::<Vec<_>>(), vec![u as u32]);
        assert_eq!(view.get(&(u as u32)).map(|v| v.as_slice()), z.get(g as usize, u));
    }
}

#[test]
fn delta_solve_rejects_open_cochains() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let sc = square_z5();
    loop {
        let y = random_view(&sc, 1, 2, 0.2, &mut rng);
        if !delta_k_apply(&sc, &y).unwrap().is_zero() {
            assert_eq!(delta_k_solve(&sc, &y).unwrap_err(), AnalysisError::NotACocycle);
            break;
        }
    }
}

#[test]
fn stitch_detects_a_corrupted_view() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let sc = square_z5();
    let x = random_chain(&sc, 1, 0.3, &mut rng);
    let mut v = local_views(&sc, &x, 1, 0).unwrap();
    let (&f, view) = v.views.iter().next().unwrap();
    let (&u, val) = view.iter().next().unwrap();
    let mut bad = vec![0; val.len()];
    bad[0] = 1;
    v.add_entry(f as usize, u as usize, &bad);
    assert_eq!(stitch(&sc, &v).unwrap_err(), AnalysisError::InconsistentViews { face: u as usize });
}

#[test]
fn stitch_weight_bound_on_random_consistent_views() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let sc = square_z5();
    let g = sc.geometry();
    let scale = (1 << sc.t()) * g.n().pow(sc.t() as u32);
    for _ in 0..100 {
        let k = rng.gen_range(0..=2);
        let x = random_chain(&sc, k, 0.05, &mut rng);
        let v = local_views(&sc, &x, k, 0).unwrap();
        let z = stitch(&sc, &v).unwrap();
        assert!(sc.blocks(k).weight(&z) <= scale * v.weight());
    }
}

fn check_fill_round_trip(sc: &SheafComplex, seed: u64, trials: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = CycleFiller::new(sc);
    let f = sc.field();
    let mut paths = std::collections::BTreeSet::new();
    for trial in 0..trials {
        let k = trial % sc.t();
        let z0 = random_chain(sc, k + 1, 0.05, &mut rng);
        let x = sc.partial(k + 1).unwrap().mul_vec(f, &z0);
        match filler.fill(&x, k).unwrap() {
            FillOutcome::Filled { z, trace } => {
                assert_eq!(sc.partial(k + 1).unwrap().mul_vec(f, &z), x);
                paths.insert(format!("{:?}", trace.path).chars().take(4).collect::<String>());
            }
            FillOutcome::Obstruction { .. } => panic!("boundary reported as obstruction (trial {trial})"),
        }
    }
    assert!(paths.contains("Dual"));
}

#[test]
fn fill_cycle_on_boundaries() {
    check_fill_round_trip(&square_z5(), 21, 40);
    check_fill_round_trip(&cube8(), 22, 30);
    let sc = cube8();
    let filler = CycleFiller::new(&sc);
    match filler.fill(&vec![0; sc.dim(1)], 1).unwrap() {
        FillOutcome::Filled { z, trace } => {
            assert!(z.iter().all(|&v| v == 0));
            assert_eq!(trace.path, FillPath::Zero);
        }
        _ => panic!(),
    }
}

#[test]
fn fill_cycle_obstructs_exactly_on_nontrivial_classes() {
    let (mut filled, mut obstructed) = (0, 0);
    for sc in [tiny_square(), square_z5(), cube8()] {
        let f = sc.field();
        let filler = CycleFiller::new(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for k in 0..=sc.t() {
            let ker = if k == 0 {
                (0..sc.dim(0)).map(|i| (0..sc.dim(0)).map(|j| (i == j) as Gf).collect()).collect()
            } else {
                kernel_basis_dense(f, sc.partial(k).unwrap())
            };
            let im = (k < sc.t()).then(|| sc.partial(k + 1).unwrap());
            for _ in 0..20 {
                let mut x = vec![0; sc.dim(k)];
                for b in &ker {
                    if rng.gen_bool(0.5) {
                        f.axpy(&mut x, f.random(&mut rng), b);
                    }
                }
                let (r0, r1) = stacked_rank(f, im, &x);
                let nontrivial = r1 > r0;
                match filler.fill(&x, k).unwrap() {
                    FillOutcome::Filled { z, .. } => {
                        filled += 1;
                        assert!(!nontrivial, "level {k}");
                        if k < sc.t() {
                            assert_eq!(sc.partial(k + 1).unwrap().mul_vec(f, &z), x);
                        }
                    }
                    FillOutcome::Obstruction { witness, level, .. } => {
                        obstructed += 1;
                        assert!(nontrivial, "level {k}");
                        assert_eq!(level, sc.t() - k);
                        let d = filler.dual();
                        if level < sc.t() {
                            assert!(d.delta(level).unwrap().mul_vec(f, &witness).iter().all(|&v| v == 0));
                        }
                        let dim = (level >= 1).then(|| d.delta(level - 1).unwrap());
                        let (a, b) = stacked_rank(f, dim, &witness);
                        assert!(b > a, "certificate is a dual coboundary");
                    }
                }
            }
            let m = brute_mu(&sc, k, DistMode::Syst, 1 << 22).unwrap();
            if let Some(x) = &m.witness {
                assert!(matches!(filler.fill(x, k).unwrap(), FillOutcome::Obstruction { .. }));
            }
        }
    }
    assert!(filled > 20 && obstructed > 20, "{filled} {obstructed}");
}

#[test]
fn fill_rejects_non_cycles() {
    let sc = square_z5();
    let filler = CycleFiller::new(&sc);
    let mut x = vec![0; sc.dim(1)];
    x[0] = 1;
    assert_eq!(filler.fill(&x, 1).unwrap_err(), AnalysisError::NotACycle);
}

#[test]
fn distance_inequality_on_small_instances() {
    for sc in [line_z4(), tiny_square(), square_z5()] {
        let dual = dual_complex(&sc);
        let t = sc.t();
        for k in 0..=t {
            let ms = brute_mu(&sc, k, DistMode::Syst, 1 << 22).unwrap();
            let md = brute_mu(&dual, t - k, DistMode::Cosyst, 1 << 22).unwrap();
            assert_ne!(distance_inequality(&sc, &ms, &md), Some(false), "level {k}");
        }
    }
}

#[test]
fn decoder_zero_syndrome() {
    let sc = square_z5();
    let dec = FlipDecoder::new(&sc, 1).unwrap();
    let r = dec.decode(&vec![0; sc.dim(2)], 10);
    assert_eq!(r.outcome, DecodeOutcome::Success);
    assert!(r.x_hat.iter().all(|&v| v == 0));
    assert_eq!(r.iterations, 0);
}

#[test]
fn decoder_clears_every_weight_one_error() {
    for (sc, k) in [(square_z5(), 0), (square_z5(), 1), (cube8(), 1)] {
        let f = sc.field();
        let dec = FlipDecoder::new(&sc, k).unwrap();
        let blocks = sc.blocks(k);
        let tester = ClassTester::new(&sc, k, DistMode::Cosyst).unwrap();
        let mu = brute_mu(&sc, k, DistMode::Cosyst, 1 << 22).unwrap();
        for b in 0..blocks.count() {
            for pattern in all_vectors(f.order(), blocks.size(b)).skip(1) {
                let mut x = vec![0; blocks.total()];
                x[blocks.range(b)].copy_from_slice(&pattern);
                let z = sc.delta(k).unwrap().mul_vec(f, &x);
                let r = dec.decode(&z, blocks.count());
                assert_eq!(r.outcome, DecodeOutcome::Success);
                assert!(r.iterations <= blocks.count());
                assert_eq!(sc.delta(k).unwrap().mul_vec(f, &r.x_hat), z);
                if mu.lower > Ratio::new(2, 1) {
                    let e: Vec<Gf> = x.iter().zip(&r.x_hat).map(|(a, b)| a ^ b).collect();
                    assert!(tester.is_trivial(&e));
                }
            }
        }
    }
}

#[test]
fn decoder_never_increases_syndrome_weight() {
    let sc = cube8();
    let f = sc.field();
    let dec = FlipDecoder::new(&sc, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..30 {
        let x = random_chain(&sc, 1, 0.1, &mut rng);
        let z = sc.delta(1).unwrap().mul_vec(f, &x);
        let w0 = sc.blocks(2).weight(&z);
        let r = dec.decode(&z, 1000);
        assert!(r.residual_weight <= w0);
        assert_eq!(r.residual_weight, sc.blocks(2).weight(&r.residual));
        let mut back = sc.delta(1).unwrap().mul_vec(f, &r.x_hat);
        for (a, &b) in back.iter_mut().zip(&r.residual) {
            *a ^= b;
        }
        assert_eq!(back, z);
    }
}

#[test]
fn decode_curve_is_deterministic() {
    let sc = square_z5();
    let dec = FlipDecoder::new(&sc, 1).unwrap();
    let a = decode_curve(&dec, &[1, 2], 50, 9, 0.0).unwrap();
    let b = decode_curve(&dec, &[1, 2], 50, 9, 0.0).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a[0].cleared, 50);
}

#[test]
fn codistance_constants_are_reported() {
    let sc = tiny_square();
    let dc = d_coloc(&sc, 1, 1 << 20).unwrap();
    let c = codistance_constants(&sc, 1, Some(&dc), 1 << 16).unwrap();
    assert_eq!(c.kappa.len(), 2);
    assert_eq!(c.a.len(), 1);
    assert!(c.c2 >= c.c1);
    assert!(c.holds.is_some());
    assert!(c.vacuous || c.bound <= dc.upper.value());
}

#[test]
fn distance_ledger_passes_on_tiny_square() {
    let (rep, levels) = distance_ledger(&tiny_square(), 1 << 22, 1);
    assert!(rep.all_pass(), "{:?}", rep.failures().collect::<Vec<_>>());
    assert_eq!(levels.len(), 3);
    assert!(rep.get("analysis.coloc.1").is_some());
}
