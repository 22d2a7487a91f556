use hdx_core::ff2e::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Independent GF(4) arithmetic: elements are a + b·w encoded as a | b << 1, w² = w + 1.
fn gf4_mul(x: u16, y: u16) -> u16 {
    let (a, b) = (x & 1, x >> 1);
    let (c, d) = (y & 1, y >> 1);
    let bd = b & d;
    let lo = (a & c) ^ bd;
    let hi = (a & d) ^ (b & c) ^ bd;
    lo | hi << 1
}

fn gf4_trace(x: u16) -> u16 {
    let sq = gf4_mul(x, x);
    x ^ sq
}

#[test]
fn gf4_self_dual_bases_by_enumeration() {
    // every ordered pair of distinct nonzero elements spanning GF(4)
    let mut selfdual = Vec::new();
    for a in 1..4u16 {
        for b in 1..4u16 {
            if a == b {
                continue;
            }
            let ok = gf4_trace(gf4_mul(a, a)) == 1 && gf4_trace(gf4_mul(b, b)) == 1 && gf4_trace(gf4_mul(a, b)) == 0;
            if ok {
                selfdual.push((a, b));
            }
        }
    }
    assert_eq!(selfdual, vec![(2, 3), (3, 2)]);
    let f = field_make(2).unwrap();
    assert_eq!(f.selfdual_basis(), &[2, 3]);
    for x in 0..4 {
        for y in 0..4 {
            assert_eq!(f.mul(x, y), gf4_mul(x, y));
        }
        assert_eq!(f.trace(x) as u16, gf4_trace(x));
    }
}

#[test]
fn field_make_examples() {
    let f = field_make(1).unwrap();
    assert_eq!(f.selfdual_basis(), &[1]);
    assert_eq!(field_make(17).unwrap_err(), FieldError::DegreeOutOfRange(17));
    for e in 1..=16 {
        assert!(is_irreducible(field_make(e).unwrap().modulus()));
    }
}

#[test]
fn kernel_of_parity_row_by_enumeration() {
    let f = field_make(1).unwrap();
    let m = FieldMatrix::from_rows(&[vec![1, 1, 1]]);
    let kernel: Vec<Vec<u16>> =
        (0..8u16).map(|x| (0..3).map(|i| x >> i & 1).collect()).filter(|v: &Vec<u16>| m.mul_vec(&f, v) == vec![0]).collect();
    assert_eq!(kernel.len(), 4);
    let basis = kernel_basis(&f, &m);
    assert_eq!(basis.len(), 2);
    for v in &basis {
        assert!(kernel.contains(&v.to_dense()));
    }
    assert!(kernel_basis(&f, &FieldMatrix::identity(3)).is_empty());
    assert_eq!(kernel_basis(&f, &FieldMatrix::zeros(2, 3)).len(), 3);
}

#[test]
fn solve_examples() {
    let f = field_make(2).unwrap();
    let m = FieldMatrix::from_rows(&[vec![1, 2, 0], vec![0, 3, 1]]);
    let zero = solve_linear(&f, &m, &FieldVector::zeros(2)).unwrap();
    assert!(zero.is_zero());
    let b = FieldVector::from_dense(&[3, 1]);
    let x = solve_linear(&f, &m, &b).unwrap();
    assert_eq!(m.apply(&f, &x), b);
}

fn random_matrix(f: &Field, rng: &mut ChaCha8Rng, r: usize, c: usize, density: f64) -> FieldMatrix {
    let mut t = Vec::new();
    for i in 0..r {
        for j in 0..c {
            if rng.gen_bool(density) {
                t.push((i, j, f.random_nonzero(rng)));
            }
        }
    }
    FieldMatrix::from_triplets(r, c, t)
}

#[test]
fn transpose_commutes_with_expansion_gf4() {
    let f = field_make(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let m = random_matrix(&f, &mut rng, 4, 5, 0.6);
        assert_eq!(f2_expand(&m.transpose(), &f), f2_expand(&m, &f).transpose());
    }
}

#[test]
fn field_axioms_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for e in [1, 2, 3, 4, 8, 13, 16] {
        let f = field_make(e).unwrap();
        for _ in 0..1000 {
            let (a, b, c) = (f.random(&mut rng), f.random(&mut rng), f.random(&mut rng));
            assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
            assert_eq!(f.add(a, a), 0);
            if a != 0 {
                assert_eq!(f.pow(a, f.order() as u64 - 1), 1);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_nullity(seed in any::<u64>(), e in 1u32..5, r in 1usize..9, c in 1usize..9) {
        let f = field_make(e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&f, &mut rng, r, c, 0.4);
        let k = kernel_basis(&f, &m);
        prop_assert_eq!(rank(&f, &m) + k.len(), c);
        for v in &k {
            prop_assert!(m.apply(&f, v).is_zero());
        }
        prop_assert_eq!(m.transpose().transpose(), m.clone());
        prop_assert_eq!(rank(&f, &m), rank(&f, &m.transpose()));
    }

    #[test]
    fn solve_hits_image(seed in any::<u64>(), e in 1u32..5, r in 1usize..8, c in 1usize..8) {
        let f = field_make(e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&f, &mut rng, r, c, 0.5);
        let x0: Vec<u16> = (0..c).map(|_| f.random(&mut rng)).collect();
        let b = FieldVector::from_dense(&m.mul_vec(&f, &x0));
        let x = solve_linear(&f, &m, &b).unwrap();
        prop_assert_eq!(m.apply(&f, &x), b);
    }

    #[test]
    fn expansion_is_functorial(seed in any::<u64>(), e in 1u32..6, r in 1usize..5, k in 1usize..5, c in 1usize..5) {
        let f = field_make(e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&f, &mut rng, r, k, 0.6);
        let b = random_matrix(&f, &mut rng, k, c, 0.6);
        prop_assert_eq!(f2_expand(&a.mul(&f, &b), &f), f2_expand(&a, &f).mul(&f2_expand(&b, &f)));
        prop_assert_eq!(f2_expand(&a.transpose(), &f), f2_expand(&a, &f).transpose());
        prop_assert_eq!(f2_expand(&a, &f).rank(), e as usize * rank(&f, &a));
    }
}
