use hdx_core::builders::*;
use hdx_core::geometry::{ComplexGeometry, PermutationSet};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

#[test]
fn hypercube_spectrum() {
    let (size, ps) = group_z2e(3, &[vec![1, 2, 4]]).unwrap();
    let rep = estimate_expansion(size, &ps[0]).unwrap();
    assert_eq!(rep.components.len(), 1);
    let c = &rep.components[0];
    assert!(close(c.second_eigenvalue, 1.0 / 3.0));
    // bipartite: the magnitude includes the eigenvalue −1
    assert!(close(c.lambda, 1.0));
    assert!(close(rep.r, 1.0));
}

#[test]
fn complete_graph_spectrum() {
    let (size, ps) = group_cyclic(4, &[vec![1, 2, 3]]).unwrap();
    let rep = estimate_expansion(size, &ps[0]).unwrap();
    assert!(close(rep.lambda_max, 1.0 / 3.0));
    assert!(close(rep.components[0].second_eigenvalue, -1.0 / 3.0));
}

#[test]
fn disjoint_copies() {
    // translations by ±2 in Z_8 split into the even and odd residues, each a 4-cycle
    let (size, ps) = group_cyclic(8, &[vec![2, -2]]).unwrap();
    let rep = estimate_expansion(size, &ps[0]).unwrap();
    assert_eq!(rep.components.len(), 2);
    assert!(close(rep.r, 0.5));
    for c in &rep.components {
        assert_eq!(c.size, 4);
        assert!(close(c.lambda, 1.0));
        assert!(close(c.second_eigenvalue, 0.0));
    }
}

#[test]
fn power_iteration_matches_dense() {
    for (order, gens) in [(31usize, vec![1i64, -1, 5, -5]), (40, vec![1, -1, 3, -3, 20]), (26, vec![1, -1])] {
        let (size, ps) = group_cyclic(order, &[gens]).unwrap();
        let dense = estimate_expansion_with(size, &ps[0], usize::MAX).unwrap();
        let power = estimate_expansion_with(size, &ps[0], 0).unwrap();
        assert_eq!(power.components[0].method, "power");
        for (d, p) in dense.components.iter().zip(&power.components) {
            assert!((d.lambda - p.lambda).abs() < 1e-7, "{d:?} {p:?}");
            assert!((d.second_eigenvalue - p.second_eigenvalue).abs() < 1e-7, "{d:?} {p:?}");
        }
    }
}

#[test]
fn z2e_generators() {
    let (size, ps) = group_z2e(3, &[vec![1, 2, 7], vec![3, 5, 6]]).unwrap();
    assert_eq!(size, 8);
    assert!(ComplexGeometry::build(size, ps.clone()).is_ok());
    assert!(ps.iter().all(|p| markov_symmetric(size, p)));
    let (_, loops) = group_z2e(2, &[vec![0, 1]]).unwrap();
    assert!(loops[0].is_identity(0));
    assert!(matches!(group_z2e(3, &[vec![1, 1]]), Err(BuildError::DuplicateGenerator { direction: 0, generator: 1 })));
}

fn k4() -> (AbelianGroup, Vec<usize>) {
    let base = AbelianGroup::new(vec![2, 2]).unwrap();
    (base, vec![1, 2, 3])
}

#[test]
fn lift_of_k4() {
    let (base, gens) = k4();
    let lift = AbelianGroup::new(vec![2]).unwrap();
    let spec = BaseGraphSpec::constant(base, gens, lift, 1);
    let (size, ps) = abelian_lift_product(&spec, 2).unwrap();
    assert_eq!(size, 32);
    let x = ComplexGeometry::build(size, ps.clone()).unwrap();
    assert!(x.count_check().all_pass());
    assert!(ps.iter().all(|p| markov_symmetric(size, p)));
}

#[test]
fn trivial_lift_is_a_product() {
    let (base, gens) = k4();
    let spec = BaseGraphSpec::constant(base, gens.clone(), AbelianGroup::new(vec![]).unwrap(), 0);
    let (size, ps) = abelian_lift_product(&spec, 2).unwrap();
    assert_eq!(size, 16);
    // direction 0 moves the first coordinate only
    for (i, &g) in gens.iter().enumerate() {
        for v in 0..16u32 {
            let (v1, v2) = (v / 4, v % 4);
            assert_eq!(ps[0].apply(i, v), ((v1 as usize ^ g) * 4) as u32 + v2);
            assert_eq!(ps[1].apply(i, v), v1 * 4 + (v2 as usize ^ g) as u32);
        }
    }
}

#[test]
fn random_lift_builds() {
    let base = AbelianGroup::new(vec![7]).unwrap();
    let lift = AbelianGroup::new(vec![5]).unwrap();
    let spec = BaseGraphSpec::random(base, vec![1, 6, 2, 5], lift, 3).unwrap();
    let (size, ps) = abelian_lift_product(&spec, 3).unwrap();
    assert_eq!(size, 5 * 343);
    assert!(ComplexGeometry::build(size, ps).is_ok());
}

#[test]
fn inconsistent_labels_rejected() {
    let base = AbelianGroup::new(vec![4]).unwrap();
    let lift = AbelianGroup::new(vec![4]).unwrap();
    let spec = BaseGraphSpec::constant(base, vec![1, 3], lift, 1);
    assert!(matches!(abelian_lift_product(&spec, 2), Err(BuildError::LiftAssignmentMismatch { .. })));
    let base = AbelianGroup::new(vec![4]).unwrap();
    let spec = BaseGraphSpec::constant(base, vec![1, 2], AbelianGroup::new(vec![2]).unwrap(), 0);
    assert!(matches!(abelian_lift_product(&spec, 1), Err(BuildError::NotRegular(_))));
}

#[test]
fn lift_components_give_r() {
    // the t-fold lift splits into copies indexed by the other coordinates
    let (base, gens) = k4();
    let spec = BaseGraphSpec::constant(base, gens, AbelianGroup::new(vec![2]).unwrap(), 1);
    let (size, ps) = abelian_lift_product(&spec, 2).unwrap();
    let rep = estimate_expansion(size, &ps[0]).unwrap();
    assert_eq!(rep.components.len(), 4);
    assert!(close(rep.r, 0.25));
    let _ = PermutationSet::new(0, vec![(0..4).collect()]).unwrap();
}
