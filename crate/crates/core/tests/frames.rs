mod common;

use proptest::prelude::*;

use wforge::bipartite::{BipartiteOperator, Dims, ProductVector};
use wforge::linalg::{self, CVector};
use wforge::maps;
use wforge::optimality::{self, qubit_direction_test, TangentFrame};
use wforge::search::haar_vector;

/// `(1 - |v*><v*|)^{T_B}` with `v*` the partial conjugate of `v`: a
/// decomposable operator vanishing at `v`.
fn vanishing_at(v: &ProductVector) -> BipartiteOperator {
    let dims = v.dims();
    let pc = v.partial_conjugate();
    let q = BipartiteOperator::identity(dims).sub(&pc.projector()).unwrap();
    q.partial_transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frame_invariants_at_planted_zeros(seed in any::<u64>(), db in 2usize..5) {
        let mut rng = common::rng(seed);
        let dims = Dims::new(2, db);
        let v = common::random_product(dims, &mut rng);
        let w = vanishing_at(&v);
        prop_assert!(w.product_expectation(&v).abs() < 1e-14);
        for _ in 0..8 {
            let fr = optimality::random_frame(&v, &mut rng);
            let co = optimality::frame_coefficients(&w, &fr).unwrap();
            prop_assert!(co.a0.abs() <= 1e-12 && co.a1.abs() <= 1e-12);
            prop_assert!(co.a2 >= -1e-12);
            prop_assert!(optimality::x_of_w(&w, &fr.e0, &fr.f0, &fr.e1, &fr.f1).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn a0_is_the_product_expectation(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let dims = Dims::new(2, 3);
        let w = common::random_hermitian(dims, &mut rng);
        let v = common::random_product(dims, &mut rng);
        let fr = optimality::random_frame(&v, &mut rng);
        let co = optimality::frame_coefficients(&w, &fr).unwrap();
        prop_assert!((co.a0 - w.product_expectation(&v)).abs() < 1e-12);
    }

    #[test]
    fn curve_expectation_is_the_quartic(seed in any::<u64>(), eps in -2.0f64..2.0) {
        let mut rng = common::rng(seed);
        let dims = Dims::new(2, 4);
        let w = common::random_hermitian(dims, &mut rng);
        let v = common::random_product(dims, &mut rng);
        let fr = optimality::random_frame(&v, &mut rng);
        let co = optimality::frame_coefficients(&w, &fr).unwrap().as_array();
        let direct = linalg::quad_form(&w.matrix, &fr.curve(eps)).re;
        let poly: f64 = co.iter().enumerate().map(|(k, a)| a * eps.powi(k as i32)).sum();
        prop_assert!((direct - poly).abs() < 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn minimized_second_order_vanishes_iff_x_vanishes(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let dims = Dims::new(2, 3);
        let v = common::random_product(dims, &mut rng);
        let w = vanishing_at(&v);
        let fr = optimality::random_frame(&v, &mut rng);
        let best = optimality::minimizing_frame(&w, &fr.e0, &fr.f0, &fr.e1, &fr.f1).unwrap();
        let a2 = optimality::frame_coefficients(&w, &best).unwrap().a2;
        let x = optimality::x_of_w(&w, &fr.e0, &fr.f0, &fr.e1, &fr.f1).unwrap();
        prop_assert!(a2 >= -1e-12);
        prop_assert_eq!(x.abs() <= 1e-9, a2 <= 1e-9);
    }
}

#[test]
fn vanishing_second_order_forces_vanishing_third_order() {
    let swap = maps::transposition_operator(2).scale(0.5);
    let mut rng = common::rng(5);
    let mut hits = 0;
    for _ in 0..200 {
        let e = haar_vector(2, &mut rng);
        let v = ProductVector::new(&e, &optimality::orthogonal_qubit(&e)).unwrap();
        let fr = optimality::random_frame(&v, &mut rng);
        let best = optimality::minimizing_frame(&swap, &fr.e0, &fr.f0, &fr.e1, &fr.f1).unwrap();
        let co = optimality::frame_coefficients(&swap, &best).unwrap();
        if co.a2 <= 1e-9 {
            hits += 1;
            assert!(co.a3.abs() <= 1e-7, "A3 = {:e}", co.a3);
        }
    }
    assert_eq!(hits, 200);
}

#[test]
fn random_frames_are_valid_at_pipeline_zeros() {
    let p = common::half_pipeline();
    let mut rng = common::rng(9);
    for z in &p.optimized.zero_set {
        let fr = optimality::random_frame(z, &mut rng);
        assert!(TangentFrame::new(fr.e0, fr.f0, fr.e1, fr.f1, fr.phi_e, fr.phi_f, fr.theta).is_ok());
    }
}

#[test]
fn direction_test_at_fresh_witness_zeros_finds_nothing() {
    let p = common::half_pipeline();
    for z in &p.built.witness.zero_set {
        let out = qubit_direction_test(&p.built.witness.op, &z.e, &z.f).unwrap();
        assert!(!out.exists);
        assert!(out.lhs > out.rhs);
    }
}

#[test]
fn psi_vectors_are_normalized_and_lie_off_the_zero() {
    let mut rng = common::rng(13);
    let v = ProductVector::new(&haar_vector(2, &mut rng), &haar_vector(3, &mut rng)).unwrap();
    for _ in 0..20 {
        let fr = optimality::random_frame(&v, &mut rng);
        let psi: CVector = optimality::psi_vector(&fr);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!(v.joint.dotc(&psi).norm() < 1e-12);
    }
}
