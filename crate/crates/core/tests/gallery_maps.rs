mod common;

use proptest::prelude::*;

use wforge::bipartite::Dims;
use wforge::gallery;
use wforge::maps;
use wforge::search::SearchConfig;
use wforge::states::{family::DIMS, rho_b, rho_tilde};
use wforge::witness;

#[test]
fn trace_of_b_matches_closed_form() {
    for k in 1..100 {
        let b = k as f64 / 100.0;
        let direct = gallery::matrix_b().trace_with(&rho_b(b).unwrap()).re;
        let closed = 1.0 - (8.0 * b + (1.0 - b * b).sqrt()) / (7.0 * b + 1.0);
        assert!((direct - closed).abs() < 1e-13, "b = {b}: {direct} vs {closed}");
        assert!(direct < 0.0);
    }
}

#[test]
fn shifted_operator_is_a_witness_and_detects_the_family_for_small_x() {
    let cfg = SearchConfig::default();
    for x0 in [0.5, 2.0] {
        let w = gallery::wx_witness(x0, &cfg).unwrap();
        assert!(w.floor.abs() < 1e-8);
    }
    let w = gallery::wx_witness(0.01, &cfg).unwrap();
    for k in 1..10 {
        let rho = rho_b(k as f64 / 10.0).unwrap();
        assert!(witness::detects(&w, &rho).unwrap().detected, "b = 0.{k}");
    }
}

#[test]
fn family_is_flagged_by_the_limit_test() {
    for k in 1..10 {
        let rho = rho_b(k as f64 / 10.0).unwrap();
        let r = gallery::limit_test(&rho).unwrap();
        assert!(r.entangled && r.a_value.abs() <= 1e-10 && r.b_value < -1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn limit_test_never_flags_separable_states(seed in any::<u64>(), k in 1usize..6) {
        let mut rng = common::rng(seed);
        let rho = common::random_separable(DIMS, k, &mut rng);
        let r = gallery::limit_test(&rho).unwrap();
        prop_assert!(!r.entangled);
        prop_assert!(r.a_value >= -1e-12);
    }

    #[test]
    fn positive_a_value_is_never_flagged(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let rho = common::random_psd(DIMS, 8, &mut rng);
        let r = gallery::limit_test(&rho).unwrap();
        if r.a_value > 1e-10 {
            prop_assert!(!r.entangled);
        }
    }

    #[test]
    fn psi_identity_holds_on_random_pairs(seed in any::<u64>(), a in 1usize..4, b in 1usize..4) {
        let mut rng = common::rng(seed);
        let dims = Dims::new(a, b);
        let x = common::random_hermitian(dims, &mut rng);
        let rho = common::random_psd(dims, dims.total(), &mut rng);
        let lhs = x.trace_with(&rho).re;
        prop_assert!((lhs - maps::psi_expectation(&x, &rho).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn map_detection_dominates_witness_detection() {
    let p = common::half_pipeline();
    let mut probes = witness::probe_set(100, 3).unwrap();
    probes.extend((0..=20).map(|k| rho_tilde(k as f64 / 20.0).unwrap()));
    let mut strictly_more = 0;
    for w in [&p.built.witness, &p.optimized] {
        for rho in &probes {
            let by_witness = witness::detects(w, rho).unwrap().detected;
            let by_map = maps::map_detects(w, rho).unwrap().detected;
            if by_witness {
                assert!(by_map);
            } else if by_map {
                strictly_more += 1;
            }
        }
    }
    assert!(strictly_more > 0);
}

#[test]
fn fresh_witness_map_detects_its_source() {
    let p = common::half_pipeline();
    assert!(maps::map_detects(&p.built.witness, &p.delta).unwrap().detected);
}

#[test]
fn separable_probes_are_never_map_detected() {
    let p = common::half_pipeline();
    let mut rng = common::rng(29);
    for i in 0..200 {
        let rho = common::random_separable(DIMS, 1 + i % 6, &mut rng);
        let m = maps::map_detects(&p.optimized, &rho).unwrap();
        assert!(m.min_eig >= -1e-10, "probe {i}: {:e}", m.min_eig);
    }
}
