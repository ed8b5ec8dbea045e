#![allow(dead_code)]

use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wforge::bipartite::{BipartiteOperator, Dims, ProductVector};
use wforge::linalg::{c, CMatrix};
use wforge::search::haar_vector;
use wforge::states::rho_tilde;
use wforge::witness::{self, EdgeConstruction, OptimizationTrace, OptimizeConfig, Witness};

pub struct Pipeline {
    pub delta: BipartiteOperator,
    pub built: EdgeConstruction,
    pub optimized: Witness,
    pub trace: OptimizationTrace,
}

/// Witness pipeline seeded from `rho~_{1/2}`, computed once per test binary.
pub fn half_pipeline() -> &'static Pipeline {
    static CELL: OnceLock<Pipeline> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = OptimizeConfig::default();
        let delta = rho_tilde(0.5).unwrap();
        let built = witness::construct_from_edge(&delta, &cfg.search).unwrap();
        let (optimized, trace) = witness::edge_iteration(&built.witness, &cfg).unwrap();
        Pipeline {
            delta,
            built,
            optimized,
            trace,
        }
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_hermitian(dims: Dims, rng: &mut ChaCha8Rng) -> BipartiteOperator {
    let g = random_matrix(dims.total(), rng);
    BipartiteOperator::new(dims, (&g + g.adjoint()) * c(0.5, 0.0)).unwrap()
}

/// Unit-trace PSD operator of the given rank.
pub fn random_psd(dims: Dims, rank: usize, rng: &mut ChaCha8Rng) -> BipartiteOperator {
    let n = dims.total();
    let g = CMatrix::from_fn(n, rank, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    BipartiteOperator::new(dims, &g * g.adjoint()).unwrap().trace_normalized().unwrap()
}

pub fn random_product(dims: Dims, rng: &mut ChaCha8Rng) -> ProductVector {
    ProductVector::new(&haar_vector(dims.a, rng), &haar_vector(dims.b, rng)).unwrap()
}

/// Unit-trace mixture of `k` random product projectors.
pub fn random_separable(dims: Dims, k: usize, rng: &mut ChaCha8Rng) -> BipartiteOperator {
    let mut s = BipartiteOperator::zeros(dims);
    for _ in 0..k {
        let q: f64 = rng.random_range(0.2..1.0);
        s = s.axpy(q, &random_product(dims, rng).projector()).unwrap();
    }
    s.trace_normalized().unwrap()
}
