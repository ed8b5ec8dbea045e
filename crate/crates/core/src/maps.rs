//! Linear maps `B(H_A) -> B(H_C)` built from operators on `H_A (x) H_C`, and
//! entanglement detection through their extensions.
//!
//! For `X` on `H_A (x) H_C` the map is `E_X(Y) = tr_A(X^{T_A} (Y (x) 1))`,
//! with the A transpose taken in the computational basis. Its action on
//! the A factor of a state on `H_A (x) H_B` (with `d_B = d_C`) is computed
//! with the conjugated kernel, so that `tr(X rho) = <Psi| E(rho) |Psi>` for
//! `Psi = sum_k |k>_C |k>_B` holds for complex `X` as well as real ones.

use num_complex::Complex64;

use crate::bipartite::{BipartiteOperator, Dims};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::witness::Witness;

/// Threshold below which the smallest eigenvalue of an extended image
/// counts as negative.
pub const MAP_DETECTION_TOL: f64 = 1e-10;

/// `E_X(Y)`; `X` is read as an operator on `H_A (x) H_C` with
/// `(d_A, d_C) = X.dims`.
pub fn apply_map(x: &BipartiteOperator, y: &CMatrix) -> Result<CMatrix> {
    let Dims { a: da, b: dc } = x.dims;
    if y.nrows() != da || y.ncols() != da {
        return Err(Error::DimensionMismatch {
            expected: da,
            found: if y.nrows() != da { y.nrows() } else { y.ncols() },
        });
    }
    let m = &x.matrix;
    Ok(CMatrix::from_fn(dc, dc, |c, cp| {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..da {
            for j in 0..da {
                s += m[(j * dc + c, i * dc + cp)] * y[(j, i)];
            }
        }
        s
    }))
}

/// Image of `rho` on `H_A (x) H_B` under the map acting on the A factor,
/// returned on `H_C (x) H_B`.
pub fn apply_extended(x: &BipartiteOperator, rho: &BipartiteOperator) -> Result<BipartiteOperator> {
    x.same_dims(rho)?;
    let Dims { a: da, b: db } = x.dims;
    let dc = db;
    let out_dims = Dims::new(dc, db);
    let (m, r) = (&x.matrix, &rho.matrix);
    let n = out_dims.total();
    let matrix = CMatrix::from_fn(n, n, |row, col| {
        let (c, b) = (row / db, row % db);
        let (cp, bp) = (col / db, col % db);
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..da {
            for j in 0..da {
                s += m[(j * dc + c, i * dc + cp)].conj() * r[(j * db + b, i * db + bp)];
            }
        }
        s
    });
    BipartiteOperator::new(out_dims, matrix)
}

/// `sum_k |k>|k>` on `C^d (x) C^d`, unnormalized.
pub fn max_entangled(d: usize) -> CVector {
    CVector::from_fn(d * d, |k, _| if k / d == k % d { linalg::cr(1.0) } else { linalg::cr(0.0) })
}

/// `(|Psi><Psi|)^{T_A}`: the operator whose map is the transposition.
pub fn transposition_operator(d: usize) -> BipartiteOperator {
    let psi = max_entangled(d);
    let p = BipartiteOperator {
        dims: Dims::new(d, d),
        matrix: linalg::outer(&psi, &psi),
    };
    // T_A and T_B agree on the swap
    p.partial_transpose()
}

/// `<Psi| E(rho) |Psi>`.
pub fn psi_expectation(x: &BipartiteOperator, rho: &BipartiteOperator) -> Result<f64> {
    let image = apply_extended(x, rho)?;
    Ok(linalg::quad_form(&image.matrix, &max_entangled(x.dims.b)).re)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDetection {
    pub detected: bool,
    pub min_eig: f64,
}

/// Whether the extended map of `w` sends `rho` to a non-positive operator.
pub fn map_detects(w: &Witness, rho: &BipartiteOperator) -> Result<MapDetection> {
    let image = apply_extended(&w.op, rho)?.hermitian()?;
    let min_eig = image.min_eigenvalue()?;
    Ok(MapDetection {
        detected: min_eig < -MAP_DETECTION_TOL,
        min_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff};
    use crate::search::SearchConfig;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    fn random_matrix(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_psd(dims: Dims, rng: &mut rand_chacha::ChaCha8Rng) -> BipartiteOperator {
        let g = random_matrix(dims.total(), rng);
        BipartiteOperator::new(dims, &g * g.adjoint()).unwrap()
    }

    #[test]
    fn transposition_kernel_gives_transpose() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for d in 2..5 {
            let t = transposition_operator(d);
            let y = random_matrix(d, &mut rng);
            assert!(max_abs_diff(&apply_map(&t, &y).unwrap(), &y.transpose()) < 1e-14);
        }
    }

    #[test]
    fn transposition_extension_is_partial_transpose_on_a() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let dims = Dims::new(3, 3);
        let rho = random_psd(dims, &mut rng);
        let image = apply_extended(&transposition_operator(3), &rho).unwrap();
        // T_A = (T_B)^T for the full transpose
        let expected = rho.partial_transpose().transpose();
        assert!(max_abs_diff(&image.matrix, &expected.matrix) < 1e-12);
    }

    #[test]
    fn identity_input_gives_reduced_partial_transpose() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x = random_psd(Dims::new(2, 3), &mut rng);
        let out = apply_map(&x, &linalg::identity(2)).unwrap();
        let reduced = CMatrix::from_fn(3, 3, |c, cp| (0..2).map(|i| x.matrix[(i * 3 + c, i * 3 + cp)]).sum());
        assert!(max_abs_diff(&out, &reduced) < 1e-14);
    }

    #[test]
    fn psd_kernel_preserves_positivity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let x = random_psd(Dims::new(2, 3), &mut rng);
            let g = random_matrix(2, &mut rng);
            let out = apply_map(&x, &(&g * g.adjoint())).unwrap();
            assert!(linalg::eig_hermitian(&linalg::symmetrized(&out).unwrap()).unwrap().min() > -1e-12);
            let rho = random_psd(Dims::new(2, 3), &mut rng);
            assert!(apply_extended(&x, &rho).unwrap().hermitian().unwrap().min_eigenvalue().unwrap() > -1e-12);
        }
    }

    #[test]
    fn psi_identity_on_complex_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for dims in [Dims::new(2, 2), Dims::new(2, 4), Dims::new(3, 3)] {
            for _ in 0..10 {
                let g = random_matrix(dims.total(), &mut rng);
                let x = BipartiteOperator::new(dims, &g + g.adjoint()).unwrap();
                let rho = random_psd(dims, &mut rng);
                let lhs = x.trace_with(&rho).re;
                assert!((lhs - psi_expectation(&x, &rho).unwrap()).abs() < 1e-9 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn map_linearity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let x = random_psd(Dims::new(2, 4), &mut rng);
        let (y1, y2) = (random_matrix(2, &mut rng), random_matrix(2, &mut rng));
        let k = c(0.3, -1.2);
        let lhs = apply_map(&x, &(&y1 + &y2 * k)).unwrap();
        let rhs = apply_map(&x, &y1).unwrap() + apply_map(&x, &y2).unwrap() * k;
        assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn rejects_wrong_dimensions() {
        let x = BipartiteOperator::identity(Dims::new(2, 3));
        assert!(apply_map(&x, &linalg::identity(3)).is_err());
        assert!(apply_extended(&x, &BipartiteOperator::identity(Dims::new(3, 3))).is_err());
    }

    #[test]
    fn partial_transpose_witness_map_detects_phi_plus() {
        let dims = Dims::new(2, 2);
        let psi = max_entangled(2);
        let phi_plus = linalg::outer(&psi, &psi) * c(0.5, 0.0);
        let w_op = BipartiteOperator::new(dims, phi_plus).unwrap();
        let w = crate::witness::validate(&w_op.partial_transpose(), &SearchConfig::default()).unwrap();
        let phi = BipartiteOperator::projector(dims, &linalg::normalized(&psi).unwrap()).unwrap();
        let det = map_detects(&w, &phi).unwrap();
        assert!(det.detected);
        let mixed = BipartiteOperator::identity(dims).scale(0.25);
        assert!(!map_detects(&w, &mixed).unwrap().detected);
    }
}
