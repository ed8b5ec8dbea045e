//! The one-parameter family `rho_b` on `C^2 (x) C^4` and its symmetries.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bipartite::{BipartiteOperator, Dims};
use crate::error::{Error, Result};
use crate::linalg::{c, cr, CMatrix};

pub const DIMS: Dims = Dims { a: 2, b: 4 };

/// `rho_b` for `b` in `[0, 1]`.
pub fn rho_b(b: f64) -> Result<BipartiteOperator> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidParameter(format!("b must lie in [0, 1], got {b}")));
    }
    let mut m = CMatrix::zeros(8, 8);
    for k in 0..4 {
        m[(k, k)] = cr(b);
    }
    for k in 5..7 {
        m[(k, k)] = cr(b);
    }
    for (i, j) in [(0, 5), (1, 6), (2, 7)] {
        m[(i, j)] = cr(b);
        m[(j, i)] = cr(b);
    }
    let diag = (1.0 + b) / 2.0;
    let off = (1.0 - b * b).max(0.0).sqrt() / 2.0;
    m[(4, 4)] = cr(diag);
    m[(7, 7)] = cr(diag);
    m[(4, 7)] = cr(off);
    m[(7, 4)] = cr(off);
    BipartiteOperator::new(DIMS, m.unscale(7.0 * b + 1.0))
}

fn pair_block(m: &mut CMatrix, i: usize, j: usize, block: [[Complex64; 2]; 2]) {
    m[(i, i)] = block[0][0];
    m[(i, j)] = block[0][1];
    m[(j, i)] = block[1][0];
    m[(j, j)] = block[1][1];
}

/// `(sigma_x)_{03} (+) (sigma_x)_{12}` on `C^4`.
pub fn u_b() -> CMatrix {
    let sx = [[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]];
    let mut m = CMatrix::zeros(4, 4);
    pair_block(&mut m, 0, 3, sx);
    pair_block(&mut m, 1, 2, sx);
    m
}

/// `[(1 + i sigma_x)_{03} (+) (1 + i sigma_x)_{12}] / sqrt(2)` on `C^4`.
pub fn v_b() -> CMatrix {
    let s = 1.0 / 2f64.sqrt();
    let blk = [[cr(s), c(0.0, s)], [c(0.0, s), cr(s)]];
    let mut m = CMatrix::zeros(4, 4);
    pair_block(&mut m, 0, 3, blk);
    pair_block(&mut m, 1, 2, blk);
    m
}

/// `V_B rho V_B^dag`; after it, `rho_b` equals its own partial transpose.
pub fn tilde_transform(rho: &BipartiteOperator) -> Result<BipartiteOperator> {
    if rho.dims.b != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dims.b,
        });
    }
    rho.conjugate_local_b(&v_b())
}

pub fn rho_tilde(b: f64) -> Result<BipartiteOperator> {
    tilde_transform(&rho_b(b)?)
}

pub fn t_a() -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = cr(1.0);
    m[(1, 1)] = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    m
}

/// Real rotation by `2 pi / 3` in the `{|1>, |2>}` plane.
pub fn t_b() -> CMatrix {
    let (s, co) = (2.0 * PI / 3.0).sin_cos();
    let mut m = CMatrix::identity(4, 4);
    pair_block(&mut m, 1, 2, [[cr(co), cr(-s)], [cr(s), cr(co)]]);
    m
}

/// `T_AB = T_A (x) T_B`, of order three.
pub fn symmetry_generator() -> BipartiteOperator {
    BipartiteOperator {
        dims: DIMS,
        matrix: t_a().kronecker(&t_b()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, max_abs_diff};

    #[test]
    fn entries_at_one_half() {
        let r = rho_b(0.5).unwrap();
        assert!((r.matrix[(0, 0)].re - 1.0 / 9.0).abs() < 1e-15);
        assert!((r.matrix[(4, 4)].re - 1.0 / 6.0).abs() < 1e-15);
        assert!((r.matrix[(4, 7)].re - 3f64.sqrt() / 18.0).abs() < 1e-15);
    }

    #[test]
    fn unit_trace_and_ppt() {
        for k in 0..=20 {
            let b = k as f64 / 20.0;
            let r = rho_b(b).unwrap();
            assert!((r.trace_re() - 1.0).abs() < 1e-14);
            assert!(r.min_eigenvalue().unwrap() >= -1e-12);
            assert!(r.partial_transpose().min_eigenvalue().unwrap() >= -1e-12);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(rho_b(-0.1).is_err());
        assert!(rho_b(1.5).is_err());
    }

    #[test]
    fn partial_transpose_is_local_unitary() {
        for b in [0.25, 0.5, 0.75] {
            let r = rho_b(b).unwrap();
            let rotated = r.conjugate_local_b(&u_b()).unwrap();
            assert!(max_abs_diff(&r.partial_transpose().matrix, &rotated.matrix) < 1e-12);
        }
    }

    #[test]
    fn tilde_is_self_partial_transpose() {
        for b in [0.25, 0.5, 0.75] {
            let t = rho_tilde(b).unwrap();
            assert!(max_abs_diff(&t.partial_transpose().matrix, &t.matrix) < 1e-12);
            let back = t.conjugate_local_b(&v_b().adjoint()).unwrap();
            assert!(max_abs_diff(&back.matrix, &rho_b(b).unwrap().matrix) < 1e-12);
            assert!((t.trace_re() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_has_order_three_and_fixes_kernel() {
        let t = symmetry_generator().matrix;
        let cube = &t * &t * &t;
        assert!(max_abs_diff(&cube, &linalg::identity(8)) < 1e-12);
        // |0> +- |3> are real eigenvectors of T_B
        let tb = t_b();
        for sign in [1.0, -1.0] {
            let v = crate::linalg::CVector::from_vec(vec![cr(1.0), cr(0.0), cr(0.0), cr(sign)]);
            assert!((&tb * &v - &v).norm() < 1e-15);
        }
        let p1 = linalg::kernel_projector(&rho_tilde(0.5).unwrap().matrix, None).unwrap();
        assert!(max_abs_diff(&(&t * &p1 * t.adjoint()), &p1) < 1e-10);
    }
}
