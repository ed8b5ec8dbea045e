//! Closed-form operators on `C^2 (x) C^4` that detect every `rho_b` with
//! `0 < b < 1` through the limit `x -> 0` of `W(x) = (A + x B) / x`.

use num_complex::Complex64;

use crate::bipartite::{BipartiteOperator, ProductVector};
use crate::error::{Error, Result};
use crate::linalg::{cr, CMatrix, CVector};
use crate::search::{self, SearchConfig};
use crate::states::family::DIMS;
use crate::witness::{self, Witness};

#[rustfmt::skip]
const A: [[i8; 8]; 8] = [
    [0,  0, 0, 0, 0, 0,  0, 0],
    [0,  1, 0, 0, 0, 0, -2, 0],
    [0,  0, 1, 0, 0, 0,  0, 0],
    [0,  0, 0, 0, 0, 0,  0, 0],
    [0,  0, 0, 0, 0, 0,  0, 0],
    [0,  0, 0, 0, 0, 1,  0, 0],
    [0, -2, 0, 0, 0, 0,  1, 0],
    [0,  0, 0, 0, 0, 0,  0, 0],
];

#[rustfmt::skip]
const B: [[i8; 8]; 8] = [
    [ 1, 0,  0, 1,  0, -2, 0,  0],
    [ 0, 1,  0, 0,  0,  0, 0,  0],
    [ 0, 0,  1, 0,  0,  0, 0, -2],
    [ 1, 0,  0, 1,  0,  0, 0,  0],
    [ 0, 0,  0, 0,  1,  0, 0, -1],
    [-2, 0,  0, 0,  0,  1, 0,  0],
    [ 0, 0,  0, 0,  0,  0, 1,  0],
    [ 0, 0, -2, 0, -1,  0, 0,  1],
];

fn from_table(t: &[[i8; 8]; 8]) -> BipartiteOperator {
    BipartiteOperator {
        dims: DIMS,
        matrix: CMatrix::from_fn(8, 8, |i, j| cr(t[i][j] as f64)),
    }
}

/// Decomposable operator `|psi><psi| + (|phi><phi|)^{T_B}`,
/// `psi = |01> - |12>`, `phi = |02> - |11>`.
pub fn matrix_a() -> BipartiteOperator {
    from_table(&A)
}

/// Companion of [`matrix_a`], non-negative on the zeros of `A`.
pub fn matrix_b() -> BipartiteOperator {
    from_table(&B)
}

/// `W(x) = (A + x B) / x`; not positive on product vectors in general.
pub fn w_of_x(x: f64) -> Result<BipartiteOperator> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("x must be finite and nonzero, got {x}")));
    }
    matrix_a().scale(1.0 / x).add(&matrix_b())
}

/// `W(x0) + lambda 1` with `lambda = -min <e,f|W(x0)|e,f>`, validated.
pub fn wx_witness(x0: f64, cfg: &SearchConfig) -> Result<Witness> {
    if !(x0 > 0.0) {
        return Err(Error::InvalidParameter(format!("x0 must be positive, got {x0}")));
    }
    let w = w_of_x(x0)?;
    let floor = search::min_product_expectation(&w, cfg)?.value;
    let shifted = w.axpy(-floor, &BipartiteOperator::identity(DIMS))?;
    witness::validate(&shifted, cfg)
}

/// Outcome of the `x -> 0` limit of `tr(W(x) rho) = tr(A rho) / x + tr(B rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitTest {
    pub a_value: f64,
    pub b_value: f64,
    /// The limit is negative (or `-inf`), so `rho` is entangled.
    pub entangled: bool,
}

/// Limit test with `tr(A rho) = 0` judged within 1e-10 and a negative
/// limit requiring `tr(B rho) < -1e-8`.
pub fn limit_test(rho: &BipartiteOperator) -> Result<LimitTest> {
    rho.same_dims(&matrix_a())?;
    let a_value = matrix_a().trace_with(rho).re;
    let b_value = matrix_b().trace_with(rho).re;
    let entangled = if a_value.abs() <= 1e-10 {
        b_value < -1e-8
    } else {
        a_value < 0.0
    };
    Ok(LimitTest {
        a_value,
        b_value,
        entangled,
    })
}

/// Member of `S = P_A ∩ P_B`:
/// `(|0> + e^{i phi}|1>) (x) sum_k e^{-i k phi} |k>`.
pub fn s_member(phi: f64) -> ProductVector {
    let e = CVector::from_vec(vec![cr(1.0), Complex64::from_polar(1.0, phi)]);
    let f = CVector::from_iterator(4, (0..4).map(|k| Complex64::from_polar(1.0, -(k as f64) * phi)));
    ProductVector::new(&e, &f).expect("nonzero factors")
}

/// Common zeros of `A` and `B` outside the `phi` family: the `e = |0>` and
/// `e = |1>` members of the first zero family of `A` with `<e,f|B|e,f> = 0`.
/// Together with `S` they span a 7-dimensional subspace.
pub fn extra_common_zeros() -> Vec<ProductVector> {
    vec![
        ProductVector::from_real(&[1.0, 0.0], &[1.0, 0.0, 0.0, -1.0]).expect("nonzero factors"),
        ProductVector::from_real(&[0.0, 1.0], &[1.0, 0.0, 0.0, 1.0]).expect("nonzero factors"),
    ]
}

/// `{-|02> + |13>, -|01> + |12>, -|00> + |11>}`, the stated complement of
/// the span of `S`.
pub fn s_complement() -> Vec<CVector> {
    [(2, 7), (1, 6), (0, 5)]
        .iter()
        .map(|&(i, j)| {
            let mut v = CVector::zeros(8);
            v[i] = cr(-1.0);
            v[j] = cr(1.0);
            v
        })
        .collect()
}
