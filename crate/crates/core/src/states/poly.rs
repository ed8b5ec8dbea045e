//! Univariate complex polynomials: least-squares interpolation on Chebyshev
//! nodes and roots from the companion matrix.

use nalgebra::Schur;
use num_complex::Complex64;

use crate::linalg::{cr, CMatrix, CVector};

/// `n` Chebyshev points of the first kind on `[-1, 1]`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos())
        .collect()
}

/// Coefficients (lowest degree first) of the least-squares polynomial of the
/// given degree through `(xs, ys)`.
pub fn fit(xs: &[f64], ys: &[Complex64], degree: usize) -> Vec<Complex64> {
    let n = xs.len();
    let v = CMatrix::from_fn(n, degree + 1, |i, j| cr(xs[i].powi(j as i32)));
    let y = CVector::from_column_slice(ys);
    let svd = v.svd(true, true);
    match svd.solve(&y, 1e-14) {
        Ok(c) => c.iter().copied().collect(),
        Err(_) => vec![cr(0.0); degree + 1],
    }
}

pub fn eval(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(cr(0.0), |acc, &c| acc * x + c)
}

fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// Drops leading coefficients below `rel_tol` times the largest one.
/// Returns `None` for the zero polynomial.
pub fn trim(coeffs: &[Complex64], rel_tol: f64) -> Option<Vec<Complex64>> {
    let scale = coeffs.iter().fold(0.0_f64, |a, c| a.max(c.norm()));
    if scale == 0.0 {
        return None;
    }
    let mut out = coeffs.to_vec();
    while out.len() > 1 && out[out.len() - 1].norm() <= rel_tol * scale {
        out.pop();
    }
    Some(out)
}

/// Roots of a polynomial (lowest degree first), Newton-polished.
pub fn roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let Some(p) = trim(coeffs, 1e-12) else {
        return Vec::new();
    };
    let deg = p.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = p[deg];
    let mut comp = CMatrix::zeros(deg, deg);
    for k in 0..deg {
        comp[(0, k)] = -p[deg - 1 - k] / lead;
    }
    for k in 1..deg {
        comp[(k, k - 1)] = cr(1.0);
    }
    let raw: Vec<Complex64> = match Schur::try_new(comp.clone(), 1e-15, 10_000) {
        Some(s) => s.unpack().1.diagonal().iter().copied().collect(),
        None => Vec::new(),
    };
    let dp = derivative(&p);
    raw.into_iter()
        .map(|mut z| {
            for _ in 0..8 {
                let d = eval(&dp, z);
                if d.norm() == 0.0 {
                    break;
                }
                let step = eval(&p, z) / d;
                z -= step;
                if step.norm() < 1e-16 * z.norm().max(1.0) {
                    break;
                }
            }
            z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn fit_recovers_cubic() {
        let coeffs = vec![c(1.0, -1.0), cr(0.0), c(0.5, 2.0), cr(-3.0)];
        let xs = chebyshev_nodes(9);
        let ys: Vec<_> = xs.iter().map(|&x| eval(&coeffs, cr(x))).collect();
        let got = fit(&xs, &ys, 4);
        for k in 0..4 {
            assert!((got[k] - coeffs[k]).norm() < 1e-12);
        }
        assert!(got[4].norm() < 1e-12);
    }

    #[test]
    fn roots_of_known_polynomial() {
        // (z - 1)(z + 2i)(z - 0.5) = z^3 + (-1.5 + 2i) z^2 + (0.5 - 3i) z + i
        let p = vec![c(0.0, 1.0), c(0.5, -3.0), c(-1.5, 2.0), cr(1.0)];
        let mut r = roots(&p);
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        let expect = [c(0.0, -2.0), cr(0.5), cr(1.0)];
        for (a, b) in r.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn zero_polynomial_has_no_roots() {
        assert!(roots(&[cr(0.0), cr(0.0)]).is_empty());
        assert!(roots(&[cr(2.0)]).is_empty());
    }
}
