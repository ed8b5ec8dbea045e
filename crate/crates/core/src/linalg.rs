//! Dense complex Hermitian linear algebra.
//!
//! Everything here works on `DMatrix<Complex64>`. Hermitian inputs are
//! checked entrywise against [`HERMITIAN_TOL`] and then symmetrized, so the
//! eigensolver always sees exactly Hermitian data. Ranks are decided with a
//! cutoff relative to the largest eigenvalue magnitude ([`REL_CUTOFF`]).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Entrywise tolerance on `|M - M^dag|` for a matrix to count as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues with `|lambda| < REL_CUTOFF * max|lambda|` count as zero.
pub const REL_CUTOFF: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { cr(values[i]) } else { cr(0.0) })
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Checks Hermiticity within [`HERMITIAN_TOL`] and returns `(M + M^dag)/2`.
pub fn symmetrized(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { max_deviation: dev });
    }
    Ok((m + m.adjoint()).scale(0.5))
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `<v|M|v>`.
pub fn quad_form(m: &CMatrix, v: &CVector) -> Complex64 {
    v.dotc(&(m * v))
}

pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

pub fn normalized(v: &CVector) -> Result<CVector> {
    let n = v.norm();
    if n < 1e-300 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v.unscale(n))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |a, l| a.max(l.abs()))
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// Absolute cutoff derived from the default relative cutoff.
    pub fn default_cutoff(&self) -> f64 {
        (REL_CUTOFF * self.max_abs()).max(f64::MIN_POSITIVE)
    }

    /// `V f(Lambda) V^dag` for a real spectral function.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for k in 0..n {
            let w = f(self.eigenvalues[k]);
            for i in 0..n {
                scaled[(i, k)] *= w;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.spectral_map(|l| l)
    }

    /// Eigenvector columns whose eigenvalue satisfies `keep`.
    pub fn columns_where(&self, keep: impl Fn(f64) -> bool) -> CMatrix {
        let idx: Vec<usize> = (0..self.eigenvalues.len())
            .filter(|&k| keep(self.eigenvalues[k]))
            .collect();
        let n = self.eigenvectors.nrows();
        CMatrix::from_fn(n, idx.len(), |i, j| self.eigenvectors[(i, idx[j])])
    }
}

/// Eigendecomposition of a Hermitian matrix (ascending eigenvalues).
pub fn eig_hermitian(m: &CMatrix) -> Result<EigenDecomposition> {
    let h = symmetrized(m)?;
    Ok(eig_symmetrized(h))
}

/// Same as [`eig_hermitian`] for data already known to be exactly Hermitian.
pub(crate) fn eig_symmetrized(h: CMatrix) -> EigenDecomposition {
    let n = h.nrows();
    if n == 0 {
        return EigenDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0, 0),
        };
    }
    let se = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// Minimum eigenvalue and its eigenvector for exactly Hermitian input.
pub(crate) fn min_eigpair(h: CMatrix) -> (f64, CVector) {
    let ed = eig_symmetrized(h);
    (ed.min(), ed.vector(0))
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn resolve_cutoff(ed: &EigenDecomposition, cutoff: Option<f64>) -> Result<f64> {
    match cutoff {
        None => Ok(ed.default_cutoff()),
        Some(c) if c > 0.0 && c.is_finite() => Ok(c),
        Some(c) => Err(Error::InvalidParameter(format!("cutoff must be positive, got {c}"))),
    }
}

fn check_psd(ed: &EigenDecomposition) -> Result<()> {
    if ed.eigenvalues.is_empty() {
        return Ok(());
    }
    let tol = REL_CUTOFF * ed.max_abs().max(1e-300);
    if ed.min() < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: ed.min(),
        });
    }
    Ok(())
}

/// `M^{-1/2}` on the range of a PSD matrix, zero on its kernel.
///
/// `cutoff` is absolute; `None` means `1e-10 * max eigenvalue`.
pub fn pinv_sqrt(m: &CMatrix, cutoff: Option<f64>) -> Result<CMatrix> {
    let ed = eig_hermitian(m)?;
    check_psd(&ed)?;
    let cut = resolve_cutoff(&ed, cutoff)?;
    Ok(ed.spectral_map(|l| if l > cut { 1.0 / l.sqrt() } else { 0.0 }))
}

/// Moore-Penrose pseudo-inverse of a Hermitian matrix.
pub fn pinv_hermitian(m: &CMatrix, cutoff: Option<f64>) -> Result<CMatrix> {
    let ed = eig_hermitian(m)?;
    let cut = resolve_cutoff(&ed, cutoff)?;
    Ok(ed.spectral_map(|l| if l.abs() > cut { 1.0 / l } else { 0.0 }))
}

/// Orthogonal projector onto the span of eigenvectors with `|lambda| < cutoff`.
pub fn kernel_projector(m: &CMatrix, cutoff: Option<f64>) -> Result<CMatrix> {
    let ed = eig_hermitian(m)?;
    let cut = resolve_cutoff(&ed, cutoff)?;
    let k = ed.columns_where(|l| l.abs() < cut);
    Ok(&k * k.adjoint())
}

/// Complement of [`kernel_projector`].
pub fn range_projector(m: &CMatrix, cutoff: Option<f64>) -> Result<CMatrix> {
    let ed = eig_hermitian(m)?;
    let cut = resolve_cutoff(&ed, cutoff)?;
    let r = ed.columns_where(|l| l.abs() >= cut);
    Ok(&r * r.adjoint())
}

/// Orthonormal basis (columns) of the kernel.
pub fn kernel_basis(m: &CMatrix, cutoff: Option<f64>) -> Result<CMatrix> {
    let ed = eig_hermitian(m)?;
    let cut = resolve_cutoff(&ed, cutoff)?;
    Ok(ed.columns_where(|l| l.abs() < cut))
}

pub fn rank(m: &CMatrix, cutoff: Option<f64>) -> Result<usize> {
    let ed = eig_hermitian(m)?;
    let cut = resolve_cutoff(&ed, cutoff)?;
    Ok(ed.eigenvalues.iter().filter(|l| l.abs() >= cut).count())
}

/// Orthonormal basis of the span of the given vectors (relative cutoff on
/// the Gram spectrum).
pub fn span_basis(vectors: &[CVector], dim: usize) -> CMatrix {
    if vectors.is_empty() {
        return CMatrix::zeros(dim, 0);
    }
    let mut g = CMatrix::zeros(dim, dim);
    for v in vectors {
        g += outer(v, v);
    }
    let ed = eig_symmetrized(hermitian_part(&g));
    let cut = ed.default_cutoff();
    ed.columns_where(|l| l >= cut)
}

/// Projector onto the orthogonal complement of the span of `vectors`.
pub fn complement_projector(vectors: &[CVector], dim: usize) -> CMatrix {
    let b = span_basis(vectors, dim);
    identity(dim) - &b * b.adjoint()
}
