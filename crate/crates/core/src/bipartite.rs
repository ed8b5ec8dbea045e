//! Operators and product vectors on `H_A (x) H_B`.
//!
//! Basis ordering is `|i_A, m_B>` with the A index outer: the joint index of
//! `(i, m)` is `i * d_B + m`. Partial transposes act on B only.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMatrix, CVector};

/// Subsystem dimensions `(d_A, d_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub a: usize,
    pub b: usize,
}

impl Dims {
    pub fn new(a: usize, b: usize) -> Self {
        Dims { a, b }
    }

    pub fn total(&self) -> usize {
        self.a * self.b
    }

    pub fn index(&self, i: usize, m: usize) -> usize {
        i * self.b + m
    }
}

/// Dense operator tagged with its bipartition.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteOperator {
    pub dims: Dims,
    pub matrix: CMatrix,
}

impl BipartiteOperator {
    pub fn new(dims: Dims, matrix: CMatrix) -> Result<Self> {
        let d = dims.total();
        if dims.a == 0 || dims.b == 0 {
            return Err(Error::InvalidParameter("subsystem dimensions must be positive".into()));
        }
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: if matrix.nrows() != d { matrix.nrows() } else { matrix.ncols() },
            });
        }
        Ok(BipartiteOperator { dims, matrix })
    }

    pub fn identity(dims: Dims) -> Self {
        BipartiteOperator {
            dims,
            matrix: linalg::identity(dims.total()),
        }
    }

    pub fn zeros(dims: Dims) -> Self {
        let d = dims.total();
        BipartiteOperator {
            dims,
            matrix: CMatrix::zeros(d, d),
        }
    }

    /// `|v><v|` for a joint vector.
    pub fn projector(dims: Dims, v: &CVector) -> Result<Self> {
        Self::new(dims, linalg::outer(v, v))
    }

    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    pub fn with_matrix(&self, matrix: CMatrix) -> Self {
        BipartiteOperator {
            dims: self.dims,
            matrix,
        }
    }

    /// `(X^{T_B})_{(i,m),(j,n)} = X_{(i,n),(j,m)}`.
    pub fn partial_transpose(&self) -> Self {
        let d = self.dims;
        let mut out = CMatrix::zeros(d.total(), d.total());
        for i in 0..d.a {
            for j in 0..d.a {
                for m in 0..d.b {
                    for n in 0..d.b {
                        out[(d.index(i, m), d.index(j, n))] = self.matrix[(d.index(i, n), d.index(j, m))];
                    }
                }
            }
        }
        self.with_matrix(out)
    }

    /// Full transpose; the A-side partial transpose is `transpose().partial_transpose()`.
    pub fn transpose(&self) -> Self {
        self.with_matrix(self.matrix.transpose())
    }

    pub fn adjoint(&self) -> Self {
        self.with_matrix(self.matrix.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.matrix)
    }

    pub fn trace_re(&self) -> f64 {
        self.trace().re
    }

    /// `tr(self * other)`.
    pub fn trace_with(&self, other: &BipartiteOperator) -> Complex64 {
        linalg::trace_product(&self.matrix, &other.matrix)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.with_matrix(self.matrix.scale(s))
    }

    pub fn add(&self, other: &BipartiteOperator) -> Result<Self> {
        self.same_dims(other)?;
        Ok(self.with_matrix(&self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &BipartiteOperator) -> Result<Self> {
        self.same_dims(other)?;
        Ok(self.with_matrix(&self.matrix - &other.matrix))
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &BipartiteOperator) -> Result<Self> {
        self.same_dims(other)?;
        Ok(self.with_matrix(&self.matrix + other.matrix.scale(s)))
    }

    pub fn same_dims(&self, other: &BipartiteOperator) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn hermitian_deviation(&self) -> f64 {
        linalg::hermitian_deviation(&self.matrix)
    }

    /// Checked and symmetrized copy.
    pub fn hermitian(&self) -> Result<Self> {
        Ok(self.with_matrix(linalg::symmetrized(&self.matrix)?))
    }

    /// Divides by the trace.
    pub fn trace_normalized(&self) -> Result<Self> {
        let t = self.trace_re();
        if t.abs() < 1e-300 || !t.is_finite() {
            return Err(Error::InvalidParameter("operator has zero trace".into()));
        }
        Ok(self.scale(1.0 / t))
    }

    pub fn eig(&self) -> Result<linalg::EigenDecomposition> {
        linalg::eig_hermitian(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.min())
    }

    /// `(1 (x) U) X (1 (x) U^dag)` for a unitary on B.
    pub fn conjugate_local_b(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dims.b || u.ncols() != self.dims.b {
            return Err(Error::DimensionMismatch {
                expected: self.dims.b,
                found: u.nrows(),
            });
        }
        let full = linalg::identity(self.dims.a).kronecker(u);
        Ok(self.with_matrix(&full * &self.matrix * full.adjoint()))
    }

    /// `U X U^dag` for a unitary on the joint space.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        Ok(self.with_matrix(u * &self.matrix * u.adjoint()))
    }

    /// `W_e = <e|W|e>`, a `d_B x d_B` matrix.
    pub fn contract_a(&self, e: &CVector) -> Result<CMatrix> {
        if e.len() != self.dims.a {
            return Err(Error::DimensionMismatch {
                expected: self.dims.a,
                found: e.len(),
            });
        }
        Ok(self.contract_a_unchecked(e))
    }

    pub(crate) fn contract_a_unchecked(&self, e: &CVector) -> CMatrix {
        let d = self.dims;
        let mut out = CMatrix::zeros(d.b, d.b);
        for i in 0..d.a {
            let ei = e[i].conj();
            if ei.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..d.a {
                let w = ei * e[j];
                if w.norm_sqr() == 0.0 {
                    continue;
                }
                for m in 0..d.b {
                    for n in 0..d.b {
                        out[(m, n)] += w * self.matrix[(d.index(i, m), d.index(j, n))];
                    }
                }
            }
        }
        out
    }

    /// `W_f = <f|W|f>`, a `d_A x d_A` matrix.
    pub fn contract_b(&self, f: &CVector) -> Result<CMatrix> {
        if f.len() != self.dims.b {
            return Err(Error::DimensionMismatch {
                expected: self.dims.b,
                found: f.len(),
            });
        }
        Ok(self.contract_b_unchecked(f))
    }

    pub(crate) fn contract_b_unchecked(&self, f: &CVector) -> CMatrix {
        let d = self.dims;
        let mut out = CMatrix::zeros(d.a, d.a);
        for i in 0..d.a {
            for j in 0..d.a {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..d.b {
                    let fm = f[m].conj();
                    for n in 0..d.b {
                        acc += fm * self.matrix[(d.index(i, m), d.index(j, n))] * f[n];
                    }
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `<v|X|v>`.
    pub fn expectation(&self, v: &CVector) -> Result<Complex64> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(linalg::quad_form(&self.matrix, v))
    }

    /// Real part of `<e,f|X|e,f>`.
    pub fn product_expectation(&self, v: &ProductVector) -> f64 {
        linalg::quad_form(&self.matrix, &v.joint).re
    }
}

pub fn partial_transpose(x: &BipartiteOperator) -> BipartiteOperator {
    x.partial_transpose()
}

pub fn contract_a(w: &BipartiteOperator, e: &CVector) -> Result<CMatrix> {
    w.contract_a(e)
}

pub fn expectation(x: &BipartiteOperator, v: &CVector) -> Result<Complex64> {
    x.expectation(v)
}

/// Fixes the global phase so the largest-magnitude entry is real positive.
/// Ties within 1e-12 go to the lowest index.
pub(crate) fn canonical_phase(v: &CVector) -> CVector {
    let max = v.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if max == 0.0 {
        return v.clone();
    }
    let k = v.iter().position(|z| z.norm() >= max - 1e-12).unwrap_or(0);
    let phase = v[k] / v[k].norm();
    v.map(|z| z / phase)
}

/// `|e> (x) |f>` with unit factors and canonical phases.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVector {
    pub e: CVector,
    pub f: CVector,
    pub joint: CVector,
}

impl ProductVector {
    /// Normalizes both factors; zero input is rejected.
    pub fn new(e: &CVector, f: &CVector) -> Result<Self> {
        let e = canonical_phase(&linalg::normalized(e)?);
        let f = canonical_phase(&linalg::normalized(f)?);
        let joint = e.kronecker(&f);
        Ok(ProductVector { e, f, joint })
    }

    pub fn from_real(e: &[f64], f: &[f64]) -> Result<Self> {
        let e = CVector::from_iterator(e.len(), e.iter().map(|&x| cr(x)));
        let f = CVector::from_iterator(f.len(), f.iter().map(|&x| cr(x)));
        Self::new(&e, &f)
    }

    /// Basis product vector `|i>_A |m>_B`.
    pub fn basis(dims: Dims, i: usize, m: usize) -> Self {
        let mut e = CVector::zeros(dims.a);
        let mut f = CVector::zeros(dims.b);
        e[i] = cr(1.0);
        f[m] = cr(1.0);
        Self::new(&e, &f).expect("basis vectors are nonzero")
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.e.len(), self.f.len())
    }

    /// `|e, f*>`: complex conjugation of the B factor only.
    pub fn partial_conjugate(&self) -> Self {
        let f = self.f.map(|z| z.conj());
        Self::new(&self.e, &f).expect("unit factors stay nonzero")
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &ProductVector) -> f64 {
        self.joint.dotc(&other.joint).norm_sqr()
    }

    pub fn projector(&self) -> BipartiteOperator {
        BipartiteOperator {
            dims: self.dims(),
            matrix: linalg::outer(&self.joint, &self.joint),
        }
    }
}

pub fn product(e: &CVector, f: &CVector) -> Result<ProductVector> {
    ProductVector::new(e, f)
}

pub fn partial_conjugate(v: &ProductVector) -> ProductVector {
    v.partial_conjugate()
}

/// Removes near-duplicates (fidelity above `threshold`), keeping first occurrences.
pub fn dedup_product_vectors(vectors: Vec<ProductVector>, threshold: f64) -> Vec<ProductVector> {
    let mut out: Vec<ProductVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        if out.iter().all(|u| u.fidelity(&v) <= threshold) {
            out.push(v);
        }
    }
    out
}
