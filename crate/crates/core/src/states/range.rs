//! Product vectors in the range of an operator, the edge test and the
//! largest subtractable product projector.
//!
//! A product vector `|e,f>` lies in `R(rho)` iff it is orthogonal to every
//! kernel vector `k_j`, i.e. `M(e) f = 0` with `M(e) = sum_i e_i M_i` and
//! `(M_i)_{j,m} = conj(k_j[(i,m)])`. For `d_A = 2` and `e = |0> + alpha|1>`
//! this is the pencil `M_0 + alpha M_1`, whose maximal minors are
//! polynomials of degree at most `d_B` in `alpha`.
//!
//! The partner condition `|e,f*> in R(rho^{T_B})` is linear in `f` too once
//! conjugated: `M'(e*) f = 0` with `(M'_i)_{j,m} = k'_j[(i,m)]`. Stacking
//! both gives the joint matrix `N(e)`; an edge state is one for which
//! `sigma_min(N(e)) > 0` for every `e`.

use serde::{Deserialize, Serialize};

use crate::bipartite::{dedup_product_vectors, BipartiteOperator, ProductVector};
use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, CMatrix, CVector};
use crate::optim;
use crate::search::{self, SearchConfig};
use crate::states::poly;

/// Range membership threshold on the projection residual.
pub const MEMBERSHIP_TOL: f64 = 1e-7;
/// Joint residuals between this and [`MEMBERSHIP_TOL`] are too close to call.
pub const MARGINAL_TOL: f64 = 1e-5;
/// Number of members sampled from a continuous family.
pub const CONTINUUM_SAMPLES: usize = 64;
const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeVerdict {
    Edge,
    NotEdge,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeMethod {
    PolynomialD2,
    Heuristic,
}

#[derive(Debug, Clone)]
pub struct EdgeCertificate {
    pub verdict: EdgeVerdict,
    /// `|e,f>` in `R(delta)` whose partner `|e,f*>` lies in `R(delta^{T_B})`.
    pub witness_of_failure: Option<ProductVector>,
    pub method: EdgeMethod,
    /// Smallest joint residual `sqrt(r_range^2 + r_partner^2)` encountered.
    pub min_residual: f64,
}

#[derive(Debug, Clone)]
pub struct RangeProducts {
    pub vectors: Vec<ProductVector>,
    /// `false` when the range holds a continuous family; `vectors` is then a
    /// sample of it.
    pub finite: bool,
    pub method: EdgeMethod,
    /// Interpolation was ill-conditioned and the heuristic search took over.
    pub inconclusive: bool,
}

/// Orthonormal kernel basis of a PSD operator (relative cutoff).
fn psd_kernel(x: &BipartiteOperator, what: &str) -> Result<CMatrix> {
    let ed = x.eig()?;
    let scale = ed.max_abs().max(1e-300);
    if ed.min() < -PSD_TOL * scale.max(1.0) {
        return Err(if what == "partial transpose" {
            Error::NotPpt { min_eigenvalue: ed.min() }
        } else {
            Error::NotPsd { min_eigenvalue: ed.min() }
        });
    }
    let cut = ed.default_cutoff();
    Ok(ed.columns_where(|l| l < cut))
}

/// `M_i` blocks, `conj` selecting `conj(k)` (range) or `k` (partner).
fn constraint_blocks(kernel: &CMatrix, da: usize, db: usize, conj: bool) -> Vec<CMatrix> {
    let k = kernel.ncols();
    (0..da)
        .map(|i| {
            CMatrix::from_fn(k, db, |j, m| {
                let z = kernel[(i * db + m, j)];
                if conj {
                    z.conj()
                } else {
                    z
                }
            })
        })
        .collect()
}

fn pencil(blocks: &[CMatrix], e: &CVector, db: usize) -> CMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let mut m = CMatrix::zeros(rows, db);
    for (i, b) in blocks.iter().enumerate() {
        m += b * e[i];
    }
    m
}

fn stacked(top: &CMatrix, bottom: &CMatrix) -> CMatrix {
    let (r1, r2, n) = (top.nrows(), bottom.nrows(), top.ncols());
    CMatrix::from_fn(r1 + r2, n, |i, j| if i < r1 { top[(i, j)] } else { bottom[(i - r1, j)] })
}

/// Singular values and right singular vectors (as columns), zero-padding
/// wide matrices so that every direction of the domain appears.
fn right_singular(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.ncols();
    let padded = if m.nrows() < n {
        CMatrix::from_fn(n, n, |i, j| if i < m.nrows() { m[(i, j)] } else { cr(0.0) })
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    (svd.singular_values.iter().copied().collect(), vt.adjoint())
}

/// Smallest singular value of `m` with a right singular vector for it.
pub(crate) fn min_singular(m: &CMatrix) -> (f64, CVector) {
    let (s, v) = right_singular(m);
    let k = (0..s.len()).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap_or(0);
    (s[k], v.column(k).into_owned())
}

/// Right null space of `m` with singular values below `tol`.
pub(crate) fn null_space(m: &CMatrix, tol: f64) -> CMatrix {
    let (s, v) = right_singular(m);
    let idx: Vec<usize> = (0..s.len()).filter(|&k| s[k] < tol).collect();
    CMatrix::from_fn(v.nrows(), idx.len(), |i, j| v[(i, idx[j])])
}

/// Range-side and partner-side constraint blocks of `rho`.
pub(crate) struct Constraints {
    pub range: Vec<CMatrix>,
    pub partner: Vec<CMatrix>,
    pub da: usize,
    pub db: usize,
}

impl Constraints {
    pub fn of(rho: &BipartiteOperator) -> Result<Self> {
        let rho = rho.hermitian()?;
        let k1 = psd_kernel(&rho, "operator")?;
        let k2 = psd_kernel(&rho.partial_transpose(), "partial transpose")?;
        let (da, db) = (rho.dims.a, rho.dims.b);
        Ok(Constraints {
            range: constraint_blocks(&k1, da, db, true),
            partner: constraint_blocks(&k2, da, db, false),
            da,
            db,
        })
    }

    pub fn range_rows(&self) -> usize {
        self.range[0].nrows()
    }

    pub fn joint_rows(&self) -> usize {
        self.range[0].nrows() + self.partner[0].nrows()
    }

    pub fn range_matrix(&self, e: &CVector) -> CMatrix {
        pencil(&self.range, e, self.db)
    }

    pub fn joint_matrix(&self, e: &CVector) -> CMatrix {
        let ec = e.map(|z| z.conj());
        stacked(&pencil(&self.range, e, self.db), &pencil(&self.partner, &ec, self.db))
    }

    /// `sigma_min(N(e))` and the best `f`.
    pub fn joint_residual(&self, e: &CVector) -> (f64, CVector) {
        min_singular(&self.joint_matrix(e))
    }

    /// Residuals of `|e,f>` against `R(rho)` and of `|e,f*>` against
    /// `R(rho^{T_B})`.
    pub fn residuals(&self, v: &ProductVector) -> (f64, f64) {
        let r1 = (self.range_matrix(&v.e) * &v.f).norm();
        let ec = v.e.map(|z| z.conj());
        let r2 = (pencil(&self.partner, &ec, self.db) * &v.f).norm();
        (r1, r2)
    }
}

/// Chart `x -> (e, f)` around a base point: `e = normalize(e0 + B_e z_e)`,
/// likewise for `f`, with `B` orthonormal bases of the complements.
pub(crate) struct ProductChart {
    e0: CVector,
    f0: CVector,
    be: CMatrix,
    bf: CMatrix,
}

impl ProductChart {
    pub fn new(e0: &CVector, f0: &CVector) -> Self {
        ProductChart {
            e0: e0.clone(),
            f0: f0.clone(),
            be: search::complement_basis(e0),
            bf: search::complement_basis(f0),
        }
    }

    pub fn dim(&self) -> usize {
        2 * (self.be.ncols() + self.bf.ncols())
    }

    pub fn at(&self, x: &[f64]) -> (CVector, CVector) {
        let ne = self.be.ncols();
        let mut e = self.e0.clone();
        for k in 0..ne {
            e += self.be.column(k) * c(x[2 * k], x[2 * k + 1]);
        }
        let mut f = self.f0.clone();
        for k in 0..self.bf.ncols() {
            f += self.bf.column(k) * c(x[2 * (ne + k)], x[2 * (ne + k) + 1]);
        }
        (e.unscale(e.norm()), f.unscale(f.norm()))
    }
}

fn complex_to_real(v: &CVector) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

impl Constraints {
    /// Gauss-Newton on `N(e) f = 0` from `(e0, f0)`; returns `|N(e) f|`.
    pub fn polish_joint_zero(&self, e0: &CVector, f0: &CVector) -> (f64, CVector, CVector) {
        let chart = ProductChart::new(e0, f0);
        let resid = |x: &[f64]| {
            let (e, f) = chart.at(x);
            complex_to_real(&(self.joint_matrix(&e) * f))
        };
        let (x, rn) = optim::gauss_newton(resid, &vec![0.0; chart.dim()], 40);
        let (e, f) = chart.at(&x);
        (rn, e, f)
    }

    /// Product vectors `|e,f>` with `N(e) f = 0` found from the local minima
    /// of `sigma_min(N(e))`, polished to `tol`.
    pub fn joint_zeros(&self, cfg: &SearchConfig, stream: u64, tol: f64) -> Vec<ProductVector> {
        let minima = search::local_minima_over_e(self.da, cfg, stream, |e| self.joint_residual(e).0, &[], 24);
        let mut out = Vec::new();
        for (s, e) in minima {
            if s > 1e-3 {
                continue;
            }
            let (_, f) = self.joint_residual(&e);
            let (rn, e, f) = self.polish_joint_zero(&e, &f);
            if rn < tol {
                if let Ok(v) = ProductVector::new(&e, &f) {
                    out.push(v);
                }
            }
        }
        dedup_product_vectors(out, 1.0 - 1e-6)
    }
}

fn fibonacci_sphere(n: usize) -> Vec<CVector> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            search::sphere_point(z.acos(), golden * k as f64)
        })
        .collect()
}

fn combinations(n: usize, k: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        if out.len() >= cap {
            return out;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        if idx[i] == i + n - k {
            return out;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn members_at(cons: &Constraints, e: &CVector, tol: f64) -> Vec<ProductVector> {
    let ns = null_space(&cons.range_matrix(e), tol);
    (0..ns.ncols())
        .filter_map(|k| ProductVector::new(e, &ns.column(k).into_owned()).ok())
        .collect()
}

fn sample_continuum(cons: &Constraints) -> Vec<ProductVector> {
    let mut out = Vec::new();
    for e in fibonacci_sphere(CONTINUUM_SAMPLES) {
        if let Some(v) = members_at(cons, &e, MEMBERSHIP_TOL).into_iter().next() {
            out.push(v);
        }
    }
    out
}

/// Exact path for `d_A = 2`: roots of the maximal minors of the pencil.
/// `None` when interpolation is unreliable.
fn polynomial_members(cons: &Constraints) -> Option<RangeProducts> {
    let db = cons.db;
    let k = cons.range_rows();
    let xs = poly::chebyshev_nodes(2 * db + 1);
    let at = |x: f64| {
        let e = CVector::from_vec(vec![cr(1.0), cr(x)]);
        cons.range_matrix(&e)
    };
    let samples: Vec<CMatrix> = xs.iter().map(|&x| at(x)).collect();
    let mut minors = Vec::new();
    for rows in combinations(k, db, 256) {
        let ys: Vec<_> = samples
            .iter()
            .map(|m| CMatrix::from_fn(db, db, |i, j| m[(rows[i], j)]).determinant())
            .collect();
        let coeffs = poly::fit(&xs, &ys, db);
        // interpolation must reproduce the samples
        let misfit = xs
            .iter()
            .zip(&ys)
            .map(|(&x, y)| (poly::eval(&coeffs, cr(x)) - y).norm())
            .fold(0.0_f64, f64::max);
        if misfit > 1e-8 {
            return None;
        }
        minors.push(coeffs);
    }
    let scale = minors
        .iter()
        .flat_map(|p| p.iter().map(|c| c.norm()))
        .fold(0.0_f64, f64::max);
    if scale < 1e-10 {
        return Some(RangeProducts {
            vectors: dedup_product_vectors(sample_continuum(cons), 1.0 - 1e-6),
            finite: false,
            method: EdgeMethod::PolynomialD2,
            inconclusive: false,
        });
    }
    let lead = minors
        .iter()
        .max_by(|a, b| {
            let na: f64 = a.iter().map(|c| c.norm_sqr()).sum();
            let nb: f64 = b.iter().map(|c| c.norm_sqr()).sum();
            na.total_cmp(&nb)
        })
        .expect("at least one minor");
    let mut candidates: Vec<CVector> = poly::roots(lead)
        .into_iter()
        .map(|alpha| search::alpha_point(alpha))
        .collect();
    candidates.push(search::point_at_infinity());

    let mut vectors = Vec::new();
    for e0 in candidates {
        let obj = |e: &CVector| min_singular(&cons.range_matrix(e)).0;
        // multiple roots come out spread by ~eps^(1/multiplicity); the
        // refinement below pulls them back together
        if obj(&e0) > 1e-2 {
            continue;
        }
        let (s, e) = search::refine_from(&obj, &e0);
        if s < MEMBERSHIP_TOL {
            vectors.extend(members_at(cons, &e, MEMBERSHIP_TOL.max(10.0 * s)));
        }
    }
    Some(RangeProducts {
        vectors: dedup_product_vectors(vectors, 1.0 - 1e-6),
        finite: true,
        method: EdgeMethod::PolynomialD2,
        inconclusive: false,
    })
}

/// Product vectors in `R(rho)` (their partners are not checked here).
pub fn product_vectors_in_range(rho: &BipartiteOperator, cfg: &SearchConfig) -> Result<RangeProducts> {
    let cons = Constraints::of(rho)?;
    let (da, db) = (cons.da, cons.db);
    if da == 2 {
        if cons.range_rows() < db {
            return Ok(RangeProducts {
                vectors: dedup_product_vectors(sample_continuum(&cons), 1.0 - 1e-6),
                finite: false,
                method: EdgeMethod::PolynomialD2,
                inconclusive: false,
            });
        }
        if let Some(r) = polynomial_members(&cons) {
            return Ok(r);
        }
    }
    let obj = |e: &CVector| min_singular(&cons.range_matrix(e)).0;
    let mut rng = cfg.rng(41);
    let mut found = Vec::new();
    for _ in 0..cfg.restarts {
        let e0 = search::haar_vector(da, &mut rng);
        let (s, e) = search::refine_from(&obj, &e0);
        if s < MEMBERSHIP_TOL {
            found.extend(members_at(&cons, &e, MEMBERSHIP_TOL.max(10.0 * s)));
        }
    }
    Ok(RangeProducts {
        vectors: dedup_product_vectors(found, 1.0 - 1e-6),
        finite: true,
        method: EdgeMethod::Heuristic,
        inconclusive: da == 2,
    })
}

fn verdict_from(min_residual: f64) -> EdgeVerdict {
    if min_residual < MEMBERSHIP_TOL {
        EdgeVerdict::NotEdge
    } else if min_residual < MARGINAL_TOL {
        EdgeVerdict::Inconclusive
    } else {
        EdgeVerdict::Edge
    }
}

/// Range-criterion edge test.
pub fn certify_edge(delta: &BipartiteOperator, cfg: &SearchConfig) -> Result<EdgeCertificate> {
    let cons = Constraints::of(delta)?;
    let (da, db) = (cons.da, cons.db);

    if da == 2 && cons.range_rows() >= db {
        let members = product_vectors_in_range(delta, cfg)?;
        if members.finite && members.method == EdgeMethod::PolynomialD2 {
            let mut best: Option<(f64, ProductVector)> = None;
            for v in members.vectors {
                let (r1, r2) = cons.residuals(&v);
                let r = r1.hypot(r2);
                if best.as_ref().is_none_or(|(b, _)| r < *b) {
                    best = Some((r, v));
                }
            }
            return Ok(match best {
                None => EdgeCertificate {
                    verdict: EdgeVerdict::Edge,
                    witness_of_failure: None,
                    method: EdgeMethod::PolynomialD2,
                    min_residual: f64::INFINITY,
                },
                Some((r, v)) => {
                    let verdict = verdict_from(r);
                    EdgeCertificate {
                        verdict,
                        witness_of_failure: (verdict == EdgeVerdict::NotEdge).then_some(v),
                        method: EdgeMethod::PolynomialD2,
                        min_residual: r,
                    }
                }
            });
        }
    }

    let (s, e) = search::minimize_over_e(da, cfg, 31, |e| cons.joint_residual(e).0, &[], 24);
    let (_, f) = cons.joint_residual(&e);
    let v = ProductVector::new(&e, &f)?;
    let verdict = verdict_from(s);
    Ok(EdgeCertificate {
        verdict,
        witness_of_failure: (verdict == EdgeVerdict::NotEdge).then_some(v),
        method: EdgeMethod::Heuristic,
        min_residual: s,
    })
}

/// Largest `lambda` with `rho - lambda |v><v|` and its partial transpose
/// both PSD; `0` unless `v` and its partner lie in the respective ranges.
pub fn max_subtraction(rho: &BipartiteOperator, v: &ProductVector) -> Result<f64> {
    let rho = rho.hermitian()?;
    if v.dims() != rho.dims {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: v.joint.len(),
        });
    }
    let rt = rho.partial_transpose();
    let pinv = linalg::pinv_hermitian(&rho.matrix, None)?;
    let pinv_t = linalg::pinv_hermitian(&rt.matrix, None)?;
    Ok(max_subtraction_with(&rho.matrix, &pinv, &rt.matrix, &pinv_t, v))
}

pub(crate) fn range_residual(m: &CMatrix, pinv: &CMatrix, x: &CVector) -> f64 {
    let proj = pinv * (m * x);
    (x - proj).norm()
}

pub(crate) fn max_subtraction_with(
    rho: &CMatrix,
    pinv: &CMatrix,
    rho_t: &CMatrix,
    pinv_t: &CMatrix,
    v: &ProductVector,
) -> f64 {
    let partner = v.partial_conjugate();
    if range_residual(rho, pinv, &v.joint) > MEMBERSHIP_TOL
        || range_residual(rho_t, pinv_t, &partner.joint) > MEMBERSHIP_TOL
    {
        return 0.0;
    }
    let a = linalg::quad_form(pinv, &v.joint).re;
    let b = linalg::quad_form(pinv_t, &partner.joint).re;
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    (1.0 / a).min(1.0 / b)
}
