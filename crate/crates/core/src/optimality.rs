//! Local optimality test at the zeros of a witness.
//!
//! Around a zero `|e0,f0>` the curve
//! `|e(eps)> = |e0> + eps cos(theta) e^{i phi_e} |e1>`,
//! `|f(eps)> = |f0> + eps sin(theta) e^{i phi_f} |f1>`
//! gives a quartic `sum_k eps^k A_k(W)` for the (unnormalized) product
//! expectation. A positive operator `P` vanishing on `P_W` can be subtracted
//! from `W` unless some frame makes `A_2(W)` vanish while `A_2(P)` does not;
//! `A_2(P) = <Psi|P|Psi>` for the tangent vector `Psi`. When `d_A = 2` the
//! frames with `A_2(W) = 0` are found in closed form, which turns the search
//! for a subtractable direction into a span computation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bipartite::{BipartiteOperator, ProductVector};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::search::{contraction_ratio, span_dimension, SearchConfig};
use crate::witness::Witness;

/// Relative tolerance for the equality in the `d_A = 2` existence test.
pub const COND_TOL: f64 = 1e-7;
/// Largest `X(W)` accepted for a constructed frame.
pub const X_TOL: f64 = 1e-7;
const ORTHO_TOL: f64 = 1e-12;
const FIT_TOL: f64 = 1e-8;

/// Frame `(e0, f0; e1, f1; phi_e, phi_f, theta)` at a product vector.
#[derive(Debug, Clone)]
pub struct TangentFrame {
    pub e0: CVector,
    pub f0: CVector,
    pub e1: CVector,
    pub f1: CVector,
    pub phi_e: f64,
    pub phi_f: f64,
    pub theta: f64,
}

impl TangentFrame {
    /// Validates unit norms and `<e0|e1> = <f0|f1> = 0` (within 1e-12).
    pub fn new(e0: CVector, f0: CVector, e1: CVector, f1: CVector, phi_e: f64, phi_f: f64, theta: f64) -> Result<Self> {
        if e0.len() != e1.len() || f0.len() != f1.len() {
            return Err(Error::DimensionMismatch {
                expected: e0.len(),
                found: e1.len(),
            });
        }
        for (name, v) in [("e0", &e0), ("f0", &f0), ("e1", &e1), ("f1", &f1)] {
            if (v.norm() - 1.0).abs() > ORTHO_TOL {
                return Err(Error::InvalidParameter(format!("frame vector {name} is not unit norm")));
            }
        }
        if e0.dotc(&e1).norm() > ORTHO_TOL || f0.dotc(&f1).norm() > ORTHO_TOL {
            return Err(Error::InvalidParameter("frame vectors are not orthogonal".into()));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-15).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta = {theta} outside [0, pi/2]")));
        }
        Ok(TangentFrame {
            e0,
            f0,
            e1,
            f1,
            phi_e: phi_e.rem_euclid(std::f64::consts::TAU),
            phi_f: phi_f.rem_euclid(std::f64::consts::TAU),
            theta,
        })
    }

    /// Unnormalized joint vector `|e(eps)> (x) |f(eps)>`.
    pub fn curve(&self, eps: f64) -> CVector {
        let (s, co) = self.theta.sin_cos();
        let e = &self.e0 + self.e1.scale(eps * co) * Complex64::from_polar(1.0, self.phi_e);
        let f = &self.f0 + self.f1.scale(eps * s) * Complex64::from_polar(1.0, self.phi_f);
        e.kronecker(&f)
    }
}

/// `A_0(W) .. A_4(W)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl FrameCoefficients {
    pub fn as_array(&self) -> [f64; 5] {
        [self.a0, self.a1, self.a2, self.a3, self.a4]
    }
}

/// `W_{i,j}^{k,l} = <e_i,f_j|W|e_k,f_l>` for `i,j,k,l in {0,1}`.
struct FrameElements {
    m: CMatrix,
}

impl FrameElements {
    fn new(w: &BipartiteOperator, e0: &CVector, f0: &CVector, e1: &CVector, f1: &CVector) -> Self {
        let cols = [e0.kronecker(f0), e0.kronecker(f1), e1.kronecker(f0), e1.kronecker(f1)];
        let v = CMatrix::from_fn(cols[0].len(), 4, |r, k| cols[k][r]);
        FrameElements {
            m: v.adjoint() * &w.matrix * v,
        }
    }

    fn at(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.m[(2 * i + j, 2 * k + l)]
    }

    fn x(&self) -> f64 {
        let cross = self.at(1, 0, 0, 1).norm() + self.at(0, 0, 1, 1).norm();
        self.at(1, 0, 1, 0).re * self.at(0, 1, 0, 1).re - cross * cross
    }
}

fn check_dims(w: &BipartiteOperator, e: &CVector, f: &CVector) -> Result<()> {
    if e.len() != w.dims.a {
        return Err(Error::DimensionMismatch {
            expected: w.dims.a,
            found: e.len(),
        });
    }
    if f.len() != w.dims.b {
        return Err(Error::DimensionMismatch {
            expected: w.dims.b,
            found: f.len(),
        });
    }
    Ok(())
}

fn coefficients_direct(w: &BipartiteOperator, frame: &TangentFrame) -> FrameCoefficients {
    let el = FrameElements::new(w, &frame.e0, &frame.f0, &frame.e1, &frame.f1);
    let (s, co) = frame.theta.sin_cos();
    let pe = Complex64::from_polar(1.0, frame.phi_e);
    let pf = Complex64::from_polar(1.0, frame.phi_f);
    let a0 = el.at(0, 0, 0, 0).re;
    let a1 = 2.0 * (pe * el.at(0, 0, 1, 0) * co + pf * el.at(0, 0, 0, 1) * s).re;
    let a2 = co * co * el.at(1, 0, 1, 0).re
        + s * s * el.at(0, 1, 0, 1).re
        + 2.0 * s * co * (pe.conj() * pf * el.at(1, 0, 0, 1) + pe * pf * el.at(0, 0, 1, 1)).re;
    let a3 = 2.0 * s * co * (pf * el.at(1, 0, 1, 1) * co + pe * el.at(0, 1, 1, 1) * s).re;
    let a4 = s * s * co * co * el.at(1, 1, 1, 1).re;
    FrameCoefficients { a0, a1, a2, a3, a4 }
}

/// Least-squares-free quartic through five samples of the curve expectation.
fn coefficients_fitted(w: &BipartiteOperator, frame: &TangentFrame) -> [f64; 5] {
    let eps: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let vander = DMatrix::<f64>::from_fn(5, 5, |i, k| eps[i].powi(k as i32));
    let values = nalgebra::DVector::<f64>::from_iterator(
        5,
        eps.iter().map(|&t| {
            let v = frame.curve(t);
            linalg::quad_form(&w.matrix, &v).re
        }),
    );
    let sol = vander.lu().solve(&values).expect("Vandermonde matrix on distinct nodes is invertible");
    [sol[0], sol[1], sol[2], sol[3], sol[4]]
}

/// `A_0 .. A_4` from the matrix elements, cross-checked against a quartic
/// fitted through five points of the curve (agreement within 1e-8 relative
/// to `max |W_ij|`).
pub fn frame_coefficients(w: &BipartiteOperator, frame: &TangentFrame) -> Result<FrameCoefficients> {
    check_dims(w, &frame.e0, &frame.f0)?;
    let direct = coefficients_direct(w, frame);
    let fitted = coefficients_fitted(w, frame);
    let scale = linalg::max_abs(&w.matrix).max(1.0);
    for (k, (a, b)) in direct.as_array().iter().zip(fitted.iter()).enumerate() {
        if (a - b).abs() > FIT_TOL * scale {
            return Err(Error::Tolerance(format!(
                "A_{k}: matrix-element value {a:.12e} disagrees with the fitted value {b:.12e}"
            )));
        }
    }
    Ok(direct)
}

/// `X(W) = W_{10}^{10} W_{01}^{01} - (|W_{10}^{01}| + |W_{00}^{11}|)^2`.
pub fn x_of_w(w: &BipartiteOperator, e0: &CVector, f0: &CVector, e1: &CVector, f1: &CVector) -> Result<f64> {
    check_dims(w, e0, f0)?;
    check_dims(w, e1, f1)?;
    Ok(FrameElements::new(w, e0, f0, e1, f1).x())
}

/// Frame at `(e0, f0; e1, f1)` whose phases make both cross terms of `A_2`
/// negative reals and whose angle minimizes the resulting `A_2` (the
/// smallest eigenvector of the 2x2 form). `A_2` of this frame vanishes iff
/// `X(W) = 0`.
pub fn minimizing_frame(w: &BipartiteOperator, e0: &CVector, f0: &CVector, e1: &CVector, f1: &CVector) -> Result<TangentFrame> {
    check_dims(w, e0, f0)?;
    check_dims(w, e1, f1)?;
    let el = FrameElements::new(w, e0, f0, e1, f1);
    let phi0 = el.at(1, 0, 0, 1).arg();
    let phi1 = el.at(0, 0, 1, 1).arg();
    // e^{-i(phi_e - phi_f - phi0)} = -1 and e^{i(phi_e + phi_f + phi1)} = -1
    let phi_e = (phi0 - phi1) / 2.0 + std::f64::consts::PI;
    let phi_f = -(phi0 + phi1) / 2.0;
    let (p, q) = (el.at(1, 0, 1, 0).re, el.at(0, 1, 0, 1).re);
    let m = el.at(1, 0, 0, 1).norm() + el.at(0, 0, 1, 1).norm();
    // minimize cos^2 p + sin^2 q - 2 sin cos m over theta in [0, pi/2]
    let theta = (0.5 * (2.0 * m).atan2(q - p)).clamp(0.0, std::f64::consts::FRAC_PI_2);
    TangentFrame::new(e0.clone(), f0.clone(), e1.clone(), f1.clone(), phi_e, phi_f, theta)
}

/// Angle with `cos(theta) sqrt(W_{10}^{10}) = sin(theta) sqrt(W_{01}^{01})`.
pub fn balance_angle(w10: f64, w01: f64) -> Result<f64> {
    if w10 < 1e-12 && w01 < 1e-12 {
        return Err(Error::Degenerate(
            "both diagonal frame elements vanish; the angle is undetermined".into(),
        ));
    }
    Ok(w10.max(0.0).sqrt().atan2(w01.max(0.0).sqrt()))
}

/// `|Psi_{01}> = sin(theta) e^{i phi_f} |e0,f1> + cos(theta) e^{i phi_e} |e1,f0>`.
pub fn psi_vector(frame: &TangentFrame) -> CVector {
    let (s, co) = frame.theta.sin_cos();
    frame.e0.kronecker(&frame.f1) * Complex64::from_polar(s, frame.phi_f)
        + frame.e1.kronecker(&frame.f0) * Complex64::from_polar(co, frame.phi_e)
}

/// The unit vector orthogonal to `e` in `C^2`.
pub fn orthogonal_qubit(e: &CVector) -> CVector {
    CVector::from_vec(vec![-e[1].conj(), e[0].conj()])
}

/// Operators `w^e_{ij} = <e_i|W|e_j>` on `H_B`.
struct Blocks {
    w00: CMatrix,
    w01: CMatrix,
    w10: CMatrix,
    w11: CMatrix,
    g: CMatrix,
}

impl Blocks {
    fn new(w: &BipartiteOperator, e0: &CVector, e1: &CVector) -> Self {
        let db = w.dims.b;
        let block = |a: &CVector, b: &CVector| {
            CMatrix::from_fn(db, db, |m, n| {
                let mut z = Complex64::new(0.0, 0.0);
                for i in 0..w.dims.a {
                    for j in 0..w.dims.a {
                        z += a[i].conj() * w.matrix[(w.dims.index(i, m), w.dims.index(j, n))] * b[j];
                    }
                }
                z
            })
        };
        let w00 = linalg::hermitian_part(&block(e0, e0));
        let w11 = linalg::hermitian_part(&block(e1, e1));
        let w01 = block(e0, e1);
        let w10 = w01.adjoint();
        let ed = linalg::eig_symmetrized(w00.clone());
        let cut = linalg::REL_CUTOFF * ed.max_abs().max(linalg::max_abs(&w.matrix)).max(1e-300);
        let g = ed.spectral_map(|l| if l.abs() > cut { 1.0 / l } else { 0.0 });
        Blocks { w00, w01, w10, w11, g }
    }
}

/// Phase `phi_e` and the tangent vector `f1` at a zero when `d_A = 2`.
#[derive(Debug, Clone)]
pub struct PhaseSolution {
    pub phi_e: f64,
    /// Unit vector orthogonal to `f0`.
    pub f1: CVector,
    /// `<f0|w10 (w00)^+ w10|f0>`; `phi_e` makes `e^{-2 i phi_e}` times it a positive real.
    pub form: Complex64,
}

fn check_zero_frame(w: &BipartiteOperator, e0: &CVector, f0: &CVector) -> Result<()> {
    if w.dims.a != 2 {
        return Err(Error::Precondition(format!("requires d_A = 2, got {}", w.dims.a)));
    }
    check_dims(w, e0, f0)?;
    if (e0.norm() - 1.0).abs() > 1e-10 || (f0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter("e0 and f0 must be unit vectors".into()));
    }
    Ok(())
}

/// Solves the phase condition at the zero `|e0,f0>` (with `e1` the vector
/// orthogonal to `e0`) and recovers
/// `f1 ~ -(w00)^+ (e^{-i phi_e} w10 + e^{i phi_e} w01)|f0>`.
///
/// Fails with [`Error::Degenerate`] when the phase form vanishes, when
/// `w01|f0>` or `w10|f0>` leaks into the kernel of `w00` beyond `f0`, or
/// when the recovered `f1` vanishes.
pub fn solve_phase_e(w: &BipartiteOperator, e0: &CVector, f0: &CVector) -> Result<PhaseSolution> {
    check_zero_frame(w, e0, f0)?;
    let e1 = orthogonal_qubit(e0);
    let bl = Blocks::new(w, e0, &e1);
    solve_phase_blocks(w, &bl, f0)
}

fn solve_phase_blocks(w: &BipartiteOperator, bl: &Blocks, f0: &CVector) -> Result<PhaseSolution> {
    let scale = linalg::max_abs(&w.matrix).max(1e-300);
    let p = &bl.w01 * f0;
    let q = &bl.w10 * f0;
    // components outside the range of w00 cannot be reached by the pseudo-inverse
    let range = &bl.g * &bl.w00;
    for (name, v) in [("w01|f0>", &p), ("w10|f0>", &q)] {
        let leak = (v - &range * v).norm();
        if leak > 1e-7 * scale {
            return Err(Error::Degenerate(format!(
                "{name} has a component {leak:.2e} in the kernel of w00"
            )));
        }
    }
    // <f0|w10 G w10|f0> = <p|G|q>
    let form = p.dotc(&(&bl.g * &q));
    if form.norm() < 1e-10 * scale {
        return Err(Error::Degenerate(
            "the phase form vanishes; phi_e is undetermined".into(),
        ));
    }
    let phi_e = form.arg() / 2.0;
    let pe = Complex64::from_polar(1.0, phi_e);
    let raw = -(&bl.g * (&q * pe.conj() + &p * pe));
    let n = raw.norm();
    if n < 1e-10 {
        return Err(Error::Degenerate("recovered f1 vanishes".into()));
    }
    Ok(PhaseSolution {
        phi_e,
        f1: raw.unscale(n),
        form,
    })
}

/// Result of the `d_A = 2` existence test at one zero.
#[derive(Debug, Clone)]
pub struct DirectionTest {
    pub exists: bool,
    /// `<f0|[w11 - w01 G w10 - w10 G w01]|f0>` with `G = (w00)^+`.
    pub lhs: f64,
    /// `2 |<f0|w01 G w01|f0>|`.
    pub rhs: f64,
    /// Present when `exists`: the frame with `X(W) ~ 0` and balanced angle.
    pub frame: Option<TangentFrame>,
    /// `X(W)` of the constructed frame.
    pub x: Option<f64>,
}

/// Decides whether some `(e1, f1)` at the zero `|e0,f0>` gives `X(W) = 0`
/// and, if so, builds the frame (phases and angle included).
pub fn qubit_direction_test(w: &BipartiteOperator, e0: &CVector, f0: &CVector) -> Result<DirectionTest> {
    check_zero_frame(w, e0, f0)?;
    let e1 = orthogonal_qubit(e0);
    let bl = Blocks::new(w, e0, &e1);
    let lhs = linalg::quad_form(&(&bl.w11 - &bl.w01 * &bl.g * &bl.w10 - &bl.w10 * &bl.g * &bl.w01), f0).re;
    let rhs = 2.0 * linalg::quad_form(&(&bl.w01 * &bl.g * &bl.w01), f0).norm();
    let exists = (lhs - rhs).abs() <= COND_TOL * lhs.abs().max(rhs.abs()).max(1e-12);
    if !exists {
        return Ok(DirectionTest {
            exists,
            lhs,
            rhs,
            frame: None,
            x: None,
        });
    }
    let sol = solve_phase_blocks(w, &bl, f0)?;
    let el = FrameElements::new(w, e0, f0, &e1, &sol.f1);
    let phi0 = el.at(1, 0, 0, 1).arg();
    let phi_f = sol.phi_e - phi0 - std::f64::consts::PI;
    let theta = balance_angle(el.at(1, 0, 1, 0).re, el.at(0, 1, 0, 1).re)?;
    let frame = TangentFrame::new(e0.clone(), f0.clone(), e1, sol.f1, sol.phi_e, phi_f, theta)?;
    let x = el.x();
    let scale = linalg::max_abs(&w.matrix).max(1.0);
    if x > X_TOL * scale * scale {
        return Err(Error::Tolerance(format!(
            "existence condition holds but the constructed frame has X(W) = {x:.3e}"
        )));
    }
    Ok(DirectionTest {
        exists,
        lhs,
        rhs,
        frame: Some(frame),
        x: Some(x),
    })
}

/// How an optimality claim is backed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// `P_W` alone spans the Hilbert space.
    Span,
    /// `P_W` together with the tangent vectors `Psi` spans it.
    PsiClosure,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Optimal(Certificate),
    /// `direction` is orthogonal to `P_W` and every `Psi`; `lambda0` is the
    /// largest multiple of its projector that can be subtracted.
    NotOptimal { direction: CVector, lambda0: f64 },
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct OptimalityVerdict {
    pub verdict: Verdict,
    pub zero_count: usize,
    pub span_dimension: usize,
    pub psi_vectors: Vec<CVector>,
    pub diagnostics: Vec<String>,
}

impl OptimalityVerdict {
    pub fn is_optimal(&self) -> bool {
        matches!(self.verdict, Verdict::Optimal(_))
    }

    pub fn direction(&self) -> Option<&CVector> {
        match &self.verdict {
            Verdict::NotOptimal { direction, .. } => Some(direction),
            _ => None,
        }
    }
}

/// Optimality of a witness from its zero set.
pub fn optimality_verdict(w: &Witness, cfg: &SearchConfig) -> Result<OptimalityVerdict> {
    verdict_for(&w.op, &w.zero_set, cfg)
}

/// [`optimality_verdict`] on a raw operator with a precomputed zero set.
pub fn verdict_for(op: &BipartiteOperator, zeros: &[ProductVector], cfg: &SearchConfig) -> Result<OptimalityVerdict> {
    let d = op.dim();
    let span = span_dimension(zeros);
    let mut out = OptimalityVerdict {
        verdict: Verdict::Inconclusive,
        zero_count: zeros.len(),
        span_dimension: span,
        psi_vectors: Vec::new(),
        diagnostics: Vec::new(),
    };
    if span == d {
        out.verdict = Verdict::Optimal(Certificate::Span);
        return Ok(out);
    }
    if op.dims.a != 2 {
        out.diagnostics
            .push(format!("zero set spans {span} of {d} dimensions; no closed-form test for d_A = {}", op.dims.a));
        return Ok(out);
    }
    for (k, z) in zeros.iter().enumerate() {
        match qubit_direction_test(op, &z.e, &z.f) {
            Ok(r) => {
                if let Some(frame) = &r.frame {
                    out.psi_vectors.push(psi_vector(frame));
                }
            }
            Err(Error::Degenerate(msg)) => out.diagnostics.push(format!("zero {k}: {msg}")),
            Err(e) => return Err(e),
        }
    }
    if !out.diagnostics.is_empty() {
        return Ok(out);
    }
    let mut all: Vec<CVector> = zeros.iter().map(|z| z.joint.clone()).collect();
    all.extend(out.psi_vectors.iter().cloned());
    let basis = linalg::span_basis(&all, d);
    if basis.ncols() == d {
        out.verdict = Verdict::Optimal(Certificate::PsiClosure);
        return Ok(out);
    }
    let comp = linalg::identity(d) - &basis * basis.adjoint();
    let ed = linalg::eig_symmetrized(linalg::hermitian_part(&comp));
    let direction = ed.vector(d - 1);
    let proj = BipartiteOperator::projector(op.dims, &direction)?;
    let lambda0 = contraction_ratio(op, &proj, zeros, cfg)?.lambda0;
    if lambda0 > cfg.zero_tol {
        out.verdict = Verdict::NotOptimal { direction, lambda0 };
    } else {
        out.diagnostics.push(format!(
            "direction orthogonal to P_W and Psi has lambda_0 = {lambda0:.3e}; zero set likely incomplete"
        ));
    }
    Ok(out)
}

/// Random frame at a zero: `e1, f1` Haar-random in the orthogonal
/// complements, phases uniform, angle uniform in `[0, pi/2]`.
pub fn random_frame(v: &ProductVector, rng: &mut rand_chacha::ChaCha8Rng) -> TangentFrame {
    use rand::Rng;
    let ortho = |x: &CVector, rng: &mut rand_chacha::ChaCha8Rng| {
        let y = crate::search::haar_vector(x.len(), rng);
        let y = &y - x * x.dotc(&y);
        y.unscale(y.norm())
    };
    let e1 = ortho(&v.e, rng);
    let f1 = ortho(&v.f, rng);
    let phi_e = rng.random::<f64>() * std::f64::consts::TAU;
    let phi_f = rng.random::<f64>() * std::f64::consts::TAU;
    let theta = rng.random::<f64>() * std::f64::consts::FRAC_PI_2;
    TangentFrame::new(v.e.clone(), v.f.clone(), e1, f1, phi_e, phi_f, theta).expect("orthonormalized frame")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::Dims;
    use crate::linalg::{c, cr};
    use rand::SeedableRng;

    fn basis(d: usize, k: usize) -> CVector {
        let mut v = CVector::zeros(d);
        v[k] = cr(1.0);
        v
    }

    fn random_hermitian(dims: Dims, seed: u64) -> BipartiteOperator {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = dims.total();
        let m = CMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        BipartiteOperator::new(dims, linalg::hermitian_part(&m)).unwrap()
    }

    #[test]
    fn frame_rejects_non_orthogonal_vectors() {
        let e = basis(2, 0);
        let f = basis(3, 0);
        assert!(TangentFrame::new(e.clone(), f.clone(), e.clone(), basis(3, 1), 0.0, 0.0, 0.3).is_err());
        assert!(TangentFrame::new(e, f, basis(2, 1), basis(3, 1), 0.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn identity_coefficients_match_fit() {
        let w = BipartiteOperator::identity(Dims::new(2, 3));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let v = ProductVector::basis(w.dims, 0, 1);
        for _ in 0..20 {
            let fr = random_frame(&v, &mut rng);
            let a = frame_coefficients(&w, &fr).unwrap();
            let (s, co) = fr.theta.sin_cos();
            // |e(eps)|^2 |f(eps)|^2 = (1 + eps^2 c^2)(1 + eps^2 s^2)
            assert!((a.a0 - 1.0).abs() < 1e-12);
            assert!(a.a1.abs() < 1e-12 && a.a3.abs() < 1e-12);
            assert!((a.a2 - 1.0).abs() < 1e-12);
            assert!((a.a4 - s * s * co * co).abs() < 1e-12);
        }
    }

    #[test]
    fn random_hermitian_coefficients_match_fit() {
        let w = random_hermitian(Dims::new(2, 4), 9);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let e = crate::search::haar_vector(2, &mut rng);
            let f = crate::search::haar_vector(4, &mut rng);
            let v = ProductVector::new(&e, &f).unwrap();
            let fr = random_frame(&v, &mut rng);
            frame_coefficients(&w, &fr).unwrap();
        }
    }

    #[test]
    fn zero_angle_reads_off_single_element() {
        let w = random_hermitian(Dims::new(2, 2), 4);
        let fr = TangentFrame::new(basis(2, 0), basis(2, 0), basis(2, 1), basis(2, 1), 0.7, 1.1, 0.0).unwrap();
        let a = frame_coefficients(&w, &fr).unwrap();
        // |e1 f0> = |10> has joint index 2
        assert!((a.a2 - w.matrix[(2, 2)].re).abs() < 1e-14);
        assert_eq!(a.a3, 0.0);
        assert_eq!(a.a4, 0.0);
    }

    #[test]
    fn x_without_cross_terms_is_product_of_diagonals() {
        let w = BipartiteOperator::new(Dims::new(2, 2), linalg::diag(&[0.0, 2.0, 3.0, 1.0])).unwrap();
        let x = x_of_w(&w, &basis(2, 0), &basis(2, 0), &basis(2, 1), &basis(2, 1)).unwrap();
        assert!((x - 6.0).abs() < 1e-14);
    }

    #[test]
    fn psi_is_unit_and_balanced() {
        let fr = TangentFrame::new(basis(2, 0), basis(2, 0), basis(2, 1), basis(2, 1), 0.0, 0.0, std::f64::consts::FRAC_PI_4)
            .unwrap();
        let psi = psi_vector(&fr);
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        let h = 1.0 / 2f64.sqrt();
        assert!((psi[1] - cr(h)).norm() < 1e-14 && (psi[2] - cr(h)).norm() < 1e-14);
    }

    #[test]
    fn balance_angle_rejects_double_degeneracy() {
        assert!(matches!(balance_angle(0.0, 1e-14), Err(Error::Degenerate(_))));
        assert!((balance_angle(1.0, 1.0).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn minimizing_frame_attains_lower_a2() {
        // swap operator: <e,f|F|e,f> = |<e|f>|^2, zero at |0,1>
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = cr(1.0);
        m[(3, 3)] = cr(1.0);
        m[(1, 2)] = cr(1.0);
        m[(2, 1)] = cr(1.0);
        let w = BipartiteOperator::new(Dims::new(2, 2), m).unwrap();
        let fr = minimizing_frame(&w, &basis(2, 0), &basis(2, 1), &basis(2, 1), &basis(2, 0)).unwrap();
        let a = frame_coefficients(&w, &fr).unwrap();
        assert!(a.a0.abs() < 1e-15 && a.a1.abs() < 1e-15);
        let x = x_of_w(&w, &basis(2, 0), &basis(2, 1), &basis(2, 1), &basis(2, 0)).unwrap();
        assert!(x.abs() < 1e-14);
        assert!(a.a2.abs() < 1e-14, "{a:?}");
    }

    #[test]
    fn rank_one_operator_has_degenerate_phase() {
        // PSD operators annihilate their zeros, so w10|f0> = 0 and the phase is free
        let s = 1.0 / 2f64.sqrt();
        let psi = CVector::from_vec(vec![cr(0.0), cr(s), cr(-s), cr(0.0)]);
        let w = BipartiteOperator::projector(Dims::new(2, 2), &psi).unwrap();
        let r = qubit_direction_test(&w, &basis(2, 0), &basis(2, 0));
        assert!(matches!(r, Err(Error::Degenerate(_))), "{r:?}");
    }

    #[test]
    fn a8_requires_qubit_a_side() {
        let w = BipartiteOperator::identity(Dims::new(3, 2));
        assert!(matches!(qubit_direction_test(&w, &basis(3, 0), &basis(2, 0)), Err(Error::Precondition(_))));
    }
}
