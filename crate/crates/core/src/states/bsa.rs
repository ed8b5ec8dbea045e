//! Greedy best-separable-approximation: peel product projectors off a PPT
//! state until no product vector can be subtracted any more.
//!
//! Each round looks for the product vector `|e,f>` with the largest
//! admissible weight
//!
//! `lambda*(e,f) = min(1/<e,f|R^+|e,f>, 1/<e,f*|(R^{T_B})^+|e,f*>)`
//!
//! over the candidates `|e,f>` in `R(R)` with `|e,f*>` in `R(R^{T_B})`. For
//! fixed `e` those form the null space `F(e)` of the joint constraint matrix,
//! and maximizing `lambda*` over unit `f in F(e)` is the minimax
//! `min_f max(f^dag A f, f^dag S f) = max_{t in [0,1]} lambda_min(tA + (1-t)S)`,
//! solved by golden-section search in `t`.

use rayon::prelude::*;

use crate::bipartite::{BipartiteOperator, ProductVector};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::search::{self, SearchConfig};
use crate::states::range::{self, certify_edge, null_space, Constraints, EdgeCertificate, EdgeVerdict};

/// Weights below this end the greedy loop.
pub const MIN_WEIGHT: f64 = 1e-9;
const NULL_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-12;
const MAX_ROUNDS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsaStatus {
    /// The remainder passed the edge test.
    Complete,
    /// The remainder failed (or could not pass) the edge test; the greedy
    /// result is only locally maximal.
    LocalDecomposition,
}

#[derive(Debug, Clone)]
pub struct BsaResult {
    /// Weight of the entangled remainder.
    pub p: f64,
    /// Subtracted `(weight, product vector)` pairs, in order.
    pub components: Vec<(f64, ProductVector)>,
    /// `sum_k w_k |v_k><v_k| / (1 - p)`, absent when nothing was subtracted.
    pub rho_sep: Option<BipartiteOperator>,
    /// Normalized remainder, absent when `p = 0`.
    pub delta: Option<BipartiteOperator>,
    pub reconstruction_error: f64,
    pub edge: Option<EdgeCertificate>,
    pub status: BsaStatus,
}

struct Remainder {
    m: CMatrix,
    pinv: CMatrix,
    mt: CMatrix,
    pinv_t: CMatrix,
    cons: Constraints,
}

impl Remainder {
    fn new(op: &BipartiteOperator) -> Result<Self> {
        let t = op.partial_transpose();
        Ok(Remainder {
            pinv: linalg::pinv_hermitian(&op.matrix, None)?,
            pinv_t: linalg::pinv_hermitian(&t.matrix, None)?,
            cons: Constraints::of(op)?,
            m: op.matrix.clone(),
            mt: t.matrix,
        })
    }

    fn weight(&self, v: &ProductVector) -> f64 {
        range::max_subtraction_with(&self.m, &self.pinv, &self.mt, &self.pinv_t, v)
    }
}

fn contract(m: &CMatrix, e: &CVector, da: usize, db: usize) -> CMatrix {
    let op = BipartiteOperator {
        dims: crate::bipartite::Dims::new(da, db),
        matrix: m.clone(),
    };
    linalg::hermitian_part(&op.contract_a_unchecked(e))
}

/// Best subtractable product vector with first factor `e`, or the joint
/// residual when there is none.
fn best_at(rem: &Remainder, e: &CVector) -> std::result::Result<(f64, ProductVector), f64> {
    let (da, db) = (rem.cons.da, rem.cons.db);
    let n = rem.cons.joint_matrix(e);
    let basis = null_space(&n, NULL_TOL);
    if basis.ncols() == 0 {
        return Err(range::min_singular(&n).0);
    }
    let a = linalg::hermitian_part(&(basis.adjoint() * contract(&rem.pinv, e, da, db) * &basis));
    let st = contract(&rem.pinv_t, e, da, db).map(|z| z.conj());
    let s = linalg::hermitian_part(&(basis.adjoint() * st * &basis));
    let at = |t: f64| linalg::min_eigpair(a.scale(t) + s.scale(1.0 - t));

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (at(x1).0, at(x2).0);
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = at(x2).0;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = at(x1).0;
        }
    }
    let mut best: Option<(f64, ProductVector)> = None;
    for t in [0.5 * (lo + hi), 0.0, 1.0] {
        let (_, y) = at(t);
        let f = &basis * y;
        if let Ok(v) = ProductVector::new(e, &f) {
            let w = rem.weight(&v);
            if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
                best = Some((w, v));
            }
        }
    }
    best.ok_or(f64::INFINITY)
}

fn best_candidate(rem: &Remainder, cfg: &SearchConfig, round: usize) -> Option<(f64, ProductVector)> {
    let stream = 100 + round as u64;
    if rem.cons.joint_rows() < rem.cons.db {
        // every e admits candidates: maximize the weight directly
        let obj = |e: &CVector| match best_at(rem, e) {
            Ok((w, _)) => -w,
            Err(_) => f64::INFINITY,
        };
        let (_, e) = search::minimize_over_e(rem.cons.da, cfg, stream, obj, &[], 24);
        return best_at(rem, &e).ok();
    }
    // candidates only at isolated e: locate them, then compare weights
    rem.cons
        .joint_zeros(cfg, stream, ZERO_TOL)
        .iter()
        .filter_map(|v| best_at(rem, &v.e).ok())
        .max_by(|a, b| a.0.total_cmp(&b.0))
}

fn validate_ppt(rho: &BipartiteOperator) -> Result<BipartiteOperator> {
    let rho = rho.hermitian()?;
    let scale = linalg::max_abs(&rho.matrix).max(1.0);
    let lmin = rho.min_eigenvalue()?;
    if lmin < -1e-9 * scale {
        return Err(Error::NotPsd { min_eigenvalue: lmin });
    }
    let tmin = rho.partial_transpose().min_eigenvalue()?;
    if tmin < -1e-9 * scale {
        return Err(Error::NotPpt { min_eigenvalue: tmin });
    }
    Ok(rho)
}

/// Trims `w` so that the eigenvalue of `R - w|v><v|` (and of its partial
/// transpose) driven to zero does not overshoot into negative values through
/// rounding in the pseudo-inverse. One Newton step per pass on the eigenvalue,
/// whose derivative in `w` is `-|<u|v>|^2`.
fn settle_weight(rem: &BipartiteOperator, v: &ProductVector, mut w: f64) -> Result<f64> {
    let scale = linalg::max_abs(&rem.matrix).max(1e-300);
    let partner = v.partial_conjugate();
    let pt = rem.partial_transpose();
    for _ in 0..4 {
        let mut worst: Option<f64> = None;
        for (m, x) in [(&rem.matrix, &v.joint), (&pt.matrix, &partner.joint)] {
            let trial = m - linalg::outer(x, x).scale(w);
            let (l, u) = linalg::min_eigpair(linalg::hermitian_part(&trial));
            if l < -1e-14 * scale {
                let overlap = u.dotc(x).norm_sqr();
                if overlap > 1e-300 {
                    let cut = -l / overlap;
                    worst = Some(worst.map_or(cut, |c: f64| c.max(cut)));
                }
            }
        }
        match worst {
            Some(cut) => w = (w - cut).max(0.0),
            None => break,
        }
    }
    Ok(w)
}

/// `rho = (1 - p) rho_sep + p delta` by greedy subtraction.
pub fn bsa_decompose(rho: &BipartiteOperator, cfg: &SearchConfig) -> Result<BsaResult> {
    cfg.validate()?;
    let rho = validate_ppt(rho)?;
    let mut remainder = rho.clone();
    let mut components: Vec<(f64, ProductVector)> = Vec::new();
    for round in 0..MAX_ROUNDS {
        let rem = Remainder::new(&remainder)?;
        match best_candidate(&rem, cfg, round) {
            Some((w, v)) if w > MIN_WEIGHT => {
                let w = settle_weight(&remainder, &v, w)?;
                if w <= MIN_WEIGHT {
                    break;
                }
                remainder = remainder.axpy(-w, &v.projector())?;
                components.push((w, v));
            }
            _ => break,
        }
    }

    let sep_weight: f64 = components.iter().map(|(w, _)| w).sum();
    let mut rebuilt = remainder.matrix.clone();
    for (w, v) in &components {
        rebuilt += linalg::outer(&v.joint, &v.joint).scale(*w);
    }
    let reconstruction_error = linalg::max_abs_diff(&rebuilt, &rho.matrix);

    let p = remainder.trace_re().max(0.0);
    let rho_sep = (sep_weight > 0.0).then(|| {
        let mut m = CMatrix::zeros(rho.dim(), rho.dim());
        for (w, v) in &components {
            m += linalg::outer(&v.joint, &v.joint).scale(*w / sep_weight);
        }
        rho.with_matrix(m)
    });
    let trace = rho.trace_re();
    let (delta, edge) = if p > 1e-12 * trace.max(1.0) {
        let d = remainder.scale(1.0 / p);
        let cert = certify_edge(&d, cfg)?;
        (Some(d), Some(cert))
    } else {
        (None, None)
    };
    let status = match &edge {
        Some(c) if c.verdict != EdgeVerdict::Edge => BsaStatus::LocalDecomposition,
        _ => BsaStatus::Complete,
    };
    Ok(BsaResult {
        p: p / trace,
        components,
        rho_sep,
        delta,
        reconstruction_error,
        edge,
        status,
    })
}

/// Weights `lambda*` of many candidates at once.
pub fn subtraction_weights(rho: &BipartiteOperator, candidates: &[ProductVector]) -> Result<Vec<f64>> {
    let rho = rho.hermitian()?;
    let rem = Remainder::new(&rho)?;
    Ok(candidates.par_iter().map(|v| rem.weight(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::Dims;
    use crate::states::family::rho_tilde;

    fn cfg() -> SearchConfig {
        SearchConfig {
            grid_resolution: 41,
            ..Default::default()
        }
    }

    #[test]
    fn edge_state_is_untouched() {
        let rho = rho_tilde(0.5).unwrap();
        let r = bsa_decompose(&rho, &cfg()).unwrap();
        assert!(r.components.is_empty());
        assert!((r.p - 1.0).abs() < 1e-12);
        assert_eq!(r.status, BsaStatus::Complete);
    }

    #[test]
    fn product_state_is_fully_consumed() {
        let v = ProductVector::from_real(&[0.6, 0.8], &[1.0, 0.0, -1.0]).unwrap();
        let r = bsa_decompose(&v.projector(), &cfg()).unwrap();
        assert!(r.p < 1e-9);
        assert!(r.delta.is_none());
        assert!(r.reconstruction_error < 1e-12);
    }

    #[test]
    fn rejects_npt_state() {
        let s = 1.0 / 2f64.sqrt();
        let psi = CVector::from_vec(vec![linalg::cr(s), linalg::cr(0.0), linalg::cr(0.0), linalg::cr(s)]);
        let bell = BipartiteOperator::projector(Dims::new(2, 2), &psi).unwrap();
        assert!(matches!(bsa_decompose(&bell, &cfg()), Err(Error::NotPpt { .. })));
    }

    #[test]
    fn weights_agree_with_single_evaluation() {
        let rho = BipartiteOperator::identity(Dims::new(2, 2)).scale(0.25);
        let v = ProductVector::basis(Dims::new(2, 2), 1, 0);
        let w = subtraction_weights(&rho, &[v.clone()]).unwrap();
        assert!((w[0] - range::max_subtraction(&rho, &v).unwrap()).abs() < 1e-14);
    }
}
