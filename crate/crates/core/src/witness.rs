//! Entanglement witnesses: validation, detection, subtraction of positive
//! (or decomposable) operators, and the optimization loops.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bipartite::{dedup_product_vectors, BipartiteOperator, ProductVector};
use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::optimality::{self, Verdict};
use crate::search::{self, SearchConfig};
use crate::states::{self, EdgeCertificate, EdgeVerdict};

/// Expectation values below this count as detection.
pub const DETECTION_TOL: f64 = 1e-10;
/// Largest admissible violation of positivity on product vectors.
pub const FLOOR_TOL: f64 = 1e-8;
/// A witness must have an eigenvalue below `-NEGATIVITY_TOL`.
pub const NEGATIVITY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

/// A PPT state detected by a witness, kept as evidence that the witness is
/// not decomposable.
#[derive(Debug, Clone)]
pub struct Evidence {
    pub state: BipartiteOperator,
    pub value: f64,
}

/// Trace-normalized Hermitian operator, non-negative on product vectors,
/// with a negative eigenvalue.
#[derive(Debug, Clone)]
pub struct Witness {
    pub op: BipartiteOperator,
    /// `P_W`, populated when the floor is within tolerance of zero.
    pub zero_set: Vec<ProductVector>,
    /// `min <e,f|W|e,f>` over product vectors.
    pub floor: f64,
    pub kind_evidence: Option<Evidence>,
}

impl Witness {
    pub fn span_dimension(&self) -> usize {
        search::span_dimension(&self.zero_set)
    }
}

/// Checks the three witness conditions and computes floor and zero set.
pub fn validate(op: &BipartiteOperator, cfg: &SearchConfig) -> Result<Witness> {
    let op = op.hermitian()?;
    let tr = op.trace_re();
    if !(tr > 0.0) {
        return Err(Error::NotWitness(format!("trace {tr:.3e} is not positive")));
    }
    let op = op.scale(1.0 / tr);
    let lmin = op.min_eigenvalue()?;
    if lmin >= -NEGATIVITY_TOL {
        return Err(Error::NotWitness(format!(
            "operator is positive semidefinite (minimum eigenvalue {lmin:.3e})"
        )));
    }
    let floor = search::min_product_expectation(&op, cfg)?.value;
    if floor < -FLOOR_TOL.max(cfg.zero_tol) {
        return Err(Error::NotWitness(format!("negative on a product vector: {floor:.3e}")));
    }
    let zero_set = if floor <= cfg.zero_tol {
        search::zero_set(&op, cfg)?
    } else {
        Vec::new()
    };
    Ok(Witness {
        op,
        zero_set,
        floor,
        kind_evidence: None,
    })
}

fn check_psd(rho: &BipartiteOperator) -> Result<BipartiteOperator> {
    let rho = rho.hermitian()?;
    let lmin = rho.min_eigenvalue()?;
    let scale = linalg::max_abs(&rho.matrix).max(1e-300);
    if lmin < -PSD_TOL * scale.max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: lmin });
    }
    Ok(rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// `tr(W rho)`.
    pub value: f64,
    pub detected: bool,
}

/// `tr(W rho)` and whether it is below `-1e-10`.
pub fn detects(w: &Witness, rho: &BipartiteOperator) -> Result<Detection> {
    let rho = check_psd(rho)?;
    w.op.same_dims(&rho)?;
    let value = w.op.trace_with(&rho).re;
    Ok(Detection {
        value,
        detected: value < -DETECTION_TOL,
    })
}

/// Records `rho` as non-decomposability evidence when it is PPT and detected.
pub fn attach_evidence(mut w: Witness, rho: &BipartiteOperator) -> Result<Witness> {
    let det = detects(&w, rho)?;
    let pt = check_psd(&rho.partial_transpose());
    if det.detected && pt.is_ok() {
        w.kind_evidence = Some(Evidence {
            state: rho.clone(),
            value: det.value,
        });
    }
    Ok(w)
}

/// `(W - lambda D)`, trace-normalized and validated. With `tr D = 1` and
/// `lambda < 1` this is `(W - lambda D) / (1 - lambda)`.
///
/// `D` must vanish on `P_W`; otherwise nothing can be subtracted.
pub fn subtract(w: &Witness, d: &BipartiteOperator, lambda: f64, cfg: &SearchConfig) -> Result<Witness> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be finite and non-negative")));
    }
    if lambda == 0.0 {
        return Ok(w.clone());
    }
    w.op.same_dims(d)?;
    let d = d.hermitian()?;
    let scale = linalg::max_abs(&d.matrix).max(1.0);
    for z in &w.zero_set {
        let dz = d.product_expectation(z);
        if dz.abs() > cfg.zero_tol * scale {
            return Err(Error::Precondition(format!(
                "operator does not vanish on the zero set (<v|D|v> = {dz:.3e})"
            )));
        }
    }
    let mut out = validate(&w.op.axpy(-lambda, &d)?, cfg)?;
    out.zero_set = merge_zeros(&out.op, &w.zero_set, out.zero_set, cfg);
    if let Some(ev) = &w.kind_evidence {
        out = attach_evidence(out, &ev.state)?;
    }
    Ok(out)
}

fn merge_zeros(op: &BipartiteOperator, old: &[ProductVector], new: Vec<ProductVector>, cfg: &SearchConfig) -> Vec<ProductVector> {
    let mut all = new;
    all.extend(old.iter().filter(|z| op.product_expectation(z) < cfg.zero_tol).cloned());
    dedup_product_vectors(all, cfg.dedup_fidelity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Subtract positive operators.
    General,
    /// Subtract decomposable operators `a P + (1 - a) Q^{T_B}`.
    Nd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub search: SearchConfig,
    pub max_iterations: usize,
    /// Subtractions with `lambda_0` at or below this end the loop.
    pub lambda_min_step: f64,
    /// Weight `a` of `P` in the nd-mode operator `a P + (1 - a) Q^{T_B}`.
    pub mix: f64,
    pub max_halvings: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            search: SearchConfig::default(),
            max_iterations: 50,
            lambda_min_step: 1e-9,
            mix: 0.5,
            max_halvings: 20,
        }
    }
}

impl OptimizeConfig {
    pub fn with_seed(seed: u64) -> Self {
        OptimizeConfig {
            search: SearchConfig::with_seed(seed),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalStatus {
    OptimalCertified,
    EpsilonExhausted,
    IterationCap,
}

impl std::fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TerminalStatus::OptimalCertified => "optimal-certified",
            TerminalStatus::EpsilonExhausted => "epsilon-exhausted",
            TerminalStatus::IterationCap => "iteration-cap",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub lambda: f64,
    pub rank: usize,
    pub floor: f64,
    pub zero_count: usize,
}

#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    pub steps: Vec<TraceStep>,
    pub terminal_status: TerminalStatus,
    /// Witness operator after each accepted step.
    pub history: Vec<BipartiteOperator>,
    pub notes: Vec<String>,
}

impl OptimizationTrace {
    fn new() -> Self {
        OptimizationTrace {
            steps: Vec::new(),
            terminal_status: TerminalStatus::IterationCap,
            history: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn record(&mut self, w: &Witness, lambda: f64, rank: usize) {
        self.steps.push(TraceStep {
            iteration: self.steps.len() + 1,
            lambda,
            rank,
            floor: w.floor,
            zero_count: w.zero_set.len(),
        });
        self.history.push(w.op.clone());
    }

    /// CSV with header `iteration,lambda,rank,floor,zero_count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,lambda,rank,floor,zero_count\n");
        for st in &self.steps {
            s.push_str(&format!(
                "{},{:.17e},{},{:.17e},{}\n",
                st.iteration, st.lambda, st.rank, st.floor, st.zero_count
            ));
        }
        s
    }
}

/// Normalized projector onto the complement of the span of `vectors`, and
/// its rank.
fn complement(vectors: &[CVector], w: &BipartiteOperator) -> (BipartiteOperator, usize) {
    let p = linalg::complement_projector(vectors, w.dim());
    let rank = linalg::trace(&p).re.round() as usize;
    let op = w.with_matrix(p);
    if rank == 0 {
        (op, 0)
    } else {
        (op.scale(1.0 / rank as f64), rank)
    }
}

/// The operator subtracted in one step of the optimization, with its rank.
fn subtraction_operator(w: &Witness, mode: Mode, mix: f64) -> Result<(BipartiteOperator, usize)> {
    let joints: Vec<CVector> = w.zero_set.iter().map(|z| z.joint.clone()).collect();
    let (p, rp) = complement(&joints, &w.op);
    match mode {
        Mode::General => Ok((p, rp)),
        Mode::Nd => {
            let partners: Vec<CVector> = w.zero_set.iter().map(|z| z.partial_conjugate().joint).collect();
            let (q, rq) = complement(&partners, &w.op);
            let (a, b) = match (rp, rq) {
                (0, 0) => (0.0, 0.0),
                (_, 0) => (1.0, 0.0),
                (0, _) => (0.0, 1.0),
                _ => (mix, 1.0 - mix),
            };
            let d = p.scale(a).axpy(b, &q.partial_transpose())?;
            Ok((d, rp + rq))
        }
    }
}

/// Subtracts `lambda * d`, halving `lambda` whenever validation fails.
fn subtract_with_backoff(
    w: &Witness,
    d: &BipartiteOperator,
    lambda: f64,
    cfg: &OptimizeConfig,
    trace: &mut OptimizationTrace,
) -> Result<Option<(Witness, f64)>> {
    let mut lam = lambda;
    for _ in 0..=cfg.max_halvings {
        match subtract(w, d, lam, &cfg.search) {
            Ok(next) => return Ok(Some((next, lam))),
            Err(Error::NotWitness(msg)) => {
                trace.notes.push(format!("lambda {lam:.6e} rejected ({msg}); halving"));
                lam *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Repeatedly subtracts the largest admissible multiple of an operator
/// vanishing on `P_W` until the zero set spans the space or no subtraction
/// remains. When the complement of `P_W` admits no subtraction, a direction
/// from the local optimality test is tried instead.
pub fn optimize(w: &Witness, mode: Mode, cfg: &OptimizeConfig) -> Result<(Witness, OptimizationTrace)> {
    if !(0.0..=1.0).contains(&cfg.mix) {
        return Err(Error::InvalidParameter(format!("mix = {} outside [0, 1]", cfg.mix)));
    }
    let d = w.op.dim();
    let mut cur = w.clone();
    let mut trace = OptimizationTrace::new();
    for _ in 0..cfg.max_iterations {
        if cur.span_dimension() == d {
            trace.terminal_status = TerminalStatus::OptimalCertified;
            return Ok((cur, trace));
        }
        let (dop, rank) = subtraction_operator(&cur, mode, cfg.mix)?;
        let lambda0 = if rank == 0 {
            0.0
        } else {
            search::contraction_ratio(&cur.op, &dop, &cur.zero_set, &cfg.search)?.lambda0
        };
        let (dop, rank, lambda0) = if lambda0 > cfg.lambda_min_step && lambda0 < 1.0 {
            (dop, rank, lambda0)
        } else {
            if lambda0 >= 1.0 {
                trace.notes.push(format!("lambda_0 = {lambda0:.3e} would remove the whole witness"));
            }
            let v = optimality::verdict_for(&cur.op, &cur.zero_set, &cfg.search)?;
            match v.verdict {
                Verdict::Optimal(_) => {
                    trace.terminal_status = TerminalStatus::OptimalCertified;
                    return Ok((cur, trace));
                }
                Verdict::NotOptimal { direction, lambda0 } if lambda0 > cfg.lambda_min_step && lambda0 < 1.0 => {
                    (BipartiteOperator::projector(cur.op.dims, &direction)?, 1, lambda0)
                }
                _ => {
                    trace.notes.extend(v.diagnostics);
                    trace.terminal_status = TerminalStatus::EpsilonExhausted;
                    return Ok((cur, trace));
                }
            }
        };
        match subtract_with_backoff(&cur, &dop, lambda0, cfg, &mut trace)? {
            Some((next, lam)) => {
                trace.record(&next, lam, rank);
                cur = next;
            }
            None => {
                trace.terminal_status = TerminalStatus::EpsilonExhausted;
                return Ok((cur, trace));
            }
        }
    }
    trace.terminal_status = if cur.span_dimension() == d {
        TerminalStatus::OptimalCertified
    } else {
        TerminalStatus::IterationCap
    };
    Ok((cur, trace))
}

/// Result of building a witness from an edge state.
#[derive(Debug, Clone)]
pub struct EdgeConstruction {
    pub witness: Witness,
    /// Floor of `W_delta` subtracted as a multiple of the identity.
    pub epsilon1: f64,
    /// `W_delta = (P_1 + Q_1^{T_B}) / tr(P_1 + Q_1)`.
    pub w_delta: BipartiteOperator,
    pub certificate: EdgeCertificate,
}

/// `W_1 ~ W_delta - epsilon_1 * 1` from the kernel projectors `P_1` of
/// `delta` and `Q_1` of `delta^{T_B}`, with `epsilon_1` the floor of
/// `W_delta`. `delta` is attached as evidence.
pub fn construct_from_edge(delta: &BipartiteOperator, cfg: &SearchConfig) -> Result<EdgeConstruction> {
    let delta = check_psd(delta)?;
    let certificate = states::certify_edge(&delta, cfg)?;
    match certificate.verdict {
        EdgeVerdict::Edge => {}
        EdgeVerdict::NotEdge => {
            return Err(Error::NotEdge(format!(
                "a product vector and its partner lie in both ranges (residual {:.2e}); the state is separable or can be reduced",
                certificate.min_residual
            )))
        }
        EdgeVerdict::Inconclusive => {
            return Err(Error::NotEdge(format!(
                "edge test inconclusive (residual {:.2e})",
                certificate.min_residual
            )))
        }
    }
    let p1 = linalg::kernel_projector(&delta.matrix, Some(1e-9))?;
    let q1 = linalg::kernel_projector(&delta.partial_transpose().matrix, Some(1e-9))?;
    let w_delta = delta
        .with_matrix(p1)
        .add(&delta.with_matrix(q1).partial_transpose())?
        .trace_normalized()?;
    let epsilon1 = search::min_product_expectation(&w_delta, cfg)?.value;
    if !(epsilon1 > cfg.zero_tol) {
        return Err(Error::NotEdge(format!(
            "floor of P_1 + Q_1^T is {epsilon1:.3e}; a product vector lies in both ranges"
        )));
    }
    let id = crate::bipartite::BipartiteOperator::identity(delta.dims);
    let w1 = w_delta.axpy(-epsilon1, &id)?;
    let witness = attach_evidence(validate(&w1, cfg)?, &delta)?;
    Ok(EdgeConstruction {
        witness,
        epsilon1,
        w_delta,
        certificate,
    })
}

/// Iterates `W_n ~ W_{n-1} - eps_n (P_n + Q_n^{T_B})`, `P_n` (`Q_n`) the
/// projector orthogonal to `P_W` (to its partial conjugates) and `eps_n`
/// the ratio infimum, until `eps_n` vanishes; then continues with
/// [`optimize`] in nd mode.
pub fn edge_iteration(w1: &Witness, cfg: &OptimizeConfig) -> Result<(Witness, OptimizationTrace)> {
    let d = w1.op.dim();
    let mut cur = w1.clone();
    let mut trace = OptimizationTrace::new();
    for _ in 0..cfg.max_iterations {
        if cur.span_dimension() == d {
            trace.terminal_status = TerminalStatus::OptimalCertified;
            return Ok((cur, trace));
        }
        let joints: Vec<CVector> = cur.zero_set.iter().map(|z| z.joint.clone()).collect();
        let partners: Vec<CVector> = cur.zero_set.iter().map(|z| z.partial_conjugate().joint).collect();
        let p = linalg::complement_projector(&joints, d);
        let q = linalg::complement_projector(&partners, d);
        let rank = (linalg::trace(&p).re + linalg::trace(&q).re).round() as usize;
        let dop = cur.op.with_matrix(p).add(&cur.op.with_matrix(q).partial_transpose())?;
        let (eps, _) = search::min_product_ratio(&cur.op, &dop, &cfg.search)?;
        if !(eps > cfg.search.zero_tol) || !eps.is_finite() {
            break;
        }
        match subtract_with_backoff(&cur, &dop, eps, cfg, &mut trace)? {
            Some((next, lam)) => {
                trace.record(&next, lam, rank);
                cur = next;
            }
            None => break,
        }
    }
    let (out, rest) = optimize(&cur, Mode::Nd, cfg)?;
    let offset = trace.steps.len();
    trace.steps.extend(rest.steps.into_iter().map(|mut s| {
        s.iteration += offset;
        s
    }));
    trace.history.extend(rest.history);
    trace.notes.extend(rest.notes);
    trace.terminal_status = rest.terminal_status;
    Ok((out, trace))
}

/// PPT probe states: `rho~_b` on the nine-point grid, then `count` random
/// mixtures `p rho~_b + (1 - p) sigma` with `sigma` a random separable state.
pub fn probe_set(count: usize, seed: u64) -> Result<Vec<BipartiteOperator>> {
    let mut out = Vec::with_capacity(count + 9);
    for k in 1..=9 {
        out.push(states::rho_tilde(k as f64 / 10.0)?);
    }
    let mut rng = SearchConfig::with_seed(seed).rng(41);
    for _ in 0..count {
        let b = rng.random::<f64>();
        let p = rng.random::<f64>();
        let mut sep = BipartiteOperator::zeros(states::family::DIMS);
        let n = 1 + rng.random_range(0..8);
        for _ in 0..n {
            let e = search::haar_vector(2, &mut rng);
            let f = search::haar_vector(4, &mut rng);
            sep = sep.axpy(1.0 / n as f64, &ProductVector::new(&e, &f)?.projector())?;
        }
        out.push(states::rho_tilde(b)?.scale(p).axpy(1.0 - p, &sep)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::Dims;
    use crate::linalg::cr;

    fn fast_cfg() -> SearchConfig {
        SearchConfig {
            restarts: 16,
            grid_resolution: 41,
            ..Default::default()
        }
    }

    /// `(|01> - |10>)(<01| - <10|)^{T_B}`, trace-normalized.
    fn swap_witness() -> BipartiteOperator {
        let s = 1.0 / 2f64.sqrt();
        let psi = CVector::from_vec(vec![cr(0.0), cr(s), cr(-s), cr(0.0)]);
        BipartiteOperator::projector(Dims::new(2, 2), &psi)
            .unwrap()
            .partial_transpose()
            .trace_normalized()
            .unwrap()
    }

    #[test]
    fn maximally_mixed_is_not_a_witness() {
        let id = BipartiteOperator::identity(Dims::new(2, 2)).scale(0.25);
        assert!(matches!(validate(&id, &fast_cfg()), Err(Error::NotWitness(_))));
    }

    #[test]
    fn partial_transpose_of_singlet_is_a_witness() {
        let w = validate(&swap_witness(), &fast_cfg()).unwrap();
        assert!((w.op.trace_re() - 1.0).abs() < 1e-12);
        assert!(w.floor.abs() < 1e-10);
        assert!(!w.zero_set.is_empty());
    }

    #[test]
    fn negative_product_expectation_is_rejected() {
        let dims = Dims::new(2, 2);
        let op = BipartiteOperator::identity(dims).axpy(-2.0, &ProductVector::basis(dims, 0, 0).projector()).unwrap();
        assert!(matches!(validate(&op, &fast_cfg()), Err(Error::NotWitness(_))));
    }

    #[test]
    fn detects_maximally_entangled_not_product() {
        let w = validate(&swap_witness(), &fast_cfg()).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let psi = CVector::from_vec(vec![cr(0.0), cr(s), cr(-s), cr(0.0)]);
        let singlet = BipartiteOperator::projector(w.op.dims, &psi).unwrap();
        assert!(!detects(&w, &singlet).unwrap().detected);
        let phi = CVector::from_vec(vec![cr(s), cr(0.0), cr(0.0), cr(s)]);
        let det = detects(&w, &BipartiteOperator::projector(w.op.dims, &phi).unwrap()).unwrap();
        assert!(det.detected && (det.value + 0.5).abs() < 1e-12);
        let prod = ProductVector::basis(w.op.dims, 0, 1).projector();
        assert!(!detects(&w, &prod).unwrap().detected);
    }

    #[test]
    fn detects_rejects_non_psd_state() {
        let w = validate(&swap_witness(), &fast_cfg()).unwrap();
        assert!(matches!(detects(&w, &swap_witness()), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn zero_lambda_leaves_witness_unchanged() {
        let w = validate(&swap_witness(), &fast_cfg()).unwrap();
        let d = BipartiteOperator::identity(w.op.dims);
        let w2 = subtract(&w, &d, 0.0, &fast_cfg()).unwrap();
        assert_eq!(w2.op, w.op);
    }

    #[test]
    fn subtracting_operator_not_vanishing_on_zeros_is_rejected() {
        let w = validate(&swap_witness(), &fast_cfg()).unwrap();
        let d = BipartiteOperator::identity(w.op.dims).scale(0.25);
        assert!(matches!(subtract(&w, &d, 0.01, &fast_cfg()), Err(Error::Precondition(_))));
    }

    #[test]
    fn decomposable_start_is_stripped_toward_partial_transpose_part() {
        // Q a random rank-3 projector on C^2 (x) C^3: Q^T has finitely many
        // zeros, and P (the projector orthogonal to them) can be removed from
        // W = a P / 3 + (1 - a) Q^T at least up to lambda = a.
        let dims = Dims::new(2, 3);
        let mut rng = SearchConfig::with_seed(7).rng(0);
        let cols: Vec<CVector> = (0..3).map(|_| search::haar_vector(6, &mut rng)).collect();
        let basis = linalg::span_basis(&cols, 6);
        let q = BipartiteOperator::new(dims, &basis * basis.adjoint()).unwrap();
        let qt = validate(&q.partial_transpose().scale(1.0 / 3.0), &fast_cfg()).unwrap();
        assert_eq!(qt.zero_set.len(), 3);
        let joints: Vec<CVector> = qt.zero_set.iter().map(|z| z.joint.clone()).collect();
        let p = qt.op.with_matrix(linalg::complement_projector(&joints, 6)).scale(1.0 / 3.0);
        let a = 0.3;
        let w = validate(&qt.op.scale(1.0 - a).axpy(a, &p).unwrap(), &fast_cfg()).unwrap();
        assert_eq!(w.zero_set.len(), 3);
        let cfg = OptimizeConfig {
            search: fast_cfg(),
            max_iterations: 1,
            ..Default::default()
        };
        let (out, trace) = optimize(&w, Mode::General, &cfg).unwrap();
        assert_eq!(trace.steps.len(), 1, "{:?}", trace.notes);
        assert!(trace.steps[0].lambda >= a - 1e-8, "{:?}", trace.steps);
        // out = alpha Q^T + beta P exactly, with the P weight gone
        let lam = trace.steps[0].lambda;
        let alpha = (1.0 - a) / (1.0 - lam);
        let beta = (a - lam) / (1.0 - lam);
        let expect = qt.op.scale(alpha).axpy(beta, &p).unwrap();
        assert!(linalg::max_abs_diff(&out.op.matrix, &expect.matrix) < 1e-12);
        assert!(beta <= 1e-8);
        assert!(out.floor.abs() < 1e-8);
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let mut t = OptimizationTrace::new();
        let w = validate(&swap_witness(), &fast_cfg()).unwrap();
        t.record(&w, 0.25, 3);
        let csv = t.to_csv();
        assert!(csv.starts_with("iteration,lambda,rank,floor,zero_count\n"));
        assert_eq!(csv.lines().count(), 2);
    }
}
