//! Global searches over product vectors.
//!
//! Three quantities are computed here:
//!
//! * the floor `inf <e,f|W|e,f>` of an operator over product vectors,
//! * the zero set `P_W` of a witness,
//! * the largest `lambda` with `W - lambda D` still positive on product
//!   vectors (`lambda_0`), via the contractions `W_e = <e|W|e>`.
//!
//! Inner problems over `H_B` are solved exactly by Hermitian eigensolvers.
//! The outer problem over `|e> in H_A` is a multistart local search: a
//! see-saw over both factors in every dimension, plus, when `d_A = 2`, a
//! deterministic grid over the affine chart `|0> + alpha|1>` (and the point
//! at infinity `|1>`) refined by Nelder-Mead on the Bloch-sphere chart.
//! Results are upper bounds on the true infima; agreement between the grid
//! and the multistart is the only certificate offered.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{dedup_product_vectors, BipartiteOperator, ProductVector};
use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, CMatrix, CVector, REL_CUTOFF};
use crate::optim::{nelder_mead, NelderMeadOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Random see-saw starts.
    pub restarts: usize,
    pub max_sweeps: usize,
    /// See-saw stops once the value changes by less than this.
    pub value_tol: f64,
    /// Product expectations below this count as zeros.
    pub zero_tol: f64,
    /// Two product vectors with `|<u|v>|^2` above this are the same.
    pub dedup_fidelity: f64,
    /// Points per axis of the `alpha` grid (`d_A = 2` only).
    pub grid_resolution: usize,
    /// The grid covers `Re alpha, Im alpha in [-grid_extent, grid_extent]`.
    pub grid_extent: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 64,
            max_sweeps: 500,
            value_tol: 1e-12,
            zero_tol: 1e-8,
            dedup_fidelity: 1.0 - 1e-6,
            grid_resolution: 101,
            grid_extent: 4.0,
            seed: 0x5eed,
        }
    }
}

impl SearchConfig {
    pub fn with_seed(seed: u64) -> Self {
        SearchConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        for (name, v) in [
            ("value_tol", self.value_tol),
            ("zero_tol", self.zero_tol),
            ("dedup_fidelity", self.dedup_fidelity),
            ("grid_extent", self.grid_extent),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.grid_resolution < 2 {
            return Err(Error::InvalidParameter("grid_resolution must be at least 2".into()));
        }
        Ok(())
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

#[derive(Debug, Clone)]
pub struct MinimizationResult {
    pub value: f64,
    pub argmin: ProductVector,
    pub converged: bool,
    pub sweeps_used: usize,
}

// ---------------------------------------------------------------------------
// charts and sampling

/// Haar-random unit vector in `C^d`.
pub fn haar_vector(d: usize, rng: &mut ChaCha8Rng) -> CVector {
    loop {
        let v = CVector::from_fn(d, |_, _| {
            c(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
        });
        if let Ok(u) = linalg::normalized(&v) {
            return u;
        }
    }
}

/// Bloch-sphere chart `(cos(t/2), e^{ip} sin(t/2))`.
pub fn sphere_point(t: f64, p: f64) -> CVector {
    CVector::from_vec(vec![cr((t / 2.0).cos()), Complex64::from_polar((t / 2.0).sin(), p)])
}

/// Inverse of [`sphere_point`] up to global phase.
pub fn sphere_coords(e: &CVector) -> (f64, f64) {
    let a = e[0].norm().min(1.0);
    let t = 2.0 * a.acos();
    let p = if e[1].norm() < 1e-300 {
        0.0
    } else {
        e[1].arg() - if a > 0.0 { e[0].arg() } else { 0.0 }
    };
    (t, p)
}

/// `|0> + alpha|1>`, normalized.
pub fn alpha_point(alpha: Complex64) -> CVector {
    let n = (1.0 + alpha.norm_sqr()).sqrt();
    CVector::from_vec(vec![cr(1.0 / n), alpha / n])
}

pub fn point_at_infinity() -> CVector {
    CVector::from_vec(vec![cr(0.0), cr(1.0)])
}

/// Row-major `alpha` grid followed by the point at infinity.
pub fn alpha_grid(cfg: &SearchConfig) -> Vec<CVector> {
    let r = cfg.grid_resolution;
    let step = 2.0 * cfg.grid_extent / (r - 1) as f64;
    let mut pts = Vec::with_capacity(r * r + 1);
    for i in 0..r {
        for j in 0..r {
            let alpha = c(-cfg.grid_extent + step * i as f64, -cfg.grid_extent + step * j as f64);
            pts.push(alpha_point(alpha));
        }
    }
    pts.push(point_at_infinity());
    pts
}

/// Indices of grid points not exceeding any of their 8 neighbours, sorted by
/// value. The point at infinity (last index) is always included.
fn grid_local_minima(values: &[f64], r: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..r {
        for j in 0..r {
            let v = values[i * r + j];
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= r as i64 || nj >= r as i64 {
                        continue;
                    }
                    if values[ni as usize * r + nj as usize] < v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                out.push(i * r + j);
            }
        }
    }
    out.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    out.push(r * r);
    out
}

fn sphere_nm_options() -> NelderMeadOptions {
    NelderMeadOptions {
        step: 0.02,
        xatol: 1e-11,
        fatol: 1e-17,
        max_evals: 3000,
    }
}

/// Local minimization of `obj` over unit `e` in `C^2`, started at `e0`.
fn refine_on_sphere<F>(obj: &F, e0: &CVector) -> (f64, CVector)
where
    F: Fn(&CVector) -> f64,
{
    let (t0, p0) = sphere_coords(e0);
    let start_val = obj(e0);
    // near the poles the longitude is degenerate; nudge off them
    let t0 = t0.clamp(1e-3, std::f64::consts::PI - 1e-3);
    let r = nelder_mead(|x| obj(&sphere_point(x[0], x[1])), &[t0, p0], sphere_nm_options());
    let e = sphere_point(r.x[0], r.x[1]);
    if start_val <= r.value {
        (start_val, e0.clone())
    } else {
        (r.value, e)
    }
}

/// Local minimization of `obj` over unit `e` in `C^d` via an unnormalized
/// real parametrization.
fn refine_in_ambient<F>(obj: &F, e0: &CVector) -> (f64, CVector)
where
    F: Fn(&CVector) -> f64,
{
    let d = e0.len();
    let to_vec = |x: &[f64]| CVector::from_fn(d, |i, _| c(x[2 * i], x[2 * i + 1]));
    let x0: Vec<f64> = e0.iter().flat_map(|z| [z.re, z.im]).collect();
    let eval = |x: &[f64]| match linalg::normalized(&to_vec(x)) {
        Ok(e) => obj(&e),
        Err(_) => f64::INFINITY,
    };
    let r = nelder_mead(
        eval,
        &x0,
        NelderMeadOptions {
            step: 0.05,
            xatol: 1e-10,
            fatol: 1e-17,
            max_evals: 3000 * d,
        },
    );
    match linalg::normalized(&to_vec(&r.x)) {
        Ok(e) if r.value < obj(e0) => (r.value, e),
        _ => (obj(e0), e0.clone()),
    }
}

/// Local minimization over unit `|e>` from a single start.
pub(crate) fn refine_from<F>(obj: &F, e0: &CVector) -> (f64, CVector)
where
    F: Fn(&CVector) -> f64,
{
    if e0.len() == 2 {
        refine_on_sphere(obj, e0)
    } else {
        refine_in_ambient(obj, e0)
    }
}

/// Starting points for a multistart over `|e> in H_A`.
///
/// `d_A = 2`: the lowest local minima of `obj` on the alpha grid (at most
/// `max_candidates`) plus the point at infinity. Otherwise: `cfg.restarts`
/// Haar-random vectors.
fn multistart_points<F>(dim_a: usize, cfg: &SearchConfig, stream: u64, obj: &F, max_candidates: usize) -> Vec<CVector>
where
    F: Fn(&CVector) -> f64 + Sync,
{
    if dim_a == 2 {
        let grid = alpha_grid(cfg);
        let values: Vec<f64> = grid.par_iter().map(obj).collect();
        let minima = grid_local_minima(&values, cfg.grid_resolution);
        let mut starts: Vec<CVector> = minima.iter().take(max_candidates).map(|&k| grid[k].clone()).collect();
        if let Some(&inf_idx) = minima.last() {
            starts.push(grid[inf_idx].clone());
        }
        starts
    } else {
        let mut rng = cfg.rng(stream);
        (0..cfg.restarts).map(|_| haar_vector(dim_a, &mut rng)).collect()
    }
}

/// Every refined local minimum from the multistart, in start order.
pub(crate) fn local_minima_over_e<F>(
    dim_a: usize,
    cfg: &SearchConfig,
    stream: u64,
    obj: F,
    extra_starts: &[CVector],
    max_candidates: usize,
) -> Vec<(f64, CVector)>
where
    F: Fn(&CVector) -> f64 + Sync,
{
    let mut starts: Vec<CVector> = extra_starts.to_vec();
    starts.extend(multistart_points(dim_a, cfg, stream, &obj, max_candidates));
    starts
        .par_iter()
        .map(|e| refine_from(&obj, e))
        .filter(|(v, _)| !v.is_nan())
        .collect()
}

/// Multistart minimization of a function of `|e> in H_A`; extra starts are
/// always refined too.
pub(crate) fn minimize_over_e<F>(
    dim_a: usize,
    cfg: &SearchConfig,
    stream: u64,
    obj: F,
    extra_starts: &[CVector],
    max_candidates: usize,
) -> (f64, CVector)
where
    F: Fn(&CVector) -> f64 + Sync,
{
    local_minima_over_e(dim_a, cfg, stream, obj, extra_starts, max_candidates)
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or_else(|| (f64::INFINITY, point_at_infinity()))
}

// ---------------------------------------------------------------------------
// floor and see-saw

/// `lambda_min(<e|W|e>)` and its eigenvector.
pub(crate) fn inner_min(w: &BipartiteOperator, e: &CVector) -> (f64, CVector) {
    linalg::min_eigpair(linalg::hermitian_part(&w.contract_a_unchecked(e)))
}

fn inner_min_b(w: &BipartiteOperator, f: &CVector) -> (f64, CVector) {
    linalg::min_eigpair(linalg::hermitian_part(&w.contract_b_unchecked(f)))
}

struct SeeSawRun {
    value: f64,
    e: CVector,
    f: CVector,
    sweeps: usize,
    converged: bool,
}

fn see_saw(w: &BipartiteOperator, e0: &CVector, max_sweeps: usize, tol: f64) -> SeeSawRun {
    let mut e = e0.clone();
    let (mut value, mut f) = inner_min(w, &e);
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let (_, e_new) = inner_min_b(w, &f);
        e = e_new;
        let (v_new, f_new) = inner_min(w, &e);
        f = f_new;
        let delta = (value - v_new).abs();
        value = v_new;
        if delta < tol {
            converged = true;
            break;
        }
    }
    SeeSawRun {
        value,
        e,
        f,
        sweeps,
        converged,
    }
}

fn check_hermitian(w: &BipartiteOperator) -> Result<BipartiteOperator> {
    w.hermitian()
}

/// Floor `inf <e,f|W|e,f>` over product vectors (an upper bound certified as
/// a local minimum).
pub fn min_product_expectation(w: &BipartiteOperator, cfg: &SearchConfig) -> Result<MinimizationResult> {
    cfg.validate()?;
    let w = check_hermitian(w)?;
    let mut rng = cfg.rng(1);
    let starts: Vec<CVector> = (0..cfg.restarts).map(|_| haar_vector(w.dims.a, &mut rng)).collect();
    let mut runs: Vec<SeeSawRun> = starts
        .par_iter()
        .map(|e| see_saw(&w, e, cfg.max_sweeps, cfg.value_tol))
        .collect();

    if w.dims.a == 2 {
        let (_, e) = minimize_over_e(2, cfg, 2, |e| inner_min(&w, e).0, &[], 8);
        runs.push(see_saw(&w, &e, cfg.max_sweeps, cfg.value_tol));
    }

    let best = runs
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one run");
    let argmin = polish_stationary(&w, &ProductVector::new(&best.e, &best.f)?);
    let polished = w.product_expectation(&argmin);
    let (argmin, value) = if polished <= best.value {
        (argmin, polished)
    } else {
        let v = ProductVector::new(&best.e, &best.f)?;
        let val = w.product_expectation(&v);
        (v, val)
    };
    Ok(MinimizationResult {
        value,
        argmin,
        converged: best.converged,
        sweeps_used: best.sweeps,
    })
}

// ---------------------------------------------------------------------------
// Gauss-Newton polishing of stationary points

pub(crate) fn complement_basis(v: &CVector) -> CMatrix {
    let d = v.len();
    let p = linalg::identity(d) - linalg::outer(v, v);
    let ed = linalg::eig_symmetrized(linalg::hermitian_part(&p));
    ed.columns_where(|l| l > 0.5)
}

fn stationarity_residual(w: &BipartiteOperator, e: &CVector, f: &CVector) -> Vec<f64> {
    let we = w.contract_a_unchecked(e);
    let wf = w.contract_b_unchecked(f);
    let value = f.dotc(&(&we * f)).re;
    let rb = &we * f - f.scale(value);
    let ra = &wf * e - e.scale(value);
    rb.iter().chain(ra.iter()).flat_map(|z| [z.re, z.im]).collect()
}

fn residual_norm(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Drives a near-stationary product vector onto the exact stationarity
/// conditions `W_e f = v f`, `W_f e = v e` by Gauss-Newton.
pub(crate) fn polish_stationary(w: &BipartiteOperator, v: &ProductVector) -> ProductVector {
    let (da, db) = (w.dims.a, w.dims.b);
    let mut e = v.e.clone();
    let mut f = v.f.clone();
    let mut r = stationarity_residual(w, &e, &f);
    let mut rn = residual_norm(&r);
    let n_e = 2 * (da - 1);
    let n_f = 2 * (db - 1);
    let n = n_e + n_f;
    if n == 0 {
        return v.clone();
    }
    for _ in 0..30 {
        if rn < 1e-15 {
            break;
        }
        let be = complement_basis(&e);
        let bf = complement_basis(&f);
        let at = |x: &[f64]| -> (CVector, CVector) {
            let mut ee = e.clone();
            for k in 0..da - 1 {
                ee += be.column(k) * c(x[2 * k], x[2 * k + 1]);
            }
            let mut ff = f.clone();
            for k in 0..db - 1 {
                ff += bf.column(k) * c(x[n_e + 2 * k], x[n_e + 2 * k + 1]);
            }
            (ee.unscale(ee.norm()), ff.unscale(ff.norm()))
        };
        let h = 1e-7;
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[k] = h;
            let (ep, fp) = at(&x);
            x[k] = -h;
            let (em, fm) = at(&x);
            x[k] = 0.0;
            let rp = stationarity_residual(w, &ep, &fp);
            let rm = stationarity_residual(w, &em, &fm);
            for i in 0..m {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rhs = DMatrix::<f64>::from_fn(m, 1, |i, _| -r[i]);
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let step = match svd.solve(&rhs, 1e-10 * smax.max(1e-300)) {
            Ok(s) => s,
            Err(_) => break,
        };
        let xs: Vec<f64> = step.iter().copied().collect();
        let (en, fnew) = at(&xs);
        let rnew = stationarity_residual(w, &en, &fnew);
        let rnn = residual_norm(&rnew);
        if !(rnn < rn) {
            break;
        }
        e = en;
        f = fnew;
        r = rnew;
        rn = rnn;
    }
    ProductVector::new(&e, &f).unwrap_or_else(|_| v.clone())
}

// ---------------------------------------------------------------------------
// zero set

fn det_re(m: &CMatrix) -> f64 {
    m.clone().determinant().re
}

struct Candidate {
    value: f64,
    vectors: Vec<ProductVector>,
}

fn refine_candidate(w: &BipartiteOperator, e0: &CVector, cfg: &SearchConfig) -> Result<Candidate> {
    let e = if w.dims.a == 2 {
        refine_from(&|e: &CVector| inner_min(w, e).0, e0).1
    } else {
        e0.clone()
    };
    let (_, f) = inner_min(w, &e);
    let v = polish_stationary(w, &ProductVector::new(&e, &f)?);
    let value = w.product_expectation(&v);
    let mut vectors = vec![v.clone()];
    if value < cfg.zero_tol {
        // degenerate kernels of W_e: every kernel direction is a zero
        let ed = linalg::eig_symmetrized(linalg::hermitian_part(&w.contract_a_unchecked(&v.e)));
        for k in 1..ed.eigenvalues.len() {
            if ed.eigenvalues[k] < cfg.zero_tol {
                vectors.push(ProductVector::new(&v.e, &ed.vector(k))?);
            }
        }
    }
    Ok(Candidate { value, vectors })
}

/// `P_W`: deduplicated product vectors with `<e,f|W|e,f> < zero_tol`.
///
/// Rejects `W` as a non-witness when a product expectation below
/// `-zero_tol` turns up.
pub fn zero_set(w: &BipartiteOperator, cfg: &SearchConfig) -> Result<Vec<ProductVector>> {
    cfg.validate()?;
    let w = check_hermitian(w)?;
    let mut starts: Vec<CVector> = Vec::new();
    if w.dims.a == 2 {
        let grid = alpha_grid(cfg);
        let dets: Vec<f64> = grid
            .par_iter()
            .map(|e| det_re(&linalg::hermitian_part(&w.contract_a_unchecked(e))))
            .collect();
        let minima = grid_local_minima(&dets, cfg.grid_resolution);
        starts.extend(minima.iter().take(64).map(|&k| grid[k].clone()));
    }
    let mut rng = cfg.rng(3);
    let seeds: Vec<CVector> = (0..cfg.restarts).map(|_| haar_vector(w.dims.a, &mut rng)).collect();
    let ends: Vec<CVector> = seeds
        .par_iter()
        .map(|e| see_saw(&w, e, cfg.max_sweeps, cfg.value_tol).e)
        .collect();
    starts.extend(ends);

    let candidates: Vec<Result<Candidate>> = starts.par_iter().map(|e| refine_candidate(&w, e, cfg)).collect();
    let mut found = Vec::new();
    for cand in candidates {
        let cand = cand?;
        if cand.value < -cfg.zero_tol {
            return Err(Error::NotWitness(format!(
                "product expectation {:.3e} below -{:.1e}",
                cand.value, cfg.zero_tol
            )));
        }
        if cand.value < cfg.zero_tol {
            found.extend(cand.vectors);
        }
    }
    Ok(dedup_product_vectors(found, cfg.dedup_fidelity))
}

/// Rank of the span of the joint vectors (relative cutoff of `linalg`).
pub fn span_dimension(vectors: &[ProductVector]) -> usize {
    match vectors.first() {
        None => 0,
        Some(v) => {
            let joints: Vec<CVector> = vectors.iter().map(|v| v.joint.clone()).collect();
            linalg::span_basis(&joints, v.joint.len()).ncols()
        }
    }
}

// ---------------------------------------------------------------------------
// contraction ratio lambda_0

/// Largest `lambda` with `W_e - lambda D_e >= 0`, from the spectrum of
/// `W_e^{-1/2} D_e W_e^{-1/2}` (pseudo-inverse on the range of `W_e`).
/// Returns the maximizing `f` alongside; `+inf` when `D_e` vanishes on the
/// range of `W_e`, `0` when `D_e` leaks into the kernel of `W_e`.
pub(crate) fn ratio_dual_at(w: &BipartiteOperator, d: &BipartiteOperator, e: &CVector) -> (f64, CVector) {
    let we = linalg::hermitian_part(&w.contract_a_unchecked(e));
    let de = linalg::hermitian_part(&d.contract_a_unchecked(e));
    ratio_dual_matrices(&we, &de)
}

fn ratio_dual_matrices(we: &CMatrix, de: &CMatrix) -> (f64, CVector) {
    let ed = linalg::eig_symmetrized(we.clone());
    let scale = ed.max_abs().max(linalg::max_abs(de)).max(1e-300);
    let cut = REL_CUTOFF * scale;
    let kernel = ed.columns_where(|l| l <= cut);
    if kernel.ncols() > 0 {
        let leak = linalg::max_abs(&(kernel.adjoint() * de * &kernel));
        if leak > 1e-7 * linalg::max_abs(de).max(1e-300) && leak > 1e-13 {
            return (0.0, kernel.column(0).into_owned());
        }
    }
    let s = ed.spectral_map(|l| if l > cut { 1.0 / l.sqrt() } else { 0.0 });
    let m = linalg::hermitian_part(&(&s * de * &s));
    let em = linalg::eig_symmetrized(m);
    let mu = em.max();
    let g = em.vector(em.eigenvalues.len() - 1);
    let f = &s * g;
    let f = linalg::normalized(&f).unwrap_or_else(|_| ed.vector(0));
    if mu <= 1e-14 * scale {
        (f64::INFINITY, f)
    } else {
        (1.0 / mu, f)
    }
}

/// Same quantity from the `D_e^{-1/2} W_e D_e^{-1/2}` side. On a singular
/// `D_e` the compression of `W_e` onto the range of `D_e` is replaced by its
/// Schur complement against the kernel of `D_e`, which keeps the value equal
/// to the dual form.
pub(crate) fn ratio_primal_at(w: &BipartiteOperator, d: &BipartiteOperator, e: &CVector) -> f64 {
    let we = linalg::hermitian_part(&w.contract_a_unchecked(e));
    let de = linalg::hermitian_part(&d.contract_a_unchecked(e));
    let ed = linalg::eig_symmetrized(de);
    let scale = ed.max_abs().max(1e-300);
    let cut = REL_CUTOFF * scale.max(linalg::max_abs(&we));
    let r = ed.columns_where(|l| l > cut);
    if r.ncols() == 0 {
        return f64::INFINITY;
    }
    let k = ed.columns_where(|l| l <= cut);
    let w_rr = r.adjoint() * &we * &r;
    let w_eff = if k.ncols() > 0 {
        let w_rk = r.adjoint() * &we * &k;
        let w_kk = linalg::hermitian_part(&(k.adjoint() * &we * &k));
        let kk = linalg::eig_symmetrized(w_kk);
        let kcut = REL_CUTOFF * kk.max_abs().max(linalg::max_abs(&we)).max(1e-300);
        let pinv = kk.spectral_map(|l| if l.abs() > kcut { 1.0 / l } else { 0.0 });
        &w_rr - &w_rk * pinv * w_rk.adjoint()
    } else {
        w_rr
    };
    let dr: Vec<f64> = ed.eigenvalues.iter().copied().filter(|&l| l > cut).collect();
    let n = dr.len();
    let m = CMatrix::from_fn(n, n, |i, j| w_eff[(i, j)] / (dr[i] * dr[j]).sqrt());
    linalg::eig_symmetrized(linalg::hermitian_part(&m)).min()
}

#[derive(Debug, Clone)]
pub struct RatioResult {
    /// `min(primal, dual)`; `+inf` when nothing constrains the subtraction.
    pub lambda0: f64,
    pub primal: f64,
    pub dual: f64,
    /// Product vector attaining (or approaching) the infimum.
    pub argmin: Option<ProductVector>,
}

/// `lambda_0` with a guard that `D` vanishes on the supplied zero set.
pub fn contraction_ratio(
    w: &BipartiteOperator,
    d: &BipartiteOperator,
    zeros: &[ProductVector],
    cfg: &SearchConfig,
) -> Result<RatioResult> {
    cfg.validate()?;
    let w = check_hermitian(w)?;
    let d = check_hermitian(d)?;
    w.same_dims(&d)?;
    let dscale = linalg::max_abs(&d.matrix).max(1.0);
    for z in zeros {
        let dz = d.product_expectation(z);
        if dz.abs() > cfg.zero_tol * dscale {
            return Err(Error::Precondition(format!(
                "subtracted operator does not vanish on the zero set (<v|D|v> = {dz:.3e}); it cannot be subtracted"
            )));
        }
    }
    let extra: Vec<CVector> = zeros.iter().map(|z| z.e.clone()).collect();
    let (dual, e_dual) = minimize_over_e(w.dims.a, cfg, 11, |e| ratio_dual_at(&w, &d, e).0, &extra, 24);
    let (primal, _) = minimize_over_e(w.dims.a, cfg, 12, |e| ratio_primal_at(&w, &d, e), &extra, 24);
    if primal < -cfg.zero_tol {
        return Err(Error::Precondition(format!(
            "contraction ratio {primal:.3e} is negative: operator is not positive on product vectors"
        )));
    }
    let lambda0 = primal.min(dual).max(0.0);
    if lambda0.is_finite() {
        let gap = (primal - dual).abs();
        if !(gap <= 1e-6 * lambda0.abs().max(1.0)) {
            return Err(Error::Tolerance(format!(
                "primal and dual forms of lambda_0 disagree: {primal:.9e} vs {dual:.9e}"
            )));
        }
    }
    let argmin = if dual.is_finite() {
        let (_, f) = ratio_dual_at(&w, &d, &e_dual);
        ProductVector::new(&e_dual, &f).ok()
    } else {
        None
    };
    Ok(RatioResult {
        lambda0,
        primal,
        dual,
        argmin,
    })
}

/// `lambda_0 = inf_e [D_e^{-1/2} W_e D_e^{-1/2}]_min`; computes `P_W` itself
/// for the precondition guard.
pub fn min_contraction_ratio(w: &BipartiteOperator, d: &BipartiteOperator, cfg: &SearchConfig) -> Result<f64> {
    let zeros = zero_set(w, cfg)?;
    Ok(contraction_ratio(w, d, &zeros, cfg)?.lambda0)
}

/// `inf <e,f|W|e,f> / <e,f|D|e,f>` over product vectors with a non-vanishing
/// denominator: see-saw on the ratio (each half-step a generalized
/// eigenproblem), plus the `alpha` grid when `d_A = 2`.
pub fn min_product_ratio(
    w: &BipartiteOperator,
    d: &BipartiteOperator,
    cfg: &SearchConfig,
) -> Result<(f64, Option<ProductVector>)> {
    cfg.validate()?;
    let w = check_hermitian(w)?;
    let d = check_hermitian(d)?;
    w.same_dims(&d)?;
    let mut rng = cfg.rng(21);
    let seeds: Vec<CVector> = (0..cfg.restarts).map(|_| haar_vector(w.dims.a, &mut rng)).collect();
    let ratio_b = |f: &CVector| {
        let wf = linalg::hermitian_part(&w.contract_b_unchecked(f));
        let df = linalg::hermitian_part(&d.contract_b_unchecked(f));
        ratio_dual_matrices(&wf, &df)
    };
    let runs: Vec<(f64, CVector, CVector)> = seeds
        .par_iter()
        .map(|e0| {
            let mut e = e0.clone();
            let (mut val, mut f) = ratio_dual_at(&w, &d, &e);
            for _ in 0..cfg.max_sweeps {
                if !val.is_finite() || val <= 0.0 {
                    break;
                }
                let (_, e_new) = ratio_b(&f);
                let (v_new, f_new) = ratio_dual_at(&w, &d, &e_new);
                if !(v_new <= val) {
                    break;
                }
                let delta = val - v_new;
                e = e_new;
                f = f_new;
                val = v_new;
                if delta < cfg.value_tol {
                    break;
                }
            }
            (val, e, f)
        })
        .collect();
    let mut best = runs
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one restart");
    if w.dims.a == 2 {
        let (v, e) = minimize_over_e(2, cfg, 22, |e| ratio_dual_at(&w, &d, e).0, &[best.1.clone()], 24);
        if v < best.0 {
            let (_, f) = ratio_dual_at(&w, &d, &e);
            best = (v, e, f);
        }
    }
    let arg = if best.0.is_finite() {
        ProductVector::new(&best.1, &best.2).ok()
    } else {
        None
    };
    Ok((best.0, arg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::Dims;

    fn singlet_projector() -> BipartiteOperator {
        let s = 1.0 / 2f64.sqrt();
        let psi = CVector::from_vec(vec![cr(0.0), cr(s), cr(-s), cr(0.0)]);
        BipartiteOperator::projector(Dims::new(2, 2), &psi).unwrap()
    }

    fn fast_cfg() -> SearchConfig {
        SearchConfig {
            restarts: 16,
            grid_resolution: 41,
            ..Default::default()
        }
    }

    #[test]
    fn identity_floor_is_one() {
        let id = BipartiteOperator::identity(Dims::new(2, 3));
        let r = min_product_expectation(&id, &fast_cfg()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!((id.product_expectation(&r.argmin) - r.value).abs() < 1e-10);
    }

    #[test]
    fn singlet_floor_is_zero() {
        let w = singlet_projector();
        let r = min_product_expectation(&w, &fast_cfg()).unwrap();
        assert!(r.value.abs() < 1e-12, "{}", r.value);
        // |0,0> is a minimizer
        let v = ProductVector::basis(Dims::new(2, 2), 0, 0);
        assert!(w.product_expectation(&v).abs() < 1e-15);
    }

    #[test]
    fn floor_bounded_by_min_eigenvalue() {
        let w = singlet_projector().partial_transpose();
        let r = min_product_expectation(&w, &fast_cfg()).unwrap();
        let lmin = w.min_eigenvalue().unwrap();
        assert!(r.value >= lmin - 1e-12);
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn zero_set_of_identity_is_empty() {
        let id = BipartiteOperator::identity(Dims::new(2, 2));
        assert!(zero_set(&id, &fast_cfg()).unwrap().is_empty());
    }

    #[test]
    fn zero_set_contains_orthogonal_basis_vector() {
        let dims = Dims::new(2, 3);
        let v00 = ProductVector::basis(dims, 0, 0);
        let w = BipartiteOperator::identity(dims).sub(&v00.projector()).unwrap();
        let zs = zero_set(&w, &fast_cfg()).unwrap();
        assert_eq!(zs.len(), 1);
        assert!(zs[0].fidelity(&v00) > 1.0 - 1e-10);
    }

    #[test]
    fn zero_set_rejects_negative_product_expectation() {
        let dims = Dims::new(2, 2);
        let w = BipartiteOperator::identity(dims).axpy(-2.0, &ProductVector::basis(dims, 1, 1).projector()).unwrap();
        assert!(matches!(zero_set(&w, &fast_cfg()), Err(Error::NotWitness(_))));
    }

    #[test]
    fn span_dimension_examples() {
        assert_eq!(span_dimension(&[]), 0);
        let v = ProductVector::basis(Dims::new(2, 2), 0, 0);
        assert_eq!(span_dimension(&[v.clone(), v]), 1);
        let all: Vec<_> = (0..2)
            .flat_map(|i| (0..3).map(move |m| ProductVector::basis(Dims::new(2, 3), i, m)))
            .collect();
        assert_eq!(span_dimension(&all), 6);
    }

    #[test]
    fn ratio_of_operator_with_itself_is_one() {
        let dims = Dims::new(2, 2);
        let w = BipartiteOperator::identity(dims).axpy(0.5, &singlet_projector()).unwrap();
        let r = contraction_ratio(&w, &w, &[], &fast_cfg()).unwrap();
        assert!((r.lambda0 - 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn ratio_guard_rejects_non_annihilating_operator() {
        let dims = Dims::new(2, 2);
        let w = singlet_projector();
        let zeros = vec![ProductVector::basis(dims, 0, 0)];
        let d = BipartiteOperator::identity(dims).scale(0.25);
        assert!(matches!(
            contraction_ratio(&w, &d, &zeros, &fast_cfg()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn ratio_sentinel_for_vanishing_operator() {
        let dims = Dims::new(2, 2);
        let w = BipartiteOperator::identity(dims);
        let d = BipartiteOperator::zeros(dims);
        let r = contraction_ratio(&w, &d, &[], &fast_cfg()).unwrap();
        assert!(r.lambda0.is_infinite());
    }

    #[test]
    fn primal_and_dual_agree_pointwise_on_singular_d() {
        // W_e = [[1, c], [c, 1]], D_e = diag(1, 0): exact answer 1 - c^2.
        let dims = Dims::new(1, 2);
        let cc = 0.3;
        let w = BipartiteOperator::new(dims, CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(cc), cr(cc), cr(1.0)])).unwrap();
        let d = BipartiteOperator::new(dims, linalg::diag(&[1.0, 0.0])).unwrap();
        let e = CVector::from_vec(vec![cr(1.0)]);
        let (dual, _) = ratio_dual_at(&w, &d, &e);
        let primal = ratio_primal_at(&w, &d, &e);
        assert!((dual - (1.0 - cc * cc)).abs() < 1e-12);
        assert!((primal - (1.0 - cc * cc)).abs() < 1e-12);
    }

    #[test]
    fn sphere_chart_round_trip() {
        for &(t, p) in &[(0.3, 1.2), (2.0, -0.7), (1.0, 3.0)] {
            let e = sphere_point(t, p);
            let (t2, p2) = sphere_coords(&e);
            let e2 = sphere_point(t2, p2);
            assert!((e.dotc(&e2).norm() - 1.0).abs() < 1e-12);
        }
    }
}
