//! Detection-range curves for witnesses built from `rho~_b`.
//!
//! For each seed parameter `b` the optimized witness `W_b` is compared
//! against the family (`b'`: largest `b~` with `rho~_{b~}` still detected)
//! and against white noise (`lambda`: largest `lambda` with
//! `rho~_b + lambda 1` still detected), once through `tr(W rho)` and once
//! through the extended map.

use rayon::prelude::*;

use crate::bipartite::BipartiteOperator;
use crate::error::Result;
use crate::maps;
use crate::states::{family::DIMS, rho_tilde};
use crate::witness::{self, OptimizeConfig, Witness};

/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_TOL: f64 = 1e-4;
/// Upper limit for the noise level searched by the map bisection.
pub const LAMBDA_CAP: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureRow {
    pub b: f64,
    pub bprime_witness: f64,
    pub bprime_map: f64,
    pub lambda_witness: f64,
    pub lambda_map: f64,
}

/// Which column group to fill.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    /// `b'` columns.
    Family,
    /// `lambda` columns.
    Noise,
}

/// Interior grid `k / (n + 1)`, `k = 1..=n`.
pub fn grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
}

/// Optimized witness seeded from `rho~_b`.
pub fn optimized_witness(b: f64, cfg: &OptimizeConfig) -> Result<Witness> {
    let built = witness::construct_from_edge(&rho_tilde(b)?, &cfg.search)?;
    Ok(witness::edge_iteration(&built.witness, cfg)?.0)
}

/// Largest point of `[lo, hi]` where `detected` holds, assuming it holds
/// at `lo`, fails at `hi`, and switches once.
fn bisect(mut lo: f64, mut hi: f64, detected: impl Fn(f64) -> Result<bool>) -> Result<f64> {
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if detected(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn noisy(b: f64, lambda: f64) -> Result<BipartiteOperator> {
    rho_tilde(b)?.add(&BipartiteOperator::identity(DIMS).scale(lambda))
}

pub fn bprime_witness(w: &Witness, b: f64) -> Result<f64> {
    bisect(b, 1.0, |t| Ok(witness::detects(w, &rho_tilde(t)?)?.detected))
}

pub fn bprime_map(w: &Witness, b: f64) -> Result<f64> {
    bisect(b, 1.0, |t| Ok(maps::map_detects(w, &rho_tilde(t)?)?.detected))
}

/// `-tr(W rho~_b)`, exact by linearity for `tr W = 1`.
pub fn lambda_witness(w: &Witness, b: f64) -> Result<f64> {
    Ok(-w.op.trace_with(&rho_tilde(b)?).re / w.op.trace_re())
}

pub fn lambda_map(w: &Witness, b: f64) -> Result<f64> {
    let detected = |l: f64| -> Result<bool> { Ok(maps::map_detects(w, &noisy(b, l)?)?.detected) };
    let lo = lambda_witness(w, b)?.max(0.0);
    let mut hi = (2.0 * lo).max(1e-3);
    while detected(hi)? {
        if hi >= LAMBDA_CAP {
            return Ok(hi);
        }
        hi = (2.0 * hi).min(LAMBDA_CAP);
    }
    if !detected(lo)? {
        return Ok(lo);
    }
    bisect(lo, hi, detected)
}

/// One row per grid point; grid points run in parallel.
pub fn compute(bs: &[f64], which: Option<Which>, cfg: &OptimizeConfig) -> Result<Vec<FigureRow>> {
    bs.par_iter()
        .map(|&b| {
            let w = optimized_witness(b, cfg)?;
            let family = which != Some(Which::Noise);
            let noise = which != Some(Which::Family);
            Ok(FigureRow {
                b,
                bprime_witness: if family { bprime_witness(&w, b)? } else { f64::NAN },
                bprime_map: if family { bprime_map(&w, b)? } else { f64::NAN },
                lambda_witness: if noise { lambda_witness(&w, b)? } else { f64::NAN },
                lambda_map: if noise { lambda_map(&w, b)? } else { f64::NAN },
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "b,bprime_witness,bprime_map,lambda_witness,lambda_map";

/// CSV text; `NaN` entries are left empty.
pub fn to_csv(rows: &[FigureRow]) -> String {
    let cell = |x: f64| if x.is_nan() { String::new() } else { format!("{x:.10}") };
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let cells = [r.b, r.bprime_witness, r.bprime_map, r.lambda_witness, r.lambda_map].map(cell);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_interior() {
        let g = grid(9);
        assert_eq!(g.len(), 9);
        assert!((g[0] - 0.1).abs() < 1e-15 && (g[8] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn bisect_finds_threshold() {
        let t = bisect(0.0, 1.0, |x| Ok(x <= 0.3141)).unwrap();
        assert!(t <= 0.3141 && 0.3141 - t < BISECTION_TOL);
    }

    #[test]
    fn csv_leaves_unselected_columns_empty() {
        let row = FigureRow {
            b: 0.5,
            bprime_witness: 0.6,
            bprime_map: 0.7,
            lambda_witness: f64::NAN,
            lambda_map: f64::NAN,
        };
        let csv = to_csv(&[row]);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.ends_with(",,"));
        assert_eq!(line.split(',').count(), 5);
    }
}
