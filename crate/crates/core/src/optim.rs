//! Small local solvers: Nelder-Mead simplex and Gauss-Newton.

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Initial simplex edge length.
    pub step: f64,
    /// Stop when every vertex is within `xatol` of the best one (max-norm).
    pub xatol: f64,
    /// ...and the spread of function values is below `fatol`.
    pub fatol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            step: 0.05,
            xatol: 1e-11,
            fatol: 1e-16,
            max_evals: 4000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Standard adaptive-free Nelder-Mead (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2). Non-finite values are treated as `+inf`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut evals = 0usize;
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.step;
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

    let mut converged = false;
    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&k| simplex[k].clone()).collect();
        values = order.iter().map(|&k| values[k]).collect();

        let spread_x = simplex[1..]
            .iter()
            .flat_map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0_f64, f64::max);
        let spread_f = (values[n] - values[0]).abs();
        if spread_x <= opts.xatol && spread_f <= opts.fatol.max(1e-300) {
            converged = true;
            break;
        }
        if spread_x <= opts.xatol * 1e-3 {
            // simplex collapsed on a plateau
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for x in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for k in 1..=n {
            for (xi, bi) in simplex[k].iter_mut().zip(&best) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            values[k] = eval(&simplex[k], &mut evals);
        }
    }

    let k = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    NelderMeadResult {
        x: simplex[k].clone(),
        value: values[k],
        evals,
        converged,
    }
}

/// Gauss-Newton for `r(x) = 0` from `x0`, with a central-difference
/// Jacobian and minimum-norm steps (SVD, relative cutoff `1e-10`). Steps that
/// do not reduce `|r|` end the iteration. Returns the final point and `|r|`.
pub fn gauss_newton<F>(r: F, x0: &[f64], max_iter: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut x = x0.to_vec();
    let mut res = r(&x);
    let mut rn = norm(&res);
    for _ in 0..max_iter {
        if rn < 1e-15 || n == 0 {
            break;
        }
        let m = res.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for k in 0..n {
            let h = 1e-7 * x[k].abs().max(1.0);
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let (rp, rm) = (r(&xp), r(&xm));
            for i in 0..m {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rhs = DMatrix::<f64>::from_fn(m, 1, |i, _| -res[i]);
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let Ok(step) = svd.solve(&rhs, 1e-10 * smax.max(1e-300)) else {
            break;
        };
        let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
        let rnew = r(&xn);
        let rnn = norm(&rnew);
        if !(rnn < rn) {
            break;
        }
        x = xn;
        res = rnew;
        rn = rnn;
    }
    (x, rn)
}
