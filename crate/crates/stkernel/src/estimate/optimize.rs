use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Relative spread of simplex objective values that counts as converged.
    pub tol: f64,
    pub restarts: usize,
    /// Initial simplex edge in log coordinates.
    pub step: f64,
    /// Factor applied to the simplex edge at each restart.
    pub shrink: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 10_000,
            tol: 1e-4,
            restarts: 3,
            step: 0.3,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` over the box [lower, upper] (all bounds positive) with
/// Nelder-Mead in log coordinates; trial points are clamped to the box.
///
/// After convergence the search restarts from the best point with a smaller
/// simplex; it stops once a restart improves by less than `tol` relatively.
/// The returned value never exceeds f(x0).
pub fn minimize_log_box(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    let lo: Vec<f64> = lower.iter().map(|v| v.ln()).collect();
    let hi: Vec<f64> = upper.iter().map(|v| v.ln()).collect();
    let clamp = |u: &mut [f64]| {
        for i in 0..u.len() {
            u[i] = u[i].clamp(lo[i], hi[i]);
        }
    };
    let mut evals = 0usize;
    let mut eval = |u: &[f64], evals: &mut usize| {
        *evals += 1;
        let x: Vec<f64> = u.iter().map(|v| v.exp()).collect();
        let v = f(&x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best: Vec<f64> = x0.iter().map(|v| v.ln()).collect();
    clamp(&mut best);
    let mut best_val = eval(&best, &mut evals);
    let mut step = opts.step;
    let mut converged = false;

    for _ in 0..=opts.restarts {
        let start_val = best_val;
        let mut simplex: Vec<Vec<f64>> = vec![best.clone()];
        let mut vals = vec![best_val];
        for i in 0..n {
            let mut u = best.clone();
            u[i] += step;
            if u[i] > hi[i] {
                u[i] = best[i] - step;
            }
            clamp(&mut u);
            vals.push(eval(&u, &mut evals));
            simplex.push(u);
        }
        let mut local_converged = false;
        while evals < opts.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();
            let spread = (vals[n] - vals[0]).abs();
            if spread <= opts.tol * vals[0].abs().max(f64::MIN_POSITIVE) {
                local_converged = true;
                break;
            }
            let mut centroid = vec![0.0; n];
            for p in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c += v / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                let mut u: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[n])
                    .map(|(c, w)| c + t * (c - w))
                    .collect();
                for i in 0..n {
                    u[i] = u[i].clamp(lo[i], hi[i]);
                }
                u
            };
            let xr = along(1.0);
            let fr = eval(&xr, &mut evals);
            if fr < vals[0] {
                let xe = along(2.0);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    simplex[n] = xe;
                    vals[n] = fe;
                } else {
                    simplex[n] = xr;
                    vals[n] = fr;
                }
            } else if fr < vals[n - 1] {
                simplex[n] = xr;
                vals[n] = fr;
            } else {
                let (xc, fc) = if fr < vals[n] {
                    let xc = along(0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = along(-0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < vals[n].min(fr) {
                    simplex[n] = xc;
                    vals[n] = fc;
                } else {
                    for i in 1..=n {
                        let u: Vec<f64> = simplex[0]
                            .iter()
                            .zip(&simplex[i])
                            .map(|(a, b)| a + 0.5 * (b - a))
                            .collect();
                        vals[i] = eval(&u, &mut evals);
                        simplex[i] = u;
                    }
                }
            }
        }
        let (imin, &vmin) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty simplex");
        if vmin < best_val {
            best = simplex[imin].clone();
            best_val = vmin;
        }
        converged = local_converged;
        if evals >= opts.max_evals {
            break;
        }
        let gain = (start_val - best_val) / best_val.abs().max(f64::MIN_POSITIVE);
        if local_converged && gain < opts.tol {
            break;
        }
        step *= opts.shrink;
    }
    Minimum {
        x: best.iter().map(|v| v.exp()).collect(),
        value: best_val,
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum_in_log_space() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            tol: 1e-12,
            ..Default::default()
        };
        let m = minimize_log_box(f, &[0.3, 2.0], &[1e-3, 1e-3], &[10.0, 10.0], &opts);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 2e-3,
            "{m:?}"
        );
    }

    #[test]
    fn respects_bounds_and_never_worsens() {
        let f = |x: &[f64]| (x[0] - 5.0).powi(2);
        let m = minimize_log_box(f, &[1.0], &[0.5], &[2.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 2.0).abs() < 1e-6);
        assert!(m.value <= 16.0);
    }
}
