//! Self-verification of a model: spectral admissibility, closed form against
//! the quadrature oracle, the generating ODE and Gram positivity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use stkernel::gp::{gram, SpaceTimePoint};
use stkernel::spectral::{
    admissibility_scan, ode_residual, oracle_kernel, AdmissibilityReport, QuadratureSpec,
    SpectralModel,
};
use stkernel::{BaseKernel, KernelModel, SpaceTimeCovariance};

use crate::error::CliError;

/// Overridable tolerances and sample sizes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub oracle_points: usize,
    /// Allowed |closed - oracle| relative to C(0, 0).
    pub oracle_rel: f64,
    /// Allowed |closed - oracle| as a multiple of the oracle error estimate.
    pub oracle_error_factor: f64,
    /// Finest step of the ODE residual; the coarse step is twice this.
    pub ode_h: f64,
    /// Accepted band around 2 for the measured convergence order.
    pub ode_order_band: f64,
    pub psd_points: usize,
    /// Allowed min eigenvalue as a (negative) fraction of the trace.
    pub psd_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            oracle_points: 25,
            oracle_rel: 1e-6,
            oracle_error_factor: 5.0,
            ode_h: 2.5e-3,
            ode_order_band: 0.4,
            psd_points: 300,
            psd_rel: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub points: usize,
    /// Largest |closed - oracle| divided by its allowance.
    pub worst_ratio: f64,
    pub worst_r: f64,
    pub worst_tau: f64,
    pub worst_closed: f64,
    pub worst_oracle: f64,
    pub worst_error_estimate: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OdePoint {
    pub tau: f64,
    pub residual_coarse: f64,
    pub residual_fine: f64,
    pub order: f64,
    /// Whether the fine residual is already at the rounding floor.
    pub at_roundoff: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeCheck {
    pub h_fine: f64,
    pub points: Vec<OdePoint>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PsdCheck {
    pub points: usize,
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelChecks {
    pub name: String,
    pub model: serde_json::Value,
    pub admissibility: AdmissibilityReport,
    pub oracle: OracleCheck,
    /// Absent for kernels without an oscillator equation.
    pub ode: Option<OdeCheck>,
    pub psd: PsdCheck,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChecksReport {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub models: Vec<ModelChecks>,
    pub pass: bool,
}

/// Lags where |C_S| and |C_T| first fall below 5% of C(0, 0), found on a
/// geometric scan; used to place sample points.
fn lag_scales(m: &KernelModel<f64>) -> (f64, f64) {
    let c0 = m.variance();
    let first_below = |f: &dyn Fn(f64) -> f64| {
        let mut x = 1e-3;
        for _ in 0..400 {
            if f(x).abs() <= 0.05 * c0 {
                return x;
            }
            x *= 1.05;
        }
        x
    };
    (
        first_below(&|r| m.marginal_spatial(r)),
        first_below(&|t| m.marginal_temporal(t)),
    )
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn check_oracle(
    m: &KernelModel<f64>,
    scales: (f64, f64),
    tol: &Tolerances,
    rng: &mut ChaCha20Rng,
) -> Result<OracleCheck, CliError> {
    let q = QuadratureSpec::default();
    let c00 = m.variance();
    let mut out = OracleCheck {
        points: tol.oracle_points,
        worst_ratio: 0.0,
        worst_r: 0.0,
        worst_tau: 0.0,
        worst_closed: 0.0,
        worst_oracle: 0.0,
        worst_error_estimate: 0.0,
        pass: true,
    };
    for _ in 0..tol.oracle_points {
        let r = rng.gen_range(0.0..3.0 * scales.0);
        let tau = rng.gen_range(-3.0 * scales.1..3.0 * scales.1);
        let closed = m.covariance(r, tau)?;
        let est = oracle_kernel(m, r, tau, &q)?;
        let allow = (tol.oracle_rel * c00).max(tol.oracle_error_factor * est.error);
        let ratio = (closed - est.value).abs() / allow;
        if !(ratio <= out.worst_ratio) {
            out.worst_ratio = ratio;
            out.worst_r = r;
            out.worst_tau = tau;
            out.worst_closed = closed;
            out.worst_oracle = est.value;
            out.worst_error_estimate = est.error;
        }
    }
    out.pass = out.worst_ratio <= 1.0;
    Ok(out)
}

fn check_ode(
    m: &KernelModel<f64>,
    tau_scale: f64,
    tol: &Tolerances,
) -> Result<Option<OdeCheck>, CliError> {
    let BaseKernel::Ldho(p) = m.base() else {
        return Ok(None);
    };
    let h = tol.ode_h;
    // rounding error of the 5-point fourth difference
    let floor = 32.0 * f64::EPSILON * p.c0() / h.powi(4);
    let mut points = Vec::new();
    for f in [0.3, 0.7, 1.3] {
        let tau = (f * tau_scale).max(12.0 * h);
        let coarse = ode_residual(p, tau, 2.0 * h)?.abs();
        let fine = ode_residual(p, tau, h)?.abs();
        let order = (coarse / fine).log2();
        points.push(OdePoint {
            tau,
            residual_coarse: coarse,
            residual_fine: fine,
            order,
            at_roundoff: fine <= floor,
        });
    }
    let pass = points
        .iter()
        .all(|pt| pt.at_roundoff || (pt.order - 2.0).abs() <= tol.ode_order_band);
    Ok(Some(OdeCheck {
        h_fine: h,
        points,
        pass,
    }))
}

fn check_psd(
    m: &KernelModel<f64>,
    scales: (f64, f64),
    tol: &Tolerances,
    rng: &mut ChaCha20Rng,
) -> Result<PsdCheck, CliError> {
    let pts: Vec<SpaceTimePoint<f64>> = (0..tol.psd_points)
        .map(|_| {
            let s = (0..m.dim())
                .map(|_| rng.gen_range(0.0..2.0 * scales.0))
                .collect();
            SpaceTimePoint::new(s, rng.gen_range(0.0..2.0 * scales.1))
        })
        .collect();
    let g = gram(m, &pts)?;
    let min_eigenvalue = g.min_eigenvalue();
    let trace = g.trace();
    Ok(PsdCheck {
        points: tol.psd_points,
        min_eigenvalue,
        trace,
        pass: min_eigenvalue >= -tol.psd_rel * trace,
    })
}

/// Runs every check on one model.
pub fn check_model(
    name: &str,
    m: &KernelModel<f64>,
    seed: u64,
    tol: &Tolerances,
) -> Result<ModelChecks, CliError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scales = lag_scales(m);
    let k_max = SpectralModel::<f64>::k_max(m);
    let k_grid = log_grid(1e-3 * k_max, k_max, 48);
    let w_grid = log_grid(1e-3 / scales.1, 1e4 / scales.1, 64);
    let admissibility = admissibility_scan(m, &k_grid, &w_grid);
    let oracle = check_oracle(m, scales, tol, &mut rng)?;
    let ode = check_ode(m, scales.1, tol)?;
    let psd = check_psd(m, scales, tol, &mut rng)?;
    let pass = admissibility.pass && oracle.pass && ode.as_ref().is_none_or(|o| o.pass) && psd.pass;
    Ok(ModelChecks {
        name: name.to_string(),
        model: serde_json::from_str(&m.to_json()).expect("model JSON is valid"),
        admissibility,
        oracle,
        ode,
        psd,
        pass,
    })
}

pub fn run(
    models: &[(String, KernelModel<f64>)],
    seed: u64,
    tol: &Tolerances,
) -> Result<ChecksReport, CliError> {
    let models = models
        .iter()
        .map(|(name, m)| check_model(name, m, seed, tol).map_err(|e| e.context(name)))
        .collect::<Result<Vec<_>, _>>()?;
    let pass = models.iter().all(|m| m.pass);
    Ok(ChecksReport {
        seed,
        tolerances: *tol,
        models,
        pass,
    })
}
