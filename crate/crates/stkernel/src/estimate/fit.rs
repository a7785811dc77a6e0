use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{EstimateError, ParamError};
use crate::estimate::optimize::{minimize_log_box, NelderMeadOptions};
use crate::estimate::{wls_objective, EmpiricalVariogram, LagBins, VariogramKind, VariogramSource};
use crate::kernel::{
    classify_regime, BaseKernel, Damping, Dispersion, Family, KernelModel, LdhoParams, ModelSpec,
    OuParams, Regime, SpaceTimeCovariance,
};

/// Smallest admissible nugget relative to the variance seed; log coordinates
/// cannot reach zero.
const NUGGET_FLOOR: f64 = 1e-8;
/// Largest ρ = 2 τ_c ω_d for overdamped fits.
const RHO_MAX: f64 = 1.0 - 1e-6;
/// Width of the fit_full search box around θ0, as a factor each way.
const FULL_BOX: f64 = 100.0;

/// Named hyperparameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl Theta {
    fn new(names: &[&str], values: Vec<f64>) -> Self {
        Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            values,
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

/// How a positive parameter vector maps to a model.
///
/// The amplitude is always `c1` = C(0,0). Oscillator layouts carry
/// `omega_d` (underdamped), `rho` = 2 τ_c ω_d (overdamped) or nothing
/// (critical) as frequency parameter. O-U layouts fix τ_c = 1 because only
/// a/τ_c and scale/τ_c are identifiable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamLayout {
    Ldho {
        dispersion: Dispersion,
        dim: usize,
        regime: Regime,
    },
    Ou {
        dispersion: Dispersion,
        dim: usize,
    },
}

impl ParamLayout {
    pub fn names(&self) -> &'static [&'static str] {
        match self {
            Self::Ldho { regime, .. } => match regime {
                Regime::Underdamped => &["c1", "epsilon", "tau_c", "omega_d", "b", "nugget"],
                Regime::Critical => &["c1", "epsilon", "tau_c", "b", "nugget"],
                Regime::Overdamped => &["c1", "epsilon", "tau_c", "rho", "b", "nugget"],
            },
            Self::Ou { .. } => &["c1", "beta", "a", "scale", "nugget"],
        }
    }

    fn index(&self, name: &str) -> usize {
        self.names()
            .iter()
            .position(|n| *n == name)
            .expect("known parameter")
    }

    pub fn build(&self, x: &[f64]) -> Result<KernelModel<f64>, ParamError> {
        let names = self.names();
        let get = |n: &str| x[names.iter().position(|m| *m == n).expect("known parameter")];
        match *self {
            Self::Ldho {
                dispersion,
                dim,
                regime,
            } => {
                let tc = get("tau_c");
                let damping = match regime {
                    Regime::Underdamped => Damping::Damped {
                        omega_d: get("omega_d"),
                        regime,
                    },
                    Regime::Critical => Damping::Damped {
                        omega_d: 0.0,
                        regime,
                    },
                    Regime::Overdamped => Damping::Damped {
                        omega_d: get("rho") / (2.0 * tc),
                        regime,
                    },
                };
                let unit =
                    LdhoParams::new(dispersion, dim, 1.0, tc, damping, get("epsilon"), get("b"))?;
                let p = unit.with_c0(get("c1") / unit.variance())?;
                KernelModel::ldho(p, get("nugget"))
            }
            Self::Ou { dispersion, dim } => {
                let unit = OuParams::new(
                    dispersion,
                    dim,
                    1.0,
                    1.0,
                    get("a"),
                    get("scale"),
                    get("beta"),
                )?;
                let p = OuParams::new(
                    dispersion,
                    dim,
                    get("c1") / unit.variance(),
                    1.0,
                    get("a"),
                    get("scale"),
                    get("beta"),
                )?;
                KernelModel::ou(p, get("nugget"))
            }
        }
    }

    /// Layout and parameter vector of an existing model.
    pub fn of_model(m: &KernelModel<f64>) -> Result<(Self, Vec<f64>), EstimateError> {
        if m.is_separable_surrogate() || m.length_scales().is_some() {
            return Err(EstimateError::Data(
                "fits start from plain isotropic models".into(),
            ));
        }
        let c1 = m.variance();
        let nug = m.nugget();
        match m.base() {
            BaseKernel::Ldho(p) => {
                let regime = classify_regime(p);
                let layout = Self::Ldho {
                    dispersion: p.dispersion(),
                    dim: p.dim(),
                    regime,
                };
                let mut x = vec![c1, p.epsilon(), p.tau_c()];
                match regime {
                    Regime::Underdamped => x.push(p.omega_d_raw()),
                    Regime::Overdamped => x.push(2.0 * p.tau_c() * p.omega_d_raw()),
                    Regime::Critical => {}
                }
                x.extend([p.interaction(), nug]);
                Ok((layout, x))
            }
            BaseKernel::Ou(p) => {
                let layout = Self::Ou {
                    dispersion: p.dispersion(),
                    dim: p.dim(),
                };
                // rescale time so that τ_c = 1
                Ok((
                    layout,
                    vec![c1, p.beta(), p.a() / p.tau_c(), p.scale() / p.tau_c(), nug],
                ))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Regimes tried in the temporal stage of oscillator fits.
    pub regimes: Vec<Regime>,
    pub optimizer: NelderMeadOptions,
    /// Per-parameter (lower, upper) overrides of the automatic search boxes.
    pub bounds: BTreeMap<String, (f64, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            regimes: Regime::ALL.to_vec(),
            optimizer: NelderMeadOptions::default(),
            bounds: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelSpec,
    pub objective: f64,
    pub initial_objective: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub theta0: Theta,
    pub theta: Theta,
    pub objective_trace: Vec<f64>,
}

impl FitResult {
    pub fn kernel_model(&self) -> Result<KernelModel<f64>, ParamError> {
        KernelModel::from_spec(&self.model)
    }

    pub fn to_json(&self) -> String {
        crate::io::to_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalFit {
    /// Combined model θ0 with nugget min(nugget_spatial, nugget_temporal).
    pub result: FitResult,
    pub nugget_spatial: f64,
    pub nugget_temporal: f64,
    pub spatial_objective: f64,
    pub temporal_objective: f64,
    /// Temporal-stage objective per regime tried.
    pub regime_objectives: Vec<(Regime, f64)>,
}

fn require(v: &EmpiricalVariogram, kind: VariogramKind) -> Result<(), EstimateError> {
    if v.kind != kind {
        return Err(EstimateError::KindMismatch {
            expected: kind.name(),
            got: v.kind.name(),
        });
    }
    if v.bins.len() < 3 {
        return Err(EstimateError::Data(format!(
            "{} variogram needs at least 3 bins",
            kind.name()
        )));
    }
    Ok(())
}

fn objective(layout: &ParamLayout, x: &[f64], v: &EmpiricalVariogram) -> f64 {
    match layout.build(x) {
        Ok(m) => wls_objective(&m, v)
            .map(|w| w.value)
            .unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    }
}

struct Stage {
    x: Vec<f64>,
    value: f64,
    evals: usize,
    converged: bool,
}

/// Minimizes over the `free` coordinates of `x0`, leaving the rest fixed.
fn run_stage(
    layout: &ParamLayout,
    x0: &[f64],
    free: &[&str],
    boxes: &[(f64, f64)],
    v: &EmpiricalVariogram,
    opts: &FitOptions,
) -> Stage {
    let idx: Vec<usize> = free.iter().map(|n| layout.index(n)).collect();
    let mut lower = Vec::with_capacity(free.len());
    let mut upper = Vec::with_capacity(free.len());
    for (name, &(lo, hi)) in free.iter().zip(boxes) {
        let (lo, hi) = opts.bounds.get(*name).copied().unwrap_or((lo, hi));
        lower.push(lo);
        upper.push(hi);
    }
    let start: Vec<f64> = idx.iter().map(|&i| x0[i]).collect();
    let assemble = |y: &[f64]| {
        let mut x = x0.to_vec();
        for (&i, &val) in idx.iter().zip(y) {
            x[i] = val;
        }
        x
    };
    let m = minimize_log_box(
        |y| objective(layout, &assemble(y), v),
        &start,
        &lower,
        &upper,
        &opts.optimizer,
    );
    Stage {
        x: assemble(&m.x),
        value: m.value,
        evals: m.evals,
        converged: m.converged,
    }
}

/// Lag at which `gamma - nugget` first reaches the fraction `frac` of `c1`,
/// linearly interpolated; the last lag when it never does.
fn crossing(lags: &[f64], gamma: &[f64], nugget: f64, c1: f64, frac: f64) -> f64 {
    let target = nugget + frac * c1;
    for i in 0..lags.len() {
        if gamma[i] >= target {
            if i == 0 {
                return lags[0];
            }
            let w = (target - gamma[i - 1]) / (gamma[i] - gamma[i - 1]);
            return lags[i - 1] + w * (lags[i] - lags[i - 1]);
        }
    }
    *lags.last().expect("non-empty")
}

/// Nugget seed from γ ≈ nugget + α ℓ² through the first two bins, clamped to
/// [1e-3, 0.9] of the sill.
fn nugget_seed(lags: &[f64], gamma: &[f64], sill: f64) -> f64 {
    let (l1, l2) = (lags[0] * lags[0], lags[1] * lags[1]);
    let est = (gamma[0] * l2 - gamma[1] * l1) / (l2 - l1);
    est.clamp(1e-3 * sill, 0.9 * sill)
}

fn tail_mean(gamma: &[f64]) -> f64 {
    let k = (gamma.len() / 3).max(1);
    gamma[gamma.len() - k..].iter().sum::<f64>() / k as f64
}

/// Seed for ω_d: π/τ at the first interior local maximum of the temporal
/// variogram, or π over the largest lag when there is none.
pub fn initial_frequency(temporal: &EmpiricalVariogram) -> f64 {
    let g: Vec<f64> = temporal.bins.iter().map(|b| b.gamma).collect();
    let t: Vec<f64> = (0..g.len()).map(|i| temporal.lag(i).1).collect();
    for i in 1..g.len().saturating_sub(1) {
        if g[i] >= g[i - 1] && g[i] > g[i + 1] {
            return std::f64::consts::PI / t[i];
        }
    }
    std::f64::consts::PI / t[t.len() - 1]
}

/// Two-stage marginal fit: (c1, ε or β, nugget) from the spatial marginal,
/// then the temporal parameters and a second nugget from the temporal
/// marginal with the spatial ones held fixed. Oscillator fits try every
/// regime in `opts.regimes` and keep the lowest temporal objective.
pub fn fit_marginals(
    spatial: &EmpiricalVariogram,
    temporal: &EmpiricalVariogram,
    family: Family,
    dispersion: Dispersion,
    dim: usize,
    opts: &FitOptions,
) -> Result<MarginalFit, EstimateError> {
    require(spatial, VariogramKind::SpatialMarginal)?;
    require(temporal, VariogramKind::TemporalMarginal)?;
    let rs: Vec<f64> = (0..spatial.bins.len()).map(|i| spatial.lag(i).0).collect();
    let gs: Vec<f64> = spatial.bins.iter().map(|b| b.gamma).collect();
    let sill = tail_mean(&gs);
    if !(sill > 0.0) {
        return Err(EstimateError::Data(
            "spatial variogram is identically zero".into(),
        ));
    }
    let nug_s0 = nugget_seed(&rs, &gs, sill);
    let c1_0 = sill - nug_s0;
    let r_e = crossing(&rs, &gs, nug_s0, c1_0, 1.0 - (-1.0f64).exp());
    let scale0 = match dispersion {
        Dispersion::Quadratic => 0.25 * r_e * r_e,
        Dispersion::Linear => r_e / ((2.0 / (dim as f64 + 1.0)).exp() - 1.0).sqrt(),
    };
    let spatial_boxes = [
        (1e-4 * sill, 1e2 * sill),
        (1e-3 * scale0, 1e3 * scale0),
        (NUGGET_FLOOR * sill, 10.0 * sill),
    ];

    let ts: Vec<f64> = (0..temporal.bins.len())
        .map(|i| temporal.lag(i).1)
        .collect();
    let gt: Vec<f64> = temporal.bins.iter().map(|b| b.gamma).collect();

    let (spatial_layout, spatial_names, x_s0) = match family {
        Family::Ldho => (
            ParamLayout::Ldho {
                dispersion,
                dim,
                regime: Regime::Underdamped,
            },
            ["c1", "epsilon", "nugget"],
            vec![c1_0, scale0, 1.0, 1.0, 0.0, nug_s0],
        ),
        Family::Ou => (
            ParamLayout::Ou { dispersion, dim },
            ["c1", "beta", "nugget"],
            vec![c1_0, scale0, 1.0, 0.0, nug_s0],
        ),
    };
    let s1 = run_stage(
        &spatial_layout,
        &x_s0,
        &spatial_names,
        &spatial_boxes,
        spatial,
        opts,
    );
    let c1 = s1.x[0];
    let scale = s1.x[1];
    let nug_s = s1.x[s1.x.len() - 1];

    let nug_t0 = nugget_seed(&ts, &gt, c1 + nug_s);
    let t_e = crossing(&ts, &gt, nug_t0, c1, 1.0 - (-1.0f64).exp());
    let t_max = *ts.last().expect("bins");
    let nug_box = (NUGGET_FLOOR * c1, 10.0 * (c1 + nug_s));

    let mut evals = s1.evals;
    let mut converged = s1.converged;
    let mut regime_objectives = Vec::new();
    let mut best: Option<(ParamLayout, Stage, Vec<f64>)> = None;
    type Candidate = Option<(ParamLayout, Stage, Vec<f64>)>;
    let consider = |layout: ParamLayout, stage: Stage, seed: Vec<f64>, best: &mut Candidate| {
        if best.as_ref().is_none_or(|b| stage.value < b.1.value) {
            *best = Some((layout, stage, seed));
        }
    };
    match family {
        Family::Ldho => {
            let wd0 = initial_frequency(temporal);
            for &regime in &opts.regimes {
                let layout = ParamLayout::Ldho {
                    dispersion,
                    dim,
                    regime,
                };
                let mut regime_best: Candidate = None;
                for tc_mult in [0.25, 1.0, 4.0] {
                    for b0 in [0.1, 1.0] {
                        let tc0 = tc_mult * t_e;
                        let mut x = vec![c1, scale, tc0];
                        let (names, boxes): (Vec<&str>, Vec<(f64, f64)>) = match regime {
                            Regime::Underdamped => {
                                x.push(wd0);
                                (
                                    vec!["tau_c", "omega_d", "b", "nugget"],
                                    vec![
                                        (1e-3 * t_e, 1e3 * t_max),
                                        (1e-2 * wd0, 1e2 * wd0),
                                        (1e-6, 1e3),
                                        nug_box,
                                    ],
                                )
                            }
                            Regime::Critical => (
                                vec!["tau_c", "b", "nugget"],
                                vec![(1e-3 * t_e, 1e3 * t_max), (1e-6, 1e3), nug_box],
                            ),
                            Regime::Overdamped => {
                                x.push(0.5);
                                (
                                    vec!["tau_c", "rho", "b", "nugget"],
                                    vec![
                                        (1e-3 * t_e, 1e3 * t_max),
                                        (1e-3, RHO_MAX),
                                        (1e-6, 1e3),
                                        nug_box,
                                    ],
                                )
                            }
                        };
                        x.extend([b0, nug_t0]);
                        let stage = run_stage(&layout, &x, &names, &boxes, temporal, opts);
                        evals += stage.evals;
                        consider(layout, stage, x, &mut regime_best);
                    }
                }
                let (l, s, seed) = regime_best.expect("at least one start");
                regime_objectives.push((regime, s.value));
                converged &= s.converged;
                consider(l, s, seed, &mut best);
            }
        }
        Family::Ou => {
            let layout = ParamLayout::Ou { dispersion, dim };
            for a_mult in [0.25, 1.0, 4.0] {
                let a0 = a_mult / t_e;
                let s0 = 0.1 * scale / t_e;
                let x = vec![c1, scale, a0, s0, nug_t0];
                let boxes = [
                    (1e-4 / t_max, 1e3 / ts[0]),
                    (1e-6 * scale / t_max, 1e3 * scale / ts[0]),
                    nug_box,
                ];
                let stage = run_stage(
                    &layout,
                    &x,
                    &["a", "scale", "nugget"],
                    &boxes,
                    temporal,
                    opts,
                );
                evals += stage.evals;
                converged &= stage.converged;
                consider(layout, stage, x, &mut best);
            }
        }
    }
    let (layout, t_stage, t_seed) =
        best.ok_or_else(|| EstimateError::Data("no regimes requested".into()))?;
    let nug_t = t_stage.x[t_stage.x.len() - 1];
    let mut theta = t_stage.x.clone();
    let last = theta.len() - 1;
    theta[last] = nug_s.min(nug_t);
    let mut seed = t_seed;
    seed[0] = c1_0;
    seed[1] = scale0;
    seed[last] = nug_s0;
    let model = layout.build(&theta)?;
    let total = s1.value + t_stage.value;
    Ok(MarginalFit {
        result: FitResult {
            model: model.to_spec(),
            objective: total,
            initial_objective: objective(&spatial_layout, &x_s0, spatial)
                + objective(&layout, &seed, temporal),
            evaluations: evals,
            converged,
            theta0: Theta::new(layout.names(), seed),
            theta: Theta::new(layout.names(), theta),
            objective_trace: vec![s1.value, t_stage.value],
        },
        nugget_spatial: nug_s,
        nugget_temporal: nug_t,
        spatial_objective: s1.value,
        temporal_objective: t_stage.value,
        regime_objectives,
    })
}

/// Minimizes the joint WLS objective on a space-time variogram, starting at
/// θ0 and searching a box of a factor 100 each way (capped for ρ). The
/// returned objective never exceeds the one at θ0.
pub fn fit_full(
    st: &EmpiricalVariogram,
    theta0: &KernelModel<f64>,
    opts: &FitOptions,
) -> Result<FitResult, EstimateError> {
    require(st, VariogramKind::SpaceTime)?;
    let (layout, x0) = ParamLayout::of_model(theta0)?;
    let names = layout.names();
    let c1 = x0[0];
    let boxes: Vec<(f64, f64)> = names
        .iter()
        .zip(&x0)
        .map(|(&n, &v)| match n {
            "nugget" => (
                (v / FULL_BOX).max(NUGGET_FLOOR * c1),
                (v * FULL_BOX).max(c1),
            ),
            "rho" => (v / FULL_BOX, RHO_MAX),
            "b" | "scale" => ((v / FULL_BOX).max(1e-8), (v * FULL_BOX).max(1.0)),
            _ => (v / FULL_BOX, v * FULL_BOX),
        })
        .collect();
    let mut start = x0.clone();
    for (i, (lo, hi)) in boxes.iter().enumerate() {
        start[i] = start[i].clamp(*lo, *hi);
    }
    let f0 = objective(&layout, &x0, st);
    let stage = run_stage(&layout, &start, names, &boxes, st, opts);
    let (x, value) = if stage.value <= f0 {
        (stage.x, stage.value)
    } else {
        (x0.clone(), f0)
    };
    let model = layout.build(&x)?;
    Ok(FitResult {
        model: model.to_spec(),
        objective: value,
        initial_objective: f0,
        evaluations: stage.evals,
        converged: stage.converged,
        theta0: Theta::new(names, x0),
        theta: Theta::new(names, x),
        objective_trace: vec![f0, value],
    })
}

/// Bins and model family for [`fit_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSpec {
    pub family: Family,
    pub dispersion: Dispersion,
    /// Spatial bins at Δs, 2Δs, ... (plus 0 for the joint variogram).
    pub r_bins: usize,
    /// Temporal bins at Δt, 2Δt, ... (plus 0 for the joint variogram).
    pub tau_bins: usize,
    pub options: FitOptions,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        Self {
            family: Family::Ldho,
            dispersion: Dispersion::Quadratic,
            r_bins: 16,
            tau_bins: 32,
            options: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub spatial: EmpiricalVariogram,
    pub temporal: EmpiricalVariogram,
    pub space_time: EmpiricalVariogram,
    pub marginal: MarginalFit,
    /// Joint objective of the marginal-stage model.
    pub joint_objective_theta0: f64,
    pub full: FitResult,
}

/// Estimates the three variograms, fits the marginals, then the joint model.
pub fn fit_pipeline(
    src: &(impl VariogramSource + ?Sized),
    spec: &PipelineSpec,
) -> Result<PipelineResult, EstimateError> {
    let (ds, dt) = src.spacing();
    let spatial = src.spatial_marginal(&LagBins::regular(ds, spec.r_bins))?;
    let temporal = src.temporal_marginal(&LagBins::regular(dt, spec.tau_bins))?;
    let space_time = src.space_time(
        &LagBins::regular_from_zero(ds, spec.r_bins),
        &LagBins::regular_from_zero(dt, spec.tau_bins),
    )?;
    let marginal = fit_marginals(
        &spatial,
        &temporal,
        spec.family,
        spec.dispersion,
        src.dim(),
        &spec.options,
    )?;
    let theta0 = marginal.result.kernel_model()?;
    let full = fit_full(&space_time, &theta0, &spec.options)?;
    Ok(PipelineResult {
        joint_objective_theta0: full.initial_objective,
        spatial,
        temporal,
        space_time,
        marginal,
        full,
    })
}
