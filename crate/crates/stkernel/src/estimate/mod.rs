//! Empirical variograms, model variograms and weighted-least-squares fitting.
//!
//! Gridded fields use an FFT autocorrelation to obtain the squared-increment
//! sum for every lag vector at once; scattered datasets enumerate pairs.
//! Estimation runs in `f64` whatever the scalar type of the input.

mod fit;
mod lags;
mod optimize;

pub use fit::{
    fit_full, fit_marginals, fit_pipeline, initial_frequency, FitOptions, FitResult, MarginalFit,
    ParamLayout, PipelineResult, PipelineSpec, Theta,
};
pub use optimize::{minimize_log_box, Minimum, NelderMeadOptions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::EstimateError;
use crate::gp::SpaceTimeDataset;
use crate::kernel::KernelModel;
use crate::scalar::Scalar;
use crate::simulate::FieldRealization;
use lags::LagTable;

/// Model semivariances below this fraction of the sill are left out of the
/// objective.
pub const SKIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariogramKind {
    SpatialMarginal,
    TemporalMarginal,
    SpaceTime,
}

impl VariogramKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SpatialMarginal => "spatial_marginal",
            Self::TemporalMarginal => "temporal_marginal",
            Self::SpaceTime => "space_time",
        }
    }
}

/// Lag classes: a lag ℓ belongs to the first center c with c - δ ≤ ℓ < c + δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagBins {
    pub centers: Vec<f64>,
    pub tolerance: f64,
}

impl LagBins {
    /// Centers step, 2·step, ..., count·step with tolerance step/2.
    pub fn regular(step: f64, count: usize) -> Self {
        Self {
            centers: (1..=count).map(|i| i as f64 * step).collect(),
            tolerance: 0.5 * step,
        }
    }

    /// Centers 0, step, ..., count·step with tolerance step/2.
    pub fn regular_from_zero(step: f64, count: usize) -> Self {
        Self {
            centers: (0..=count).map(|i| i as f64 * step).collect(),
            tolerance: 0.5 * step,
        }
    }

    fn validate(&self) -> Result<(), EstimateError> {
        if self.centers.is_empty() || !(self.tolerance > 0.0) {
            return Err(EstimateError::Data(
                "bins need centers and a positive tolerance".into(),
            ));
        }
        if self.centers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EstimateError::Data("bin centers must increase".into()));
        }
        Ok(())
    }

    fn find(&self, lag: f64) -> Option<usize> {
        self.centers
            .iter()
            .position(|&c| lag >= c - self.tolerance && lag < c + self.tolerance)
    }

    fn reach(&self) -> f64 {
        self.centers.last().copied().unwrap_or(0.0) + self.tolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramBin {
    /// Pair-averaged spatial lag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Pair-averaged temporal lag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub gamma: f64,
    /// Number of distinct pairs.
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalVariogram {
    pub kind: VariogramKind,
    pub bins: Vec<VariogramBin>,
    /// Spatial lag tolerance (temporal for the temporal marginal).
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_tolerance: Option<f64>,
    /// Bins that received no pairs and were dropped.
    #[serde(default)]
    pub empty_bins: usize,
}

impl EmpiricalVariogram {
    pub fn to_json(&self) -> String {
        crate::io::to_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self, EstimateError> {
        serde_json::from_str(s).map_err(|e| EstimateError::Data(e.to_string()))
    }

    /// (r, τ) at which a model is compared with bin `i`.
    pub fn lag(&self, i: usize) -> (f64, f64) {
        let b = &self.bins[i];
        (b.r.unwrap_or(0.0), b.tau.unwrap_or(0.0))
    }
}

#[derive(Clone, Copy, Default)]
struct Acc {
    sum_sq: f64,
    pairs: u64,
    r_sum: f64,
    tau_sum: f64,
}

impl Acc {
    fn add(&mut self, sum_sq: f64, pairs: u64, r: f64, tau: f64) {
        self.sum_sq += sum_sq;
        self.pairs += pairs;
        self.r_sum += r * pairs as f64;
        self.tau_sum += tau * pairs as f64;
    }

    fn merge(&mut self, o: &Acc) {
        self.sum_sq += o.sum_sq;
        self.pairs += o.pairs;
        self.r_sum += o.r_sum;
        self.tau_sum += o.tau_sum;
    }
}

fn finish(
    kind: VariogramKind,
    accs: Vec<Acc>,
    tolerance: f64,
    tau_tolerance: Option<f64>,
) -> Result<EmpiricalVariogram, EstimateError> {
    let total = accs.len();
    let bins: Vec<VariogramBin> = accs
        .into_iter()
        .filter(|a| a.pairs > 0)
        .map(|a| {
            let n = a.pairs as f64;
            VariogramBin {
                r: (kind != VariogramKind::TemporalMarginal).then_some(a.r_sum / n),
                tau: (kind != VariogramKind::SpatialMarginal).then_some(a.tau_sum / n),
                gamma: a.sum_sq / (2.0 * n),
                n: a.pairs,
            }
        })
        .collect();
    if bins.is_empty() {
        return Err(EstimateError::NoPairs);
    }
    let empty_bins = total - bins.len();
    Ok(EmpiricalVariogram {
        kind,
        empty_bins,
        bins,
        tolerance,
        tau_tolerance,
    })
}

/// Anything empirical variograms can be computed from.
pub trait VariogramSource {
    /// Number of spatial coordinates.
    fn dim(&self) -> usize;

    /// Natural (spatial, temporal) lag steps, used for default bins.
    fn spacing(&self) -> (f64, f64);

    fn spatial_marginal(&self, bins: &LagBins) -> Result<EmpiricalVariogram, EstimateError>;

    fn temporal_marginal(&self, bins: &LagBins) -> Result<EmpiricalVariogram, EstimateError>;

    fn space_time(
        &self,
        r_bins: &LagBins,
        tau_bins: &LagBins,
    ) -> Result<EmpiricalVariogram, EstimateError>;
}

/// Omnidirectional semivariance of pairs sharing a time, averaged over times.
pub fn spatial_marginal_variogram(
    src: &(impl VariogramSource + ?Sized),
    bins: &LagBins,
) -> Result<EmpiricalVariogram, EstimateError> {
    src.spatial_marginal(bins)
}

/// Semivariance of pairs sharing a location, averaged over locations.
pub fn temporal_marginal_variogram(
    src: &(impl VariogramSource + ?Sized),
    bins: &LagBins,
) -> Result<EmpiricalVariogram, EstimateError> {
    src.temporal_marginal(bins)
}

/// Joint (r, τ) semivariance; pair (i, j) enters bin (k, m) once.
pub fn space_time_variogram(
    src: &(impl VariogramSource + ?Sized),
    r_bins: &LagBins,
    tau_bins: &LagBins,
) -> Result<EmpiricalVariogram, EstimateError> {
    src.space_time(r_bins, tau_bins)
}

/// Squared-increment sums of a gridded field, computed once and reused for
/// every variogram.
pub struct GridVariograms {
    table: LagTable,
    ds: f64,
    dt: f64,
}

impl GridVariograms {
    pub fn new<T: Scalar>(f: &FieldRealization<T>) -> Self {
        let values: Vec<f64> = f.values.iter().map(|v| v.f64()).collect();
        Self {
            table: LagTable::new(&values, &f.shape()),
            ds: f.grid.ds,
            dt: f.grid.dt,
        }
    }

    /// Visits spatial lag vectors with |h|·Δs < reach, as (h, |h|·Δs).
    fn spatial_lags(&self, reach: f64) -> Vec<(Vec<isize>, f64)> {
        let shape = &self.table.shape()[1..];
        let limits: Vec<isize> = shape
            .iter()
            .map(|&n| ((reach / self.ds).ceil() as isize).min(n as isize - 1))
            .collect();
        let mut out = Vec::new();
        let mut h: Vec<isize> = limits.iter().map(|l| -l).collect();
        loop {
            let r = h.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt() * self.ds;
            if r < reach {
                out.push((h.clone(), r));
            }
            let mut ax = h.len();
            loop {
                if ax == 0 {
                    return out;
                }
                ax -= 1;
                h[ax] += 1;
                if h[ax] <= limits[ax] {
                    break;
                }
                h[ax] = -limits[ax];
            }
        }
    }

    fn lex_positive(h: &[isize]) -> bool {
        h.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
    }
}

impl VariogramSource for GridVariograms {
    fn dim(&self) -> usize {
        self.table.shape().len() - 1
    }

    fn spacing(&self) -> (f64, f64) {
        (self.ds, self.dt)
    }

    fn spatial_marginal(&self, bins: &LagBins) -> Result<EmpiricalVariogram, EstimateError> {
        bins.validate()?;
        let mut accs = vec![Acc::default(); bins.centers.len()];
        for (hs, r) in self.spatial_lags(bins.reach()) {
            if !Self::lex_positive(&hs) {
                continue;
            }
            if let Some(k) = bins.find(r) {
                let mut h = vec![0isize];
                h.extend(&hs);
                let (s, n) = self.table.increments(&h);
                accs[k].add(s, n, r, 0.0);
            }
        }
        finish(VariogramKind::SpatialMarginal, accs, bins.tolerance, None)
    }

    fn temporal_marginal(&self, bins: &LagBins) -> Result<EmpiricalVariogram, EstimateError> {
        bins.validate()?;
        let nt = self.table.shape()[0] as isize;
        let mut accs = vec![Acc::default(); bins.centers.len()];
        let d = self.dim();
        for m in 1..nt {
            let tau = m as f64 * self.dt;
            if let Some(k) = bins.find(tau) {
                let mut h = vec![m];
                h.extend(std::iter::repeat_n(0, d));
                let (s, n) = self.table.increments(&h);
                accs[k].add(s, n, 0.0, tau);
            }
        }
        finish(VariogramKind::TemporalMarginal, accs, bins.tolerance, None)
    }

    fn space_time(
        &self,
        r_bins: &LagBins,
        tau_bins: &LagBins,
    ) -> Result<EmpiricalVariogram, EstimateError> {
        r_bins.validate()?;
        tau_bins.validate()?;
        let nt = self.table.shape()[0] as isize;
        let nr = r_bins.centers.len();
        let mut accs = vec![Acc::default(); nr * tau_bins.centers.len()];
        let spatial = self.spatial_lags(r_bins.reach());
        for m in 0..nt {
            let tau = m as f64 * self.dt;
            let Some(j) = tau_bins.find(tau) else {
                continue;
            };
            for (hs, r) in &spatial {
                if m == 0 && !Self::lex_positive(hs) {
                    continue;
                }
                if let Some(k) = r_bins.find(*r) {
                    let mut h = vec![m];
                    h.extend(hs);
                    let (s, n) = self.table.increments(&h);
                    accs[j * nr + k].add(s, n, *r, tau);
                }
            }
        }
        finish(
            VariogramKind::SpaceTime,
            accs,
            r_bins.tolerance,
            Some(tau_bins.tolerance),
        )
    }
}

impl<T: Scalar> VariogramSource for FieldRealization<T> {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn spacing(&self) -> (f64, f64) {
        (self.grid.ds, self.grid.dt)
    }

    fn spatial_marginal(&self, bins: &LagBins) -> Result<EmpiricalVariogram, EstimateError> {
        GridVariograms::new(self).spatial_marginal(bins)
    }

    fn temporal_marginal(&self, bins: &LagBins) -> Result<EmpiricalVariogram, EstimateError> {
        GridVariograms::new(self).temporal_marginal(bins)
    }

    fn space_time(
        &self,
        r_bins: &LagBins,
        tau_bins: &LagBins,
    ) -> Result<EmpiricalVariogram, EstimateError> {
        GridVariograms::new(self).space_time(r_bins, tau_bins)
    }
}

/// Lags below this, relative to the coordinate scale, count as coincident.
const SAME_TOL: f64 = 1e-9;

struct Scattered {
    s: Vec<Vec<f64>>,
    t: Vec<f64>,
    z: Vec<f64>,
    s_scale: f64,
    t_scale: f64,
}

impl Scattered {
    fn new<T: Scalar>(data: &SpaceTimeDataset<T>) -> Self {
        let s: Vec<Vec<f64>> = data
            .points()
            .iter()
            .map(|p| p.s.iter().map(|x| x.f64()).collect())
            .collect();
        let t: Vec<f64> = data.points().iter().map(|p| p.t.f64()).collect();
        let s_scale = s.iter().flatten().fold(1.0f64, |a, x| a.max(x.abs()));
        let t_scale = t.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        Self {
            s,
            t,
            z: data.values().iter().map(|v| v.f64()).collect(),
            s_scale,
            t_scale,
        }
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.s[i]
            .iter()
            .zip(&self.s[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Accumulates every pair (i < j) into `nbins` bins chosen by `pick`.
    fn accumulate(
        &self,
        nbins: usize,
        pick: impl Fn(f64, f64) -> Option<usize> + Sync,
    ) -> Vec<Acc> {
        let n = self.z.len();
        let rows: Vec<Vec<Acc>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut accs = vec![Acc::default(); nbins];
                for j in i + 1..n {
                    let r = self.dist(i, j);
                    let tau = (self.t[i] - self.t[j]).abs();
                    if let Some(k) = pick(r, tau) {
                        let dz = self.z[i] - self.z[j];
                        accs[k].add(dz * dz, 1, r, tau);
                    }
                }
                accs
            })
            .collect();
        let mut total = vec![Acc::default(); nbins];
        for row in &rows {
            for (t, a) in total.iter_mut().zip(row) {
                t.merge(a);
            }
        }
        total
    }
}

/// Half the median nearest-neighbour distance between distinct locations.
pub fn default_spatial_tolerance<T: Scalar>(data: &SpaceTimeDataset<T>) -> f64 {
    let sc = Scattered::new(data);
    let n = sc.z.len();
    let mut nn: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| sc.dist(i, j))
                .filter(|&r| r > SAME_TOL * sc.s_scale)
                .fold(f64::INFINITY, f64::min)
        })
        .filter(|r| r.is_finite())
        .collect();
    if nn.is_empty() {
        return 0.0;
    }
    nn.sort_by(f64::total_cmp);
    0.5 * nn[nn.len() / 2]
}

impl<T: Scalar> VariogramSource for SpaceTimeDataset<T> {
    fn dim(&self) -> usize {
        self.points()[0].s.len()
    }

    fn spacing(&self) -> (f64, f64) {
        let sc = Scattered::new(self);
        let mut ts = sc.t.clone();
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() <= SAME_TOL * sc.t_scale);
        let dt = ts
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        (
            2.0 * default_spatial_tolerance(self),
            if dt.is_finite() { dt } else { 1.0 },
        )
    }

    fn spatial_marginal(&self, bins: &LagBins) -> Result<EmpiricalVariogram, EstimateError> {
        bins.validate()?;
        let sc = Scattered::new(self);
        let same_t = SAME_TOL * sc.t_scale;
        let accs = sc.accumulate(bins.centers.len(), |r, tau| {
            if tau <= same_t && r > SAME_TOL * sc.s_scale {
                bins.find(r)
            } else {
                None
            }
        });
        finish(VariogramKind::SpatialMarginal, accs, bins.tolerance, None)
    }

    fn temporal_marginal(&self, bins: &LagBins) -> Result<EmpiricalVariogram, EstimateError> {
        bins.validate()?;
        let sc = Scattered::new(self);
        let same_s = SAME_TOL * sc.s_scale;
        let accs = sc.accumulate(bins.centers.len(), |r, tau| {
            if r <= same_s && tau > SAME_TOL * sc.t_scale {
                bins.find(tau)
            } else {
                None
            }
        });
        finish(VariogramKind::TemporalMarginal, accs, bins.tolerance, None)
    }

    fn space_time(
        &self,
        r_bins: &LagBins,
        tau_bins: &LagBins,
    ) -> Result<EmpiricalVariogram, EstimateError> {
        r_bins.validate()?;
        tau_bins.validate()?;
        let sc = Scattered::new(self);
        let nr = r_bins.centers.len();
        let accs = sc.accumulate(nr * tau_bins.centers.len(), |r, tau| {
            Some(tau_bins.find(tau)? * nr + r_bins.find(r)?)
        });
        finish(
            VariogramKind::SpaceTime,
            accs,
            r_bins.tolerance,
            Some(tau_bins.tolerance),
        )
    }
}

/// C(0,0) - C(r,τ) + nugget·[lag ≠ 0].
pub fn model_variogram(m: &KernelModel<f64>, r: f64, tau: f64) -> Result<f64, EstimateError> {
    Ok(m.variogram(r, tau)?)
}

/// Value of the weighted-least-squares criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WlsValue {
    pub value: f64,
    /// Bins left out because the model semivariance was below tolerance.
    pub skipped: usize,
}

/// Σ n (γ̂/γ - 1)² over the bins of `v`.
pub fn wls_objective(
    m: &KernelModel<f64>,
    v: &EmpiricalVariogram,
) -> Result<WlsValue, EstimateError> {
    let floor = SKIP_TOL * m.sill();
    let mut value = 0.0;
    let mut skipped = 0;
    for (i, b) in v.bins.iter().enumerate() {
        let (r, tau) = v.lag(i);
        let g = m.variogram(r, tau)?;
        if g.abs() <= floor {
            skipped += 1;
            continue;
        }
        let e = b.gamma / g - 1.0;
        value += b.n as f64 * e * e;
    }
    if skipped == v.bins.len() {
        return Err(EstimateError::AllBinsSkipped);
    }
    Ok(WlsValue { value, skipped })
}
