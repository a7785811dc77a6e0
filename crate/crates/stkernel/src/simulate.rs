//! Spectral (FFT) simulation of stationary Gaussian fields on regular grids.
//!
//! Fields are stored t-major in C order: node (t, i1, ..., id) sits at
//! `((t * n1 + i1) * n2 + i2) ...`.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::SimulateError;
use crate::io::{fmt_f64, write_csv};
use crate::kernel::{KernelModel, SpaceTimeCovariance};
use crate::scalar::Scalar;
use crate::spectral::{temporal_marginal_spectrum, QuadratureSpec, SpectralModel};

/// Name of the random stream recorded in sidecars.
pub const GENERATOR: &str =
    "ChaCha20Rng(seed_from_u64) + StandardNormal (ziggurat), white noise then nugget";

/// Relative mismatch between captured spectral mass and C(0,0) that triggers
/// a truncation warning.
pub const TRUNCATION_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Node counts along each spatial axis.
    pub spatial: Vec<usize>,
    pub nt: usize,
    pub ds: f64,
    pub dt: f64,
    pub seed: u64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), SimulateError> {
        if self.spatial.is_empty() || self.spatial.len() > 3 {
            return Err(SimulateError::Grid(
                "1 to 3 spatial axes are supported".into(),
            ));
        }
        if self.spatial.iter().any(|&n| n < 2) || self.nt < 2 {
            return Err(SimulateError::Grid(
                "every axis needs at least 2 nodes".into(),
            ));
        }
        if !(self.ds > 0.0 && self.ds.is_finite() && self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimulateError::Grid("spacings must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.spatial.len()
    }

    /// Array shape, time axis first.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.nt];
        s.extend(&self.spatial);
        s
    }

    pub fn len(&self) -> usize {
        self.nt * self.spatial.iter().product::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spatial extents (n - 1)·Δs.
    pub fn extents(&self) -> Vec<f64> {
        self.spatial
            .iter()
            .map(|&n| (n - 1) as f64 * self.ds)
            .collect()
    }

    pub fn duration(&self) -> f64 {
        (self.nt - 1) as f64 * self.dt
    }
}

/// Captured spectral mass differs from C(0,0) by more than [`TRUNCATION_TOL`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralTruncationWarning {
    /// Σ λ / N divided by C(0,0).
    pub captured_fraction: f64,
}

impl std::fmt::Display for SpectralTruncationWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "grid captures {:.4} of the model variance; refine the spacing or enlarge the domain",
            self.captured_fraction
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization<T> {
    pub grid: GridSpec,
    pub values: Vec<T>,
    pub model_json: String,
    pub warning: Option<SpectralTruncationWarning>,
    /// max |Im z| / RMS(Re z) of the synthesized field before the imaginary
    /// part was dropped.
    pub imag_ratio: f64,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    grid: GridSpec,
    shape: Vec<usize>,
    layout: String,
    dtype: String,
    generator: String,
    model: serde_json::Value,
    warning: Option<SpectralTruncationWarning>,
}

fn fft_freqs(n: usize, spacing: f64) -> Vec<f64> {
    let scale = 2.0 * std::f64::consts::PI / (n as f64 * spacing);
    (0..n)
        .map(|m| {
            let j = if m <= (n - 1) / 2 {
                m as isize
            } else {
                m as isize - n as isize
            };
            j as f64 * scale
        })
        .collect()
}

/// In-place multi-dimensional FFT over a C-ordered array.
pub(crate) fn fft_nd<T: Scalar>(data: &mut [Complex<T>], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<T>::new();
    let total = data.len();
    for (axis, &n) in shape.iter().enumerate() {
        let plan = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let stride: usize = shape[axis + 1..].iter().product();
        let lines = total / n;
        let line_index = |l: usize| (l / stride) * n * stride + l % stride;
        let mut buf: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero()); total];
        for l in 0..lines {
            let base = line_index(l);
            for j in 0..n {
                buf[l * n + j] = data[base + j * stride];
            }
        }
        buf.par_chunks_mut(n).for_each(|line| plan.process(line));
        for l in 0..lines {
            let base = line_index(l);
            for j in 0..n {
                data[base + j * stride] = buf[l * n + j];
            }
        }
    }
}

/// Spectral density on the FFT frequency grid, laid out like the field.
fn spectrum_on_grid<T: Scalar>(
    m: &KernelModel<T>,
    g: &GridSpec,
) -> Result<Vec<f64>, SimulateError> {
    let d = g.dim();
    let om = fft_freqs(g.nt, g.dt);
    let ks: Vec<Vec<f64>> = g.spatial.iter().map(|&n| fft_freqs(n, g.ds)).collect();
    let scales: Vec<f64> = match m.length_scales() {
        Some(ls) => ls.iter().map(|l| l.f64()).collect(),
        None => vec![1.0; d],
    };
    let jac: f64 = scales.iter().product();
    // separable surrogates use S_S(k) S_T(ω) / C(0,0) with S_T tabulated once per ω
    let temporal: Option<Vec<f64>> = if m.is_separable_surrogate() {
        let q = QuadratureSpec::default();
        let mut out = Vec::with_capacity(om.len());
        for &w in &om {
            out.push(
                temporal_marginal_spectrum(m.base(), T::of(w.abs()), &q)?
                    .value
                    .f64(),
            );
        }
        Some(out)
    } else {
        None
    };
    let c00 = m.variance().f64();
    let slice: usize = g.spatial.iter().product();
    let mut out = vec![0.0; g.len()];
    out.par_chunks_mut(slice)
        .enumerate()
        .for_each(|(it, chunk)| {
            let w = om[it];
            for (flat, v) in chunk.iter_mut().enumerate() {
                let mut rem = flat;
                let mut k2 = 0.0;
                for ax in (0..d).rev() {
                    let n = g.spatial[ax];
                    let kk = ks[ax][rem % n] * scales[ax];
                    rem /= n;
                    k2 += kk * kk;
                }
                let k = T::of(k2.sqrt());
                *v = jac
                    * match &temporal {
                        Some(st) => m.base().mode(k, T::zero()).f64() * st[it] / c00,
                        None => m.density(k, T::of(w)).f64(),
                    };
            }
        });
    Ok(out)
}

/// Draws a zero-mean Gaussian field with covariance `m` on the grid.
///
/// Real white noise is transformed, multiplied by √λ with
/// λ = C̃(k, ω)/(Δs^d Δt) on the frequency grid and transformed back; the
/// product is Hermitian, so the result is real. The covariance of the output
/// is the periodized kernel. Nugget noise is added per node afterwards.
pub fn simulate_field<T: Scalar>(
    m: &KernelModel<T>,
    g: &GridSpec,
) -> Result<FieldRealization<T>, SimulateError> {
    g.validate()?;
    if g.dim() != m.dim() {
        return Err(SimulateError::DimensionMismatch {
            grid: g.dim(),
            model: m.dim(),
        });
    }
    let n = g.len();
    let cell = g.ds.powi(g.dim() as i32) * g.dt;
    let lambda = spectrum_on_grid(m, g)?;
    let captured = lambda.iter().sum::<f64>() / cell / n as f64 / m.variance().f64();
    let warning = ((captured - 1.0).abs() > TRUNCATION_TOL).then_some(SpectralTruncationWarning {
        captured_fraction: captured,
    });

    let mut rng = ChaCha20Rng::seed_from_u64(g.seed);
    let mut buf: Vec<Complex<T>> = (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            Complex::new(T::of(x), T::zero())
        })
        .collect();
    let shape = g.shape();
    fft_nd(&mut buf, &shape, false);
    let inv_n = 1.0 / n as f64;
    buf.par_iter_mut()
        .zip(lambda.par_iter())
        .for_each(|(z, &l)| {
            let a = T::of((l / cell).max(0.0).sqrt() * inv_n);
            *z *= a;
        });
    fft_nd(&mut buf, &shape, true);

    let mut max_imag = 0.0f64;
    let mut ss = 0.0f64;
    for z in &buf {
        max_imag = max_imag.max(z.im.f64().abs());
        ss += z.re.f64() * z.re.f64();
    }
    let rms = (ss / n as f64).sqrt();
    let imag_ratio = if rms > 0.0 { max_imag / rms } else { 0.0 };

    let sd = m.nugget().f64().sqrt();
    let values: Vec<T> = if sd > 0.0 {
        buf.iter()
            .map(|z| {
                let e: f64 = StandardNormal.sample(&mut rng);
                z.re + T::of(sd * e)
            })
            .collect()
    } else {
        buf.iter().map(|z| z.re).collect()
    };
    Ok(FieldRealization {
        grid: g.clone(),
        values,
        model_json: m.to_json(),
        warning,
        imag_ratio,
    })
}

/// Lag in grid steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLag {
    pub t: isize,
    pub s: Vec<isize>,
}

impl<T: Scalar> FieldRealization<T> {
    pub fn shape(&self) -> Vec<usize> {
        self.grid.shape()
    }

    /// Value at (t, i1, ..., id).
    pub fn at(&self, index: &[usize]) -> T {
        let shape = self.shape();
        let mut flat = 0;
        for (i, n) in index.iter().zip(&shape) {
            flat = flat * n + i;
        }
        self.values[flat]
    }

    /// Little-endian f64 values in storage order.
    pub fn write_binary(&self, mut w: impl Write) -> std::io::Result<()> {
        let mut bytes = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.f64().to_le_bytes());
        }
        w.write_all(&bytes)
    }

    /// JSON sidecar describing the binary file.
    pub fn sidecar_json(&self) -> String {
        let model = serde_json::from_str(&self.model_json).unwrap_or(serde_json::Value::Null);
        let side = Sidecar {
            grid: self.grid.clone(),
            shape: self.shape(),
            layout: "C-order, t-major".into(),
            dtype: "float64-le".into(),
            generator: GENERATOR.into(),
            model,
            warning: self.warning,
        };
        crate::io::to_json(&side)
    }

    /// Reads a binary field with its sidecar.
    pub fn read(mut bin: impl Read, sidecar: &str) -> Result<Self, SimulateError> {
        let side: Sidecar =
            serde_json::from_str(sidecar).map_err(|e| SimulateError::Grid(e.to_string()))?;
        side.grid.validate()?;
        let mut bytes = Vec::new();
        bin.read_to_end(&mut bytes)
            .map_err(|e| SimulateError::Grid(e.to_string()))?;
        if bytes.len() != 8 * side.grid.len() {
            return Err(SimulateError::Grid(format!(
                "binary has {} bytes, grid needs {}",
                bytes.len(),
                8 * side.grid.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
            .collect();
        Ok(Self {
            grid: side.grid,
            values,
            model_json: side.model.to_string(),
            warning: side.warning,
            imag_ratio: 0.0,
        })
    }

    /// CSV with columns s1,...,sd,t,z.
    pub fn write_csv(&self, w: impl Write) -> std::io::Result<()> {
        let d = self.grid.dim();
        let mut header: Vec<String> = (1..=d).map(|i| format!("s{i}")).collect();
        header.extend(["t", "z"].map(String::from));
        let shape = self.shape();
        let rows = self.values.iter().enumerate().map(|(flat, v)| {
            let mut idx = vec![0usize; shape.len()];
            let mut rem = flat;
            for ax in (0..shape.len()).rev() {
                idx[ax] = rem % shape[ax];
                rem /= shape[ax];
            }
            let mut row: Vec<f64> = idx[1..].iter().map(|&i| i as f64 * self.grid.ds).collect();
            row.push(idx[0] as f64 * self.grid.dt);
            row.push(v.f64());
            row
        });
        write_csv(w, &header, rows)
    }
}

/// Biased (divide-by-N) covariance estimates Σ z(x) z(x+h) / N for a
/// zero-mean field, one per lag.
pub fn empirical_covariance<T: Scalar>(
    f: &FieldRealization<T>,
    lags: &[GridLag],
) -> Result<Vec<T>, SimulateError> {
    let shape = f.shape();
    let n = f.values.len();
    lags.iter()
        .map(|lag| {
            let mut h = vec![lag.t];
            h.extend(&lag.s);
            if h.len() != shape.len() || h.iter().zip(&shape).any(|(&x, &s)| x.unsigned_abs() >= s)
            {
                return Err(SimulateError::LagOutOfRange(h));
            }
            let mut offset = 0isize;
            for (x, &s) in h.iter().zip(&shape) {
                offset = offset * s as isize + x;
            }
            let mut acc = 0.0f64;
            let mut idx = vec![0usize; shape.len()];
            for flat in 0..n {
                let ok =
                    idx.iter().zip(&h).zip(&shape).all(|((&i, &x), &s)| {
                        (i as isize + x) >= 0 && ((i as isize + x) as usize) < s
                    });
                if ok {
                    acc += f.values[flat].f64() * f.values[(flat as isize + offset) as usize].f64();
                }
                for ax in (0..shape.len()).rev() {
                    idx[ax] += 1;
                    if idx[ax] < shape[ax] {
                        break;
                    }
                    idx[ax] = 0;
                }
            }
            Ok(T::of(acc / n as f64))
        })
        .collect()
}

/// Human-readable one-line summary of a realization.
pub fn summary<T: Scalar>(f: &FieldRealization<T>) -> String {
    let n = f.values.len() as f64;
    let mean = f.values.iter().map(|v| v.f64()).sum::<f64>() / n;
    let var = f
        .values
        .iter()
        .map(|v| (v.f64() - mean).powi(2))
        .sum::<f64>()
        / n;
    format!(
        "nodes={} mean={} variance={}",
        f.values.len(),
        fmt_f64(mean),
        fmt_f64(var)
    )
}
