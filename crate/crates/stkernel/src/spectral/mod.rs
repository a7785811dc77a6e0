//! Spectral densities, temporal Fourier modes and the radial quadrature
//! oracle that inverts them.
//!
//! Every kernel C(r, τ) in [`crate::kernel`] is the d-dimensional radial
//! inverse Fourier transform of a temporal Fourier mode m(k, τ):
//!
//! C(r, τ) = (2π)^{-d/2} ∫₀^∞ k^{d-1} (kr)^{-ν} J_ν(kr) m(k, τ) dk, ν = d/2 - 1.
//!
//! [`hankel_ift_oracle`] evaluates that integral numerically, independently of
//! the closed forms.

mod quadrature;

pub use quadrature::{integrate_panels, Estimate, QuadratureScheme, QuadratureSpec};

use serde::{Deserialize, Serialize};

use crate::error::SpectralError;
use crate::kernel::{
    classify_regime, temporal_kernel, temporal_shape, BaseKernel, Dispersion, KernelModel,
    LdhoParams, OuParams, SpaceTimeCovariance,
};
use crate::scalar::{c, Scalar};
use crate::special::{bessel_zero, reduced_bessel, sphere_area, BesselOrder};

/// Relative size of the spectral envelope at the truncation wavenumber.
pub const ENVELOPE_CUTOFF: f64 = 1e-14;

/// C̃(ω) = σ²/(τ_c²(ω² - ω₀²)² + ω²) with σ² = 2 c0 ω₀² τ_c.
pub fn temporal_spectral_density<T: Scalar>(p: &LdhoParams<T>, omega: T) -> T {
    let w0 = p.omega0();
    let tc = p.tau_c();
    let s = omega * omega - w0 * w0;
    p.sigma0_sq() / (tc * tc * s * s + omega * omega)
}

fn dispersion_terms<T: Scalar>(dispersion: Dispersion, scale: T, decay: T, k: T) -> (T, T) {
    match dispersion {
        Dispersion::Quadratic => (T::one() + scale * k * k, (-decay * k * k).exp()),
        Dispersion::Linear => (T::one() + scale * k, (-decay * k).exp()),
    }
}

/// C̃(k, ω) of the oscillator kernels: the temporal density with
/// ω₀ → ω₀B(k), τ_c → τ_c/B(k), σ² → σ₀² A(k).
pub fn st_spectral_density<T: Scalar>(p: &LdhoParams<T>, k: T, omega: T) -> T {
    let (b, g) = dispersion_terms(p.dispersion(), p.interaction(), p.epsilon(), k.abs());
    let w0 = p.omega0() * b;
    let tc = p.tau_c() / b;
    let s = omega * omega - w0 * w0;
    p.sigma0_sq() * b * g / (tc * tc * s * s + omega * omega)
}

/// C̃(k, ω) of the O-U kernels.
pub fn ou_spectral_density<T: Scalar>(p: &OuParams<T>, k: T, omega: T) -> T {
    let (rate, amp) = ou_terms(p, k.abs());
    p.sigma0_sq() * amp * (rate + rate) / (rate * rate + omega * omega)
}

fn ou_terms<T: Scalar>(p: &OuParams<T>, k: T) -> (T, T) {
    let (b, amp) = match p.dispersion() {
        Dispersion::Quadratic => (p.a() + p.scale() * k * k, (-p.beta() * k * k).exp()),
        Dispersion::Linear => (p.a() + p.scale() * k, (-p.beta() * k).exp()),
    };
    (b / p.tau_c(), amp)
}

/// A kernel described through its spectral representation.
pub trait SpectralModel<T: Scalar> {
    fn spectral_dim(&self) -> usize;

    /// Temporal Fourier mode m(k, τ), the inverse transform of C̃(k, ω) over ω.
    fn mode(&self, k: T, tau: T) -> T;

    /// Space-time spectral density C̃(k, ω).
    fn density(&self, k: T, omega: T) -> T;

    /// Wavenumber beyond which |m(k, τ)| k^{d-1} stays below
    /// [`ENVELOPE_CUTOFF`] times m(0, 0), for every τ.
    fn k_max(&self) -> f64;
}

/// k_max for an envelope e^{-a k^p} k^{d-1}.
fn envelope_k_max(decay: f64, power: i32, dim: usize) -> f64 {
    let target = -ENVELOPE_CUTOFF.ln();
    let mut k = (target / decay).powf(1.0 / power as f64);
    let log_env = |k: f64| -decay * k.powi(power) + (dim as f64 - 1.0) * k.max(1.0).ln();
    while log_env(k) > -target {
        k *= 1.05;
    }
    k
}

impl<T: Scalar> SpectralModel<T> for LdhoParams<T> {
    fn spectral_dim(&self) -> usize {
        self.dim()
    }

    fn mode(&self, k: T, tau: T) -> T {
        let (b, g) = dispersion_terms(
            self.dispersion(),
            self.interaction(),
            self.epsilon(),
            k.abs(),
        );
        self.c0()
            * g
            * temporal_shape(
                classify_regime(self),
                self.tau_c() / b,
                self.omega_d_raw() * b,
                tau,
            )
    }

    fn density(&self, k: T, omega: T) -> T {
        st_spectral_density(self, k, omega)
    }

    fn k_max(&self) -> f64 {
        envelope_k_max(self.epsilon().f64(), self.dispersion().power(), self.dim())
    }
}

impl<T: Scalar> SpectralModel<T> for OuParams<T> {
    fn spectral_dim(&self) -> usize {
        self.dim()
    }

    fn mode(&self, k: T, tau: T) -> T {
        let (rate, amp) = ou_terms(self, k.abs());
        self.sigma0_sq() * amp * (-rate * tau.abs()).exp()
    }

    fn density(&self, k: T, omega: T) -> T {
        ou_spectral_density(self, k, omega)
    }

    fn k_max(&self) -> f64 {
        envelope_k_max(self.beta().f64(), self.dispersion().power(), self.dim())
    }
}

impl<T: Scalar> SpectralModel<T> for BaseKernel<T> {
    fn spectral_dim(&self) -> usize {
        match self {
            Self::Ldho(p) => p.dim(),
            Self::Ou(p) => p.dim(),
        }
    }

    fn mode(&self, k: T, tau: T) -> T {
        match self {
            Self::Ldho(p) => p.mode(k, tau),
            Self::Ou(p) => p.mode(k, tau),
        }
    }

    fn density(&self, k: T, omega: T) -> T {
        match self {
            Self::Ldho(p) => p.density(k, omega),
            Self::Ou(p) => p.density(k, omega),
        }
    }

    fn k_max(&self) -> f64 {
        match self {
            Self::Ldho(p) => SpectralModel::<T>::k_max(p),
            Self::Ou(p) => SpectralModel::<T>::k_max(p),
        }
    }
}

/// A separable surrogate has mode m(k, 0) C_T(τ)/C(0,0) and density
/// m(k, 0) C̃_T(ω)/C(0,0); the temporal marginal spectrum C̃_T is computed by
/// radial quadrature of the base density.
impl<T: Scalar> SpectralModel<T> for KernelModel<T> {
    fn spectral_dim(&self) -> usize {
        self.dim()
    }

    fn mode(&self, k: T, tau: T) -> T {
        if self.is_separable_surrogate() {
            self.base().mode(k, T::zero()) * self.marginal_temporal(tau) / self.variance()
        } else {
            self.base().mode(k, tau)
        }
    }

    fn density(&self, k: T, omega: T) -> T {
        if self.is_separable_surrogate() {
            let st = temporal_marginal_spectrum(self.base(), omega, &QuadratureSpec::default())
                .map(|e| e.value)
                .unwrap_or_else(|_| T::nan());
            self.base().mode(k, T::zero()) * st / self.variance()
        } else {
            self.base().density(k, omega)
        }
    }

    fn k_max(&self) -> f64 {
        SpectralModel::<T>::k_max(self.base())
    }
}

/// Temporal Fourier mode of a kernel.
pub fn temporal_fourier_mode<T: Scalar, M: SpectralModel<T> + ?Sized>(m: &M, k: T, tau: T) -> T {
    m.mode(k, tau)
}

/// C̃_T(ω) = |S^{d-1}|/(2π)^d ∫₀^∞ k^{d-1} C̃(k, ω) dk, the spectrum of C_T.
pub fn temporal_marginal_spectrum<T: Scalar, M: SpectralModel<T> + ?Sized>(
    m: &M,
    omega: T,
    q: &QuadratureSpec,
) -> Result<Estimate<T>, SpectralError> {
    q.validate()?;
    let d = m.spectral_dim();
    let k_max = q.k_max.unwrap_or_else(|| m.k_max());
    let n = (q.node_count / 32).max(2);
    let breaks: Vec<T> = (0..=n)
        .map(|i| T::of(k_max * i as f64 / n as f64))
        .collect();
    let dm1 = d as i32 - 1;
    let f = |k: T| k.powi(dm1) * m.density(k, omega);
    let est = integrate_panels(&breaks, &f, q)?;
    let norm = T::of(sphere_area(d) / (2.0 * std::f64::consts::PI).powi(d as i32));
    Ok(Estimate {
        value: est.value * norm,
        error: est.error * norm,
        panels: est.panels,
    })
}

/// Numerical radial inverse Fourier transform of a temporal mode.
///
/// Integrates (2π)^{-d/2} k^{d-1} (kr)^{-ν} J_ν(kr) mode(k, τ) over
/// [0, k_max], with panels split at the zeros of J_ν(kr). `q.k_max` must be
/// set; [`oracle_kernel`] fills it from a model's envelope.
pub fn hankel_ift_oracle<T: Scalar>(
    mode: impl Fn(T, T) -> T,
    d: usize,
    r: T,
    tau: T,
    q: &QuadratureSpec,
) -> Result<Estimate<T>, SpectralError> {
    q.validate()?;
    let order = BesselOrder::for_dim(d).ok_or(SpectralError::UnsupportedDimension(d))?;
    if r < T::zero() || r.is_nan() {
        return Err(crate::error::KernelError::Domain(r.f64()).into());
    }
    let k_max = q.k_max.ok_or(SpectralError::Spec("k_max is required"))?;
    let rf = r.f64();
    let min_panels = (q.node_count / 32).max(2);
    let mut breaks: Vec<f64> = (0..=min_panels)
        .map(|i| k_max * i as f64 / min_panels as f64)
        .collect();
    if rf > 0.0 {
        let mut n = 1;
        loop {
            let kz = bessel_zero(order, n) / rf;
            if kz >= k_max {
                break;
            }
            breaks.push(kz);
            n += 1;
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * k_max);
    }
    let breaks: Vec<T> = breaks.into_iter().map(T::of).collect();
    let dm1 = d as i32 - 1;
    let f = |k: T| k.powi(dm1) * reduced_bessel(order, k * r) * mode(k, tau);
    let est = integrate_panels(&breaks, &f, q)?;
    let norm = T::of((2.0 * std::f64::consts::PI).powf(-0.5 * d as f64));
    Ok(Estimate {
        value: est.value * norm,
        error: est.error * norm,
        panels: est.panels,
    })
}

/// [`hankel_ift_oracle`] applied to a model's own temporal mode.
pub fn oracle_kernel<T: Scalar, M: SpectralModel<T> + ?Sized>(
    m: &M,
    r: T,
    tau: T,
    q: &QuadratureSpec,
) -> Result<Estimate<T>, SpectralError> {
    let q = QuadratureSpec {
        k_max: Some(q.k_max.unwrap_or_else(|| m.k_max())),
        ..*q
    };
    hankel_ift_oracle(|k, t| m.mode(k, t), m.spectral_dim(), r, tau, &q)
}

/// Outcome of a Bochner admissibility scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub min_spectral_value: f64,
    /// min(p_k - d, p_ω - 1): positive when both tail exponents indicate an
    /// integrable density.
    pub integrability_proxy: f64,
    /// Power-law decay exponent of the ω-integrated density at the largest
    /// scanned k.
    pub k_tail_exponent: f64,
    /// Power-law decay exponent of C̃(k₀, ω) at the largest scanned ω.
    pub omega_tail_exponent: f64,
    pub pass: bool,
}

fn tail_exponent(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    if y1 <= 0.0 || y1 < y0 * 1e-300 {
        return f64::INFINITY;
    }
    -(y1 / y0).ln() / (x1 / x0).ln()
}

/// Scans C̃(k, ω) on a grid for negativity and estimates its tail decay.
///
/// `k_grid` and `omega_grid` must be increasing and positive. The k-tail is
/// read from the ω-integrated density, which equals 2π m(k, 0).
pub fn admissibility_scan<T: Scalar, M: SpectralModel<T> + ?Sized>(
    m: &M,
    k_grid: &[T],
    omega_grid: &[T],
) -> AdmissibilityReport {
    assert!(
        k_grid.len() >= 2 && omega_grid.len() >= 2,
        "grids need at least two points"
    );
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for &k in k_grid {
        for &w in omega_grid {
            let v = m.density(k, w).f64();
            min = min.min(v);
            max = max.max(v.abs());
        }
    }
    // ∫ C̃(k, ω) dω = 2π m(k, 0)
    let marginal: Vec<f64> = k_grid
        .iter()
        .map(|&k| m.mode(k, T::zero()).f64().abs())
        .collect();
    let n = k_grid.len();
    let p_k = tail_exponent(
        k_grid[n - 2].f64(),
        marginal[n - 2],
        k_grid[n - 1].f64(),
        marginal[n - 1],
    );
    let nw = omega_grid.len();
    let k0 = k_grid[0];
    let p_w = tail_exponent(
        omega_grid[nw - 2].f64(),
        m.density(k0, omega_grid[nw - 2]).f64(),
        omega_grid[nw - 1].f64(),
        m.density(k0, omega_grid[nw - 1]).f64(),
    );
    let proxy = (p_k - m.spectral_dim() as f64).min(p_w - 1.0);
    let pass = min >= -1e-12 * max && proxy > 0.0;
    AdmissibilityReport {
        min_spectral_value: min,
        integrability_proxy: proxy,
        k_tail_exponent: p_k,
        omega_tail_exponent: p_w,
        pass,
    }
}

/// Central-difference residual of C'''' + (2ω₀² - 1/τ_c²) C'' + ω₀⁴ C for the
/// temporal kernel, using the 5-point fourth and 3-point second difference
/// (both O(h²)).
pub fn ode_residual<T: Scalar>(p: &LdhoParams<T>, tau: T, h: T) -> Result<T, SpectralError> {
    let bound = c::<T>(5.0) * h.abs();
    if tau.abs() <= bound {
        return Err(SpectralError::Domain {
            tau: tau.f64(),
            bound: bound.f64(),
        });
    }
    let f = |t: T| temporal_kernel(p, t);
    let two = c::<T>(2.0);
    let (m2, m1, z, p1, p2) = (
        f(tau - two * h),
        f(tau - h),
        f(tau),
        f(tau + h),
        f(tau + two * h),
    );
    let h2 = h * h;
    let d4 = (m2 - c::<T>(4.0) * m1 + c::<T>(6.0) * z - c::<T>(4.0) * p1 + p2) / (h2 * h2);
    let d2 = (m1 - two * z + p1) / h2;
    let w2 = p.omega0() * p.omega0();
    let tc = p.tau_c();
    Ok(d4 + (two * w2 - (tc * tc).recip()) * d2 + w2 * w2 * z)
}
