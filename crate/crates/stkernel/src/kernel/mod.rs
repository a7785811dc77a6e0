//! Closed-form covariance kernels.
//!
//! Lags are a radial spatial distance `r ≥ 0` and a signed time lag `tau`;
//! every kernel depends on `|tau|` only.

mod ldho;
mod model;
mod ou;

pub(crate) use ldho::temporal_shape;
pub use ldho::{
    classify_regime, damped_frequency, fast_slow_times, interaction_functions_quadratic,
    ldho_kernel, ldho_kernel_in_regime, temporal_kernel, vlrt_kernel,
};
pub use model::{
    interaction_ratio, separable_surrogate, BaseKernel, Family, KernelModel, ModelSpec, ParamSpec,
    DEGENERATE_MARGINAL_TOL,
};
pub use ou::ou_kernel;

use serde::{Deserialize, Serialize};

use crate::error::{KernelError, ParamError};
use crate::scalar::Scalar;

/// Tolerance on ω₀τ_c - 1/2 inside which damping is treated as critical.
pub const CRITICAL_BAND: f64 = 1e-9;

/// How the oscillator parameters depend on the wavenumber k.
///
/// Quadratic: B(k) = 1 + b k², A(k) = B(k) e^{-εk²}.
/// Linear: B(k) = 1 + ξ k, A(k) = B(k) e^{-εk}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dispersion {
    Quadratic,
    Linear,
}

impl Dispersion {
    /// Exponent p of the wavenumber in B(k) = 1 + s k^p.
    pub fn power(self) -> i32 {
        match self {
            Self::Quadratic => 2,
            Self::Linear => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Quadratic => "quadratic",
            Self::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Underdamped,
    Critical,
    Overdamped,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Underdamped, Regime::Critical, Regime::Overdamped];

    pub fn name(self) -> &'static str {
        match self {
            Self::Underdamped => "underdamped",
            Self::Critical => "critical",
            Self::Overdamped => "overdamped",
        }
    }
}

/// Oscillator frequency given either as ω₀ or as |ω_d| with its regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping<T> {
    Natural(T),
    Damped { omega_d: T, regime: Regime },
}

/// Hyperparameters of the damped-oscillator kernels.
///
/// Units: `c0` [z² L^d], `tau_c` [T], `omega0` [1/T], `epsilon` and
/// `interaction` [L²] for quadratic dispersion, [L] for linear.
#[derive(Debug, Clone, PartialEq)]
pub struct LdhoParams<T> {
    c0: T,
    tau_c: T,
    omega0: T,
    // |ω_d| kept at full precision when supplied directly
    omega_d: T,
    epsilon: T,
    interaction: T,
    dispersion: Dispersion,
    dim: usize,
}

pub(crate) fn check_positive<T: Scalar>(name: &'static str, v: T) -> Result<(), ParamError> {
    if !v.is_finite() {
        return Err(ParamError::NotFinite {
            name,
            value: v.f64(),
        });
    }
    if v <= T::zero() {
        return Err(ParamError::NotPositive {
            name,
            value: v.f64(),
        });
    }
    Ok(())
}

pub(crate) fn check_non_negative<T: Scalar>(name: &'static str, v: T) -> Result<(), ParamError> {
    if !v.is_finite() {
        return Err(ParamError::NotFinite {
            name,
            value: v.f64(),
        });
    }
    if v < T::zero() {
        return Err(ParamError::Negative {
            name,
            value: v.f64(),
        });
    }
    Ok(())
}

impl<T: Scalar> LdhoParams<T> {
    pub fn new(
        dispersion: Dispersion,
        dim: usize,
        c0: T,
        tau_c: T,
        damping: Damping<T>,
        epsilon: T,
        interaction: T,
    ) -> Result<Self, ParamError> {
        if dim == 0 {
            return Err(ParamError::ZeroDimension);
        }
        check_positive("c0", c0)?;
        check_positive("tau_c", tau_c)?;
        check_positive("epsilon", epsilon)?;
        check_non_negative("b_or_xi", interaction)?;
        let h = (tau_c + tau_c).recip();
        let (omega0, omega_d) = match damping {
            Damping::Natural(w0) => {
                check_positive("omega0", w0)?;
                let wd = ((w0 - h) * (w0 + h)).abs().sqrt();
                (w0, wd)
            }
            Damping::Damped { omega_d, regime } => {
                check_non_negative("omega_d", omega_d)?;
                let mismatch = || ParamError::RegimeMismatch {
                    regime: regime.name(),
                    omega_d: omega_d.f64(),
                    tau_c: tau_c.f64(),
                };
                match regime {
                    Regime::Underdamped => {
                        if omega_d <= T::zero() {
                            return Err(mismatch());
                        }
                        ((omega_d * omega_d + h * h).sqrt(), omega_d)
                    }
                    Regime::Critical => (h, T::zero()),
                    Regime::Overdamped => {
                        if omega_d >= h {
                            return Err(mismatch());
                        }
                        (((h - omega_d) * (h + omega_d)).sqrt(), omega_d)
                    }
                }
            }
        };
        Ok(Self {
            c0,
            tau_c,
            omega0,
            omega_d,
            epsilon,
            interaction,
            dispersion,
            dim,
        })
    }

    pub fn c0(&self) -> T {
        self.c0
    }
    pub fn tau_c(&self) -> T {
        self.tau_c
    }
    pub fn omega0(&self) -> T {
        self.omega0
    }
    pub fn epsilon(&self) -> T {
        self.epsilon
    }
    /// b for quadratic dispersion, ξ for linear.
    pub fn interaction(&self) -> T {
        self.interaction
    }
    pub fn dispersion(&self) -> Dispersion {
        self.dispersion
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn regime(&self) -> Regime {
        classify_regime(self)
    }

    /// |ω_d| as stored, without snapping the critical band to zero.
    pub(crate) fn omega_d_raw(&self) -> T {
        self.omega_d
    }

    /// σ₀² = 2 c0 ω₀² τ_c, the white-noise amplitude at k = 0.
    pub fn sigma0_sq(&self) -> T {
        T::of(2.0) * self.c0 * self.omega0 * self.omega0 * self.tau_c
    }

    /// Same hyperparameters with a different amplitude.
    pub fn with_c0(&self, c0: T) -> Result<Self, ParamError> {
        check_positive("c0", c0)?;
        Ok(Self { c0, ..self.clone() })
    }

    /// Same hyperparameters with a different interaction scale.
    pub fn with_interaction(&self, s: T) -> Result<Self, ParamError> {
        check_non_negative("b_or_xi", s)?;
        Ok(Self {
            interaction: s,
            ..self.clone()
        })
    }
}

/// Hyperparameters of the Ornstein-Uhlenbeck kernels.
///
/// The temporal Fourier mode is σ₀² A(k) e^{-|τ| B(k)/τ_c} with
/// B(k) = a + b k² and A(k) = e^{-βk²} (quadratic), or B(k) = a + ξk and
/// A(k) = e^{-βk} (linear).
#[derive(Debug, Clone, PartialEq)]
pub struct OuParams<T> {
    sigma0_sq: T,
    tau_c: T,
    a: T,
    scale: T,
    beta: T,
    dispersion: Dispersion,
    dim: usize,
}

impl<T: Scalar> OuParams<T> {
    pub fn new(
        dispersion: Dispersion,
        dim: usize,
        sigma0_sq: T,
        tau_c: T,
        a: T,
        scale: T,
        beta: T,
    ) -> Result<Self, ParamError> {
        if dim == 0 {
            return Err(ParamError::ZeroDimension);
        }
        check_positive("sigma0_sq", sigma0_sq)?;
        check_positive("tau_c", tau_c)?;
        check_positive("a", a)?;
        check_non_negative("scale", scale)?;
        check_positive("beta", beta)?;
        Ok(Self {
            sigma0_sq,
            tau_c,
            a,
            scale,
            beta,
            dispersion,
            dim,
        })
    }

    pub fn sigma0_sq(&self) -> T {
        self.sigma0_sq
    }
    pub fn tau_c(&self) -> T {
        self.tau_c
    }
    pub fn a(&self) -> T {
        self.a
    }
    pub fn scale(&self) -> T {
        self.scale
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    pub fn dispersion(&self) -> Dispersion {
        self.dispersion
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// κ², λ² and φ of the quadratic underdamped kernel at a given time lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionFunctions<T> {
    pub kappa_sq: T,
    pub lambda_sq: T,
    pub phi: T,
}

/// A stationary, radially symmetric space-time covariance.
pub trait SpaceTimeCovariance<T: Scalar> {
    fn dim(&self) -> usize;

    /// C(r, τ); fails for r < 0.
    fn covariance(&self, r: T, tau: T) -> Result<T, KernelError>;

    /// C_S(r) = C(r, 0).
    fn marginal_spatial(&self, r: T) -> T;

    /// C_T(τ) = C(0, τ).
    fn marginal_temporal(&self, tau: T) -> T;

    /// C(0, 0).
    fn variance(&self) -> T {
        self.marginal_spatial(T::zero())
    }
}

/// C_S(r) of any kernel.
pub fn marginal_spatial<T: Scalar, K: SpaceTimeCovariance<T> + ?Sized>(k: &K, r: T) -> T {
    k.marginal_spatial(r)
}

/// C_T(τ) of any kernel.
pub fn marginal_temporal<T: Scalar, K: SpaceTimeCovariance<T> + ?Sized>(k: &K, tau: T) -> T {
    k.marginal_temporal(tau)
}

pub(crate) fn check_lag<T: Scalar>(r: T) -> Result<(), KernelError> {
    if r < T::zero() || r.is_nan() {
        Err(KernelError::Domain(r.f64()))
    } else {
        Ok(())
    }
}
