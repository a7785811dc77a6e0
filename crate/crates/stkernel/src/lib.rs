//! Non-separable space-time covariance kernels built from a damped harmonic
//! oscillator whose parameters depend on spatial wavenumber, together with
//! Ornstein-Uhlenbeck variants, a Hankel-quadrature oracle, Gaussian-process
//! prediction, FFT field simulation and variogram fitting.
//!
//! Numerical routines are generic over [`Scalar`] (`f32`, `f64`); the aliases
//! at the crate root fix `f64`.

pub mod error;
pub mod estimate;
pub mod gp;
pub mod io;
pub(crate) mod jet;
pub mod kernel;
pub mod presets;
pub mod scalar;
pub mod simulate;
pub mod special;
pub mod spectral;

pub use error::{EstimateError, GpError, KernelError, ParamError, SimulateError, SpectralError};
pub use kernel::{
    BaseKernel, Damping, Dispersion, InteractionFunctions, KernelModel, LdhoParams, OuParams,
    Regime, SpaceTimeCovariance,
};
pub use scalar::Scalar;

pub type Ldho = LdhoParams<f64>;
pub type Ou = OuParams<f64>;
pub type Model = KernelModel<f64>;
