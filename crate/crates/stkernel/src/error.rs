use thiserror::Error;

/// Rejected hyperparameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{name}` must be positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("spatial dimension must be at least 1")]
    ZeroDimension,
    #[error(
        "damped frequency {omega_d} is incompatible with the {regime} regime at tau_c = {tau_c}"
    )]
    RegimeMismatch {
        regime: &'static str,
        omega_d: f64,
        tau_c: f64,
    },
    #[error("length-scale vector has {got} entries, expected {expected}")]
    LengthScales { expected: usize, got: usize },
    #[error("a separable surrogate cannot wrap another surrogate")]
    NestedSurrogate,
    #[error("invalid model description: {0}")]
    Json(String),
}

/// Failures of kernel evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("spatial lag must be non-negative, got {0}")]
    Domain(f64),
    #[error("operation requires {required}, model is {actual}")]
    Regime {
        required: &'static str,
        actual: &'static str,
    },
    #[error("marginal covariance vanishes at (r, tau) = ({r}, {tau})")]
    DegenerateMarginal { r: f64, tau: f64 },
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Failures of the spectral routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e} after {panels} panels")]
    QuadratureFailure {
        estimate: f64,
        tolerance: f64,
        panels: usize,
    },
    #[error("invalid quadrature specification: {0}")]
    Spec(&'static str),
    #[error("no radial Bessel kernel for dimension {0}; supported dimensions are 1 to 5")]
    UnsupportedDimension(usize),
    #[error("step condition violated: |tau| = {tau} must exceed 5h = {bound}")]
    Domain { tau: f64, bound: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Failures of Gram assembly and conditioning.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("point has {got} spatial coordinates, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("predictive variance {value:e} at query {index} is negative beyond tolerance")]
    NegativeVariance { index: usize, value: f64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has {points} points but {values} values")]
    LengthMismatch { points: usize, values: usize },
    #[error("dataset file: {0}")]
    Io(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Failures of grid simulation and grid statistics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulateError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("grid has {grid} spatial axes, model dimension is {model}")]
    DimensionMismatch { grid: usize, model: usize },
    #[error("lag {0:?} is outside the grid")]
    LagOutOfRange(Vec<isize>),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Failures of variogram estimation and fitting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("invalid data: {0}")]
    Data(String),
    #[error("no bins received any pairs")]
    NoPairs,
    #[error("every bin was skipped because the model semivariance is below tolerance")]
    AllBinsSkipped,
    #[error("variogram kind {got} cannot be used here, expected {expected}")]
    KindMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Param(#[from] ParamError),
}
