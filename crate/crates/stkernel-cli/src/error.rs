use std::fmt;

use stkernel::{EstimateError, GpError, KernelError, ParamError, SimulateError, SpectralError};

/// Failure of a command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid arguments, files or parameters (exit 1).
    Config(String),
    /// A numerical routine failed on valid input (exit 2).
    Numerical(String),
    /// A verification check failed (exit 3).
    Check(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Numerical(_) => 2,
            Self::Check(_) => 3,
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        Self::Config(msg.to_string())
    }

    /// Prefixes the message, keeping the class.
    pub fn context(self, what: impl fmt::Display) -> Self {
        match self {
            Self::Config(m) => Self::Config(format!("{what}: {m}")),
            Self::Numerical(m) => Self::Numerical(format!("{what}: {m}")),
            Self::Check(m) => Self::Check(format!("{what}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::Check(m) => write!(f, "check failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::DegenerateMarginal { .. } => Self::Numerical(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::QuadratureFailure { .. } => Self::Numerical(e.to_string()),
            SpectralError::Kernel(k) => k.into(),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        match e {
            GpError::NotPositiveDefinite { .. } | GpError::NegativeVariance { .. } => {
                Self::Numerical(e.to_string())
            }
            GpError::Kernel(k) => k.into(),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        match e {
            SimulateError::Spectral(s) => s.into(),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::AllBinsSkipped => Self::Numerical(e.to_string()),
            EstimateError::Kernel(k) => k.into(),
            _ => Self::Config(e.to_string()),
        }
    }
}
