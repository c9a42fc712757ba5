use thiserror::Error;

use crate::minimizer::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// `∫u² = 0`: the matter field has collapsed.
    #[error("zero mass: the matter field vanishes identically")]
    ZeroMass,

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("maximum iterations reached without convergence")]
    MaxIterations(Box<SolveReport>),

    #[error("energy became non-finite during minimization")]
    EnergyNonFinite,

    #[error("trial torus does not fit in the grid: {0}")]
    DomainTooSmall(String),

    #[error("potential is not solver-eligible: {0}")]
    IneligiblePotential(String),

    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// Short machine-readable name used in reports and exit-code mapping.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::ZeroMass => "ZeroMass",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::MaxIterations(_) => "MaxIterations",
            Error::EnergyNonFinite => "EnergyNonFinite",
            Error::DomainTooSmall(_) => "DomainTooSmall",
            Error::IneligiblePotential(_) => "IneligiblePotential",
            Error::Config { .. } => "ConfigError",
            Error::Format(_) => "FormatError",
            Error::Io(_) => "IoError",
            Error::Csv(_) => "IoError",
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Format(_) | Error::Io(_) | Error::Csv(_) => 3,
            Error::ZeroMass => 4,
            Error::NoConvergence { .. } | Error::MaxIterations(_) => 5,
            Error::EnergyNonFinite => 6,
            Error::DomainTooSmall(_) | Error::InvalidGrid(_) => 7,
            Error::IneligiblePotential(_) => 8,
        }
    }
}
