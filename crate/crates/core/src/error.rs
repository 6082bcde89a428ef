use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("state space too large: {states} states exceeds the limit of {limit}")]
    StateSpaceTooLarge { states: u128, limit: u128 },
    #[error("environment points live on different deme graphs")]
    MismatchedGraph,
    #[error("no closed form available: {0}")]
    Unavailable(String),
    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },
    #[error("matrix exponential overflowed: {0}")]
    NumericalOverflow(String),
    #[error("limit measure cannot be simulated exactly: {0}")]
    NotSimulatable(String),
    #[error("Psi realization does not match the model: {0}")]
    InconsistentRealization(String),
    #[error("ancestral state does not match the pedigree: {0}")]
    InconsistentPedigree(String),
}

impl Error {
    /// True for errors caused by bad user input rather than by the computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParameters(_) | Error::MismatchedGraph | Error::StateSpaceTooLarge { .. } | Error::Unavailable(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameters(_) => "InvalidParameters",
            Error::StateSpaceTooLarge { .. } => "StateSpaceTooLarge",
            Error::MismatchedGraph => "MismatchedGraph",
            Error::Unavailable(_) => "Unavailable",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::NumericalOverflow(_) => "NumericalOverflow",
            Error::NotSimulatable(_) => "NotSimulatable",
            Error::InconsistentRealization(_) => "InconsistentRealization",
            Error::InconsistentPedigree(_) => "InconsistentPedigree",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameters(msg.into())
}
