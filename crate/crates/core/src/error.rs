use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("measure is the Dirac mass at the trivial character (phi is constant)")]
    ConstantFunction,

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("not positive definite: minimum eigenvalue {min_eigenvalue:e} on a subset of {} elements", subset.len())]
    NotPositiveDefinite {
        subset: Vec<usize>,
        min_eigenvalue: f64,
    },

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("the trivial character lies in the numerical support (no spectral gap)")]
    NoGap,

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("measure carries an atom at the trivial character")]
    AtomAtTrivial,

    #[error("grid resolves only {usable} shells, {requested} requested")]
    Resolution { requested: usize, usable: usize },
}

impl Error {
    /// Stable identifier, used by the CLI when reporting precondition failures.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::ConstantFunction => "constant-function",
            Error::WindowTooSmall(_) => "window-too-small",
            Error::NotPositiveDefinite { .. } => "not-positive-definite",
            Error::InconsistentInput(_) => "inconsistent-input",
            Error::NoGap => "no-gap",
            Error::WrongRegime(_) => "wrong-regime",
            Error::AtomAtTrivial => "atom-at-trivial",
            Error::Resolution { .. } => "resolution",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
