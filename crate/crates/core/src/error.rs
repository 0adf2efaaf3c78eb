use thiserror::Error;

/// Errors raised by the landscape laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("operator is not Hermitian: {0}")]
    NonHermitian(String),

    #[error("dense path limited to {max} qubits, got {n}")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("degenerate spectrum: all eigenvalues equal {0}")]
    DegenerateSpectrum(f64),

    #[error("operator does not conserve particle number (max leak {0:e})")]
    NumberNotConserved(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("point {x} outside the domain {domain}")]
    OutsideDomain { x: f64, domain: String },

    #[error("bracketing failure: {0}")]
    Bracketing(String),

    #[error("spectral measure normalization failed: mass {mass}")]
    Normalization { mass: f64 },
}

impl Error {
    /// True for failures caused by bad inputs rather than numerics.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::SizeMismatch { .. }
                | Error::InvalidArgument(_)
                | Error::Parse(_)
                | Error::DimensionTooLarge { .. }
                | Error::OutsideDomain { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
