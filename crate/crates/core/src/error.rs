use thiserror::Error;

/// Errors raised by the TQET engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^dagger| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("capacity exceeded: {n_sites} sites requested, dense kernel supports at most {max}")]
    Capacity { n_sites: usize, max: usize },

    #[error("site {site} out of range for a chain of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("invalid chain specification: {field}: {reason}")]
    InvalidSpec { field: &'static str, reason: String },

    #[error("eigensolver failed to converge")]
    EigenSolver,

    #[error("numerical consistency violated for {quantity}: residue {residue:e} exceeds {tolerance:e}")]
    NumericalConsistency {
        quantity: &'static str,
        residue: f64,
        tolerance: f64,
    },

    #[error("efficiency undefined: injected energy {e_input:e} is not positive")]
    UndefinedEfficiency { e_input: f64 },

    #[error("series length mismatch: {left} vs {right} time points")]
    GridMismatch { left: usize, right: usize },

    #[error("worker pool: {0}")]
    WorkerPool(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
