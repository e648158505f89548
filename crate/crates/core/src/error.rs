use thiserror::Error;

/// Failures surfaced by the selection pipeline.
///
/// Variants split into two families: invalid inputs or configuration
/// (rejected before any numerics run) and numerical failures discovered
/// mid-computation. [`Error::is_validation`] reports which family a value
/// belongs to so callers can map errors onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NonPositiveDefinite { min_eigenvalue: f64 },

    #[error("design matrix is rank deficient (min singular value {min_singular:.3e})")]
    RankDeficient { min_singular: f64 },

    #[error("need at least {required} rows for this construction, got {n}")]
    InsufficientRows { n: usize, required: usize },

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("column {index} ({name}) has zero variance")]
    DegenerateColumn { index: usize, name: String },

    #[error("solver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("{k} studies exceed the supported maximum of {max} for parity combination")]
    KTooLarge { k: usize, max: usize },

    #[error("target FDR level q must lie in (0, 1), got {q}")]
    InvalidQ { q: f64 },

    #[error("autoregressive correlation must satisfy |rho| < 1, got {rho}")]
    InvalidRho { rho: f64 },

    #[error("signal blocks need {required} features but only {p} are available")]
    BlockOverflow { p: usize, required: usize },

    #[error("studies disagree on feature columns: {detail}")]
    ColumnMismatch { detail: String },

    #[error(
        "studies mix response families; pooling requires a single family (or force_continuous)"
    )]
    FamilyMismatch,

    #[error("screening size d must lie in 1..=p ({p}), got {d}")]
    InvalidD { d: usize, p: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "{failed} of {total} replicates failed ({first}); more than 5% invalidates the summary"
    )]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
}

impl Error {
    /// True for errors caused by invalid inputs or configuration rather
    /// than numerical breakdown during computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::KTooLarge { .. }
                | Error::InvalidQ { .. }
                | Error::InvalidRho { .. }
                | Error::BlockOverflow { .. }
                | Error::ColumnMismatch { .. }
                | Error::FamilyMismatch
                | Error::InvalidD { .. }
                | Error::InvalidConfig(_)
                | Error::InsufficientRows { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
