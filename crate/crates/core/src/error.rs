use thiserror::Error;

/// Failures raised by the solver.
///
/// Abscissae and bounds are carried as `f64` so the error type does not
/// depend on the scalar the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no sign change on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("target {target} outside the range [{lo}, {hi}]")]
    Range { target: f64, lo: f64, hi: f64 },
    #[error("numerical failure at {at}: {what}")]
    Numerical { at: f64, what: String },
    #[error("regime mismatch: {0}")]
    Regime(String),
}

impl Error {
    pub(crate) fn numerical(at: f64, what: impl Into<String>) -> Self {
        Error::Numerical {
            at,
            what: what.into(),
        }
    }

    pub(crate) fn domain(what: impl Into<String>) -> Self {
        Error::Domain(what.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
