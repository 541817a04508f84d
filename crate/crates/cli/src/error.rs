use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Solver(#[from] divopt::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write output: {0}")]
    Write(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    Config(#[from] serde_json::Error),
    #[error("verification failed")]
    Verification,
}

impl CliError {
    /// 1 verification failure, 2 usage or domain error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use divopt::Error as E;
        match self {
            CliError::Verification => 1,
            CliError::Solver(E::Numerical { .. } | E::Bracket { .. } | E::Range { .. }) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
