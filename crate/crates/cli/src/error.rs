use thiserror::Error;

/// Failures of the experiment runner, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unknown names, incompatible pairs, violated preconditions.
    #[error("configuration error: {0}")]
    Config(String),
    /// The computation itself failed (factorization, residual, quadrature).
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<lasserre_core::Error> for CliError {
    fn from(e: lasserre_core::Error) -> Self {
        use lasserre_core::Error as E;
        match e {
            E::Cholesky { .. }
            | E::Residual { .. }
            | E::QuadratureCertification { .. }
            | E::DegreeOverflow { .. }
            | E::OutOfRegime { .. }
            | E::ConvergedExactly { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
