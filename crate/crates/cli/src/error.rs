use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Numerical(pmsqm::error::Error),

    #[error("{0} check(s) failed")]
    ChecksFailed(usize),

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::ChecksFailed(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<pmsqm::error::Error> for CliError {
    fn from(err: pmsqm::error::Error) -> Self {
        use pmsqm::error::Error as E;
        match err {
            E::InvalidParameter(_)
            | E::NotConfining(_)
            | E::InvalidModel(_)
            | E::Unsupported(_)
            | E::DimensionMismatch { .. } => CliError::Config(err.to_string()),
            _ => CliError::Numerical(err),
        }
    }
}
