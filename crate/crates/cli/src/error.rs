use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] dqaem::Error),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn input(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Input {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// 1 for usage, I/O and schema problems, 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        use dqaem::Error as E;
        match self {
            CliError::Numerical(_) => 2,
            CliError::Model(
                E::SingularCovariance(_)
                | E::EmptyComponent { .. }
                | E::NumericalRange { .. }
                | E::EmptyReport,
            ) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
