use dirac_numerov::Error as CoreError;
use thiserror::Error;

/// Everything that ends a run early, by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit 1.
    #[error("configuration error: {0}")]
    Config(String),
    /// Exit 2.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Exit 3: the search completed and certified that no state exists.
    #[error("no bound state: {0}")]
    NotFound(String),
    /// Exit 2.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
            CliError::NotFound(_) => 3,
        }
    }
}

fn is_config_error(e: &CoreError) -> bool {
    match e {
        CoreError::InvalidConfig(_)
        | CoreError::InvalidGrid(_)
        | CoreError::EtaOutOfRange { .. }
        | CoreError::UnsupportedDimension { .. }
        | CoreError::SupercriticalCoupling { .. } => true,
        CoreError::AtEta { source, .. } => is_config_error(source),
        _ => false,
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if is_config_error(&e) {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}
