use thiserror::Error;

/// Failures surfaced by the command line, each mapped to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] cohortsim::Error),
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use cohortsim::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::Config(_)) => EXIT_CONFIG,
            CliError::Core(E::Numerical(_) | E::NotPsd { .. } | E::UndefinedCorrelation(_) | E::UndefinedTest(_)) => EXIT_NUMERICAL,
            _ => EXIT_DATA,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
