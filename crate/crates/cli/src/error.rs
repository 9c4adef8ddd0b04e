use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Solver(compact_scheme::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for anything the user can fix in the config, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<compact_scheme::Error> for CliError {
    fn from(e: compact_scheme::Error) -> Self {
        use compact_scheme::Error as E;
        match e {
            E::InvalidParameter(_) | E::DegenerateDomain { .. } | E::IncompatibleGrids(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Solver(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
