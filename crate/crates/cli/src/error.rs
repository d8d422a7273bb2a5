use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Solver(#[from] tfdw::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Exit status: 1 for bad input, 2 for solver failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Solver(e) => match e {
                tfdw::Error::Domain(_)
                | tfdw::Error::GridMismatch
                | tfdw::Error::NoSolutionInWindow { .. }
                | tfdw::Error::InvalidBracket(_) => 1,
                _ => 2,
            },
        }
    }
}
