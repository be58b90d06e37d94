use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files or specs; exit code 2.
    Usage(String),
    Core(sicf::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sicf::Error> for CliError {
    fn from(e: sicf::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(sicf::Error::Io(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;
