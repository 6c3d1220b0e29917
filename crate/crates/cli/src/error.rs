use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing flags, or a malformed config file.
    Usage(String),
    /// The library rejected the inputs or a check failed.
    Domain(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<saddle_pep::Error> for CliError {
    fn from(e: saddle_pep::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
