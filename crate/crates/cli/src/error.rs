use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_DATA: u8 = 4;
pub const EXIT_IO: u8 = 5;
pub const EXIT_TRIVIAL: u8 = 6;

#[derive(Debug)]
pub enum CliError {
    Core(tarstop::Error),
    Usage(String),
    Data(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// The requested plan certifies nothing; the message carries the advisory.
    Trivial(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Core(e) => core_code(e),
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Io { .. } => EXIT_IO,
            CliError::Trivial(_) => EXIT_TRIVIAL,
        })
    }
}

fn core_code(e: &tarstop::Error) -> u8 {
    use tarstop::Error as E;
    match e {
        E::Domain(_) | E::InsufficientSample(_) => EXIT_DOMAIN,
        E::Config(_) => EXIT_USAGE,
        E::Data(_) | E::Parse { .. } => EXIT_DATA,
        E::Replication { source, .. } => core_code(source),
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Data(m) | CliError::Trivial(m) => f.write_str(m),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl From<tarstop::Error> for CliError {
    fn from(e: tarstop::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::Io {
                path: PathBuf::from("<csv output>"),
                source: io,
            },
            other => CliError::Data(format!("csv: {other:?}")),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
