use std::fmt;

/// Front-end failures, each mapped onto a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// `--help` or `--version`; printed to stdout with exit 0.
    Info(String),
    /// Bad invocation shape: unknown command or flag, missing command.
    Usage(String),
    /// A key whose value is missing, malformed or contradicts another key.
    Key {
        key: String,
        message: String,
    },
    /// A key whose value parses but violates a precondition.
    Precondition {
        key: String,
        message: String,
    },
    /// A library error, tagged with the key that fed it when known.
    Library {
        key: Option<String>,
        source: cfdim::Error,
    },
    Io(String),
}

impl CliError {
    pub fn key(key: &str, message: impl Into<String>) -> Self {
        CliError::Key {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn precondition(key: &str, message: impl Into<String>) -> Self {
        CliError::Precondition {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn from_clap(e: clap::Error) -> Self {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Info(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }

    /// 0 help, 1 io, 2 usage or parse, 3 precondition, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Io(_) => 1,
            CliError::Usage(_) | CliError::Key { .. } => 2,
            CliError::Precondition { .. } => 3,
            CliError::Library { source, .. } => {
                if source.is_numeric() {
                    4
                } else if matches!(source, cfdim::Error::Parse(_)) {
                    2
                } else {
                    3
                }
            }
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Info(s) | CliError::Usage(s) | CliError::Io(s) => f.write_str(s.trim_end()),
            CliError::Key { key, message } | CliError::Precondition { key, message } => {
                write!(f, "key '{key}': {message}")
            }
            CliError::Library {
                key: Some(k),
                source,
            } => write!(f, "key '{k}': {source}"),
            CliError::Library { key: None, source } => write!(f, "{source}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cfdim::Error> for CliError {
    fn from(source: cfdim::Error) -> Self {
        CliError::Library { key: None, source }
    }
}

/// Attaches the originating key to library errors.
pub trait WithKey<T> {
    fn with_key(self, key: &str) -> Result<T, CliError>;
}

impl<T> WithKey<T> for cfdim::Result<T> {
    fn with_key(self, key: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Library {
            key: Some(key.to_string()),
            source,
        })
    }
}
