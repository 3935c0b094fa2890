use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("format error in {}:{line}: {msg}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("naming error: {0}")]
    Naming(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no solution: {0}")]
    Singular(String),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("statistic error: {0}")]
    Statistic(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category, used by the CLI error report.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Capacity(_) => "capacity",
            Error::Contract(_) => "contract",
            Error::Format { .. } => "format",
            Error::Naming(_) => "naming",
            Error::Domain(_) => "domain",
            Error::Singular(_) => "singular",
            Error::Bracket(_) => "bracket",
            Error::Numeric(_) => "numeric",
            Error::Statistic(_) => "statistic",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Io(_) => "io",
            Error::Csv(_) => "io",
            Error::Json(_) => "io",
        }
    }

    /// Process exit status: 2 for capacity errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
