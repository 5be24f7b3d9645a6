use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no player with unum {0}")]
    UnknownPlayer(u8),

    #[error("duplicate unum {0}")]
    DuplicateUnum(u8),

    #[error("malformed world state: {0}")]
    MalformedState(String),

    #[error("kicker {0} cannot reach the ball")]
    NotKickable(u8),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid kick action: {0}")]
    InvalidAction(String),

    #[error("target unum {0} is not part of the ordering")]
    TargetNotInOrdering(u8),

    #[error("width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("non-finite loss at sample {sample}{}", context_suffix(*.epoch, *.batch))]
    NonFiniteLoss {
        sample: usize,
        epoch: Option<usize>,
        batch: Option<usize>,
    },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Dataset(#[from] DatasetError),

    #[error(transparent)]
    Model(#[from] ModelFormatError),

    #[error(transparent)]
    Events(#[from] EventFileError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn context_suffix(epoch: Option<usize>, batch: Option<usize>) -> String {
    match (epoch, batch) {
        (Some(e), Some(b)) => format!(" (epoch {e}, batch {b})"),
        (Some(e), None) => format!(" (epoch {e})"),
        _ => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping any [`Error::Context`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Failures reading or writing dataset CSV files and their sidecars.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: expected {expected} columns, found {found}")]
    WidthMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column {column}: cannot parse {text:?} as a number")]
    BadNumber {
        line: usize,
        column: usize,
        text: String,
    },

    #[error("header column {column} is {found:?}, expected {expected:?}")]
    HeaderMismatch {
        column: usize,
        expected: String,
        found: String,
    },

    #[error("missing metadata sidecar {0}")]
    MissingSidecar(PathBuf),

    #[error("bad metadata sidecar {path}: {message}")]
    BadSidecar { path: PathBuf, message: String },

    #[error("schema version {found} is not supported (this build reads version {expected})")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("line {line}: invalid label value {value} in column {column}")]
    BadLabel {
        line: usize,
        column: String,
        value: f64,
    },

    #[error("dataset has no rows")]
    NoRows,

    #[error("cannot split {rows} rows at train fraction {fraction}")]
    DegenerateSplit { rows: usize, fraction: f64 },

    #[error("csv error: {0}")]
    Csv(String),
}

/// Failures loading a KICKCAST-DNN model file. Every variant names the
/// 1-based line it was detected on.
#[derive(Debug, Error)]
pub enum ModelFormatError {
    #[error("line {line}: not a KICKCAST-DNN file (found {found:?})")]
    Magic { line: usize, found: String },

    #[error("line {line}: unsupported format version {found:?} (expected {expected:?})")]
    Version {
        line: usize,
        found: String,
        expected: &'static str,
    },

    #[error("line {line}: dimension mismatch: {message}")]
    Dimension { line: usize, message: String },

    #[error("line {line}: cannot parse {token:?} as a number")]
    BadNumber { line: usize, token: String },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unexpected end of file")]
    UnexpectedEof { line: usize },
}

impl ModelFormatError {
    pub fn line(&self) -> usize {
        match self {
            ModelFormatError::Magic { line, .. }
            | ModelFormatError::Version { line, .. }
            | ModelFormatError::Dimension { line, .. }
            | ModelFormatError::BadNumber { line, .. }
            | ModelFormatError::Syntax { line, .. }
            | ModelFormatError::UnexpectedEof { line } => *line,
        }
    }
}

/// Failures reading an event file.
#[derive(Debug, Error)]
pub enum EventFileError {
    #[error("line {line}: expected {expected} fields, found {found}")]
    WidthMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("event file header does not match the event layout (column {column}: {found:?}, expected {expected:?})")]
    Header {
        column: usize,
        expected: String,
        found: String,
    },

    #[error("line {line}: field {field}: cannot parse {text:?}")]
    BadValue {
        line: usize,
        field: String,
        text: String,
    },

    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },

    #[error("csv error: {0}")]
    Csv(String),
}
