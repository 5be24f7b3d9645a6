use kickcast_core::{DatasetError, Error};

pub const USAGE: u8 = 2;
pub const IO: u8 = 3;
pub const NUMERIC: u8 = 4;
pub const SCHEMA: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(USAGE, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(IO, message)
    }
}

fn code_for(err: &Error) -> u8 {
    match err.root() {
        Error::Io { .. } | Error::Events(_) | Error::Model(_) => IO,
        Error::Dataset(d) => match d {
            DatasetError::SchemaVersion { .. }
            | DatasetError::HeaderMismatch { .. }
            | DatasetError::WidthMismatch { .. } => SCHEMA,
            _ => IO,
        },
        Error::WidthMismatch { .. } => SCHEMA,
        Error::NonFiniteLoss { .. } => NUMERIC,
        Error::InvalidConfig(_) | Error::InvalidAction(_) | Error::InvalidProbabilities(_) => USAGE,
        _ => NUMERIC,
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Self { code: code_for(&err), message: err.to_string() }
    }
}
