//! Error classes and their exit codes.

use std::fmt;

pub const EXIT_PARSE: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;
pub const EXIT_CONVERGENCE: i32 = 5;
pub const EXIT_IO: i32 = 6;

/// Malformed input, with the offending line when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: Option<u64>,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.msg),
            None => f.write_str(&self.msg),
        }
    }
}

impl std::error::Error for ParseError {}

/// Bad combination of arguments detected after clap.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

/// Exit status for an error chain; the first recognised cause decides.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use wzrisk::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Convergence { .. } | E::Quadrature { .. } | E::Unsatisfiable { .. } => EXIT_CONVERGENCE,
                _ => EXIT_DOMAIN,
            };
        }
        if cause.is::<ParseError>() || cause.is::<toml::de::Error>() {
            return EXIT_PARSE;
        }
        if cause.is::<UsageError>() {
            return EXIT_DOMAIN;
        }
        if let Some(e) = cause.downcast_ref::<csv::Error>() {
            return if matches!(e.kind(), csv::ErrorKind::Io(_)) { EXIT_IO } else { EXIT_PARSE };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    1
}
