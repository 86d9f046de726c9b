use std::fmt;

use thiserror::Error;

/// A syntax or well-formedness error, optionally carrying a source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ParseError {
    pub fn msg(message: impl Into<String>) -> Self {
        ParseError { line: None, column: None, message: message.into() }
    }

    pub fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line: Some(line), column: Some(column), message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{l}:{c}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("variable order mismatch: {0:?} vs {1:?}")]
    OrderMismatch(Vec<String>, Vec<String>),
    #[error("arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` already present")]
    DuplicateVariable(String),
    #[error("arity {0} exceeds the supported maximum")]
    TooWide(usize),
    #[error("{0}")]
    Parse(#[from] ParseError),
}

/// Raised when an invariant that a passing certificate guarantees is broken.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("internal inconsistency: {0}")]
pub struct InternalError(pub String);

impl InternalError {
    pub fn new(msg: impl Into<String>) -> Self {
        InternalError(msg.into())
    }
}
