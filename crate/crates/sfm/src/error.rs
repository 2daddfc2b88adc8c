use thiserror::Error;

/// Errors surfaced by the library.
///
/// `Domain` covers arguments outside an operation's documented domain
/// (index out of range, point outside the unit box, malformed sparse
/// vectors). `Contract` covers runtime violations of an instance's
/// declared properties (non-integer values from an integer-valued
/// instance, a submodularity witness, a precondition an algorithm
/// cannot proceed without). `Parse` carries the 1-based line number of
/// the offending line in an instance file.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
