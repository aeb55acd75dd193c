use thiserror::Error;

/// Errors produced by the library.
///
/// Variants fall into three broad classes that the command-line front end
/// maps onto distinct exit codes: invalid input ([`Error::Invalid`] and
/// friends), exceeded size guards ([`Error::SizeGuard`]) and malformed files
/// ([`Error::Parse`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("conditioning on zero-mass value {symbol:?} at coordinate {coord}")]
    ZeroMass { coord: usize, symbol: String },

    #[error("mixture decomposition is negative at atom {atom:?}")]
    NegativeMixture { atom: Vec<String> },

    #[error("witness does not verify against the support")]
    UnverifiedWitness,

    #[error("size guard exceeded: {what} needs {needed} but the limit is {limit}")]
    SizeGuard {
        what: &'static str,
        needed: f64,
        limit: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// Fails with [`Error::SizeGuard`] when `needed > limit`.
    pub(crate) fn guard(what: &'static str, needed: f64, limit: f64) -> Result<()> {
        if needed > limit {
            Err(Error::SizeGuard {
                what,
                needed,
                limit,
            })
        } else {
            Ok(())
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
