//! Error taxonomy shared by all solver modules.

pub type Result<T> = std::result::Result<T, Error>;

/// Failure classes used across the library.
///
/// `Domain` marks arguments outside an operation's mathematical domain,
/// `Config` marks structurally invalid setups (mismatched grids, bad
/// truncation counts), and `Numerical` marks quadrature or iteration
/// failures where a result could not be produced at the requested accuracy.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
