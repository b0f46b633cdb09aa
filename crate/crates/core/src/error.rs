//! Error type shared by all simulation modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A structural problem: unknown level, transition not representable in
    /// the chosen basis, unsupported manifold pair, malformed sequence.
    #[error("structural error: {0}")]
    Structural(String),

    /// A quantity outside its validity window (e.g. magnetic field).
    #[error("range error: {0}")]
    Range(String),

    /// A mathematically invalid argument (negative Fock index, bad counts).
    #[error("domain error: {0}")]
    Domain(String),

    /// The least-squares normal matrix was singular at the optimum.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Not enough data points to constrain the requested parameters.
    #[error("underdetermined: {0}")]
    Underdetermined(String),

    /// A constants-file or configuration problem, with a line number when
    /// one is available.
    #[error("constants error (line {line}): {msg}")]
    Constants { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
