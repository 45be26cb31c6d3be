//! Error types shared across the crate.

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of the operation
    /// (off-sphere evaluation point, on-interface evaluation, amplitude
    /// outside its law's support, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// The call violates an API contract (mismatched lengths, unknown
    /// operator kind, malformed index, too few study values, ...).
    #[error("usage error: {0}")]
    Usage(String),
    /// The perturbation model does not carry enough information for the
    /// requested moment computation.
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
