use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },
    #[error("zero-power latent (item {item})")]
    ZeroPowerLatent { item: usize },
    #[error("zero channel vector")]
    ZeroChannel,
    #[error("latent dimension {0} is odd; complex pairing needs an even length")]
    OddLatent(usize),
    #[error("objective mismatch: {0}")]
    Objective(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

impl Error {
    pub(crate) fn shape(expected: impl core::fmt::Debug, actual: impl core::fmt::Debug) -> Self {
        Error::Shape {
            expected: alloc::format!("{expected:?}"),
            actual: alloc::format!("{actual:?}"),
        }
    }
}
