use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch ({detail})")]
    Shape { op: &'static str, detail: String },

    #[error("{op}: input outside domain ({detail})")]
    Domain { op: &'static str, detail: String },

    #[error("{op}: non-finite value produced")]
    NonFinite { op: String },

    #[error("backward requires a scalar output, got shape {0:?}")]
    NotScalar(Vec<usize>),

    #[error("computation graph already consumed by a non-retaining backward pass")]
    GraphConsumed,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite loss term `{term}` at step {step}")]
    NonFiniteLoss { term: &'static str, step: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("factor {factor} value {value} has no rows")]
    EmptyFactorValue { factor: usize, value: usize },

    #[error("every latent dimension was pruned as collapsed")]
    AllDimensionsPruned,

    #[error("zero rank variance")]
    ZeroRankVariance,

    #[error("malformed file: {0}")]
    Format(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Shape {
        op,
        detail: detail.into(),
    }
}
