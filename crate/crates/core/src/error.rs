use thiserror::Error;

/// Errors produced while reading, writing, validating, or joining datasets.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// The file does not start with the `SKNJ` magic bytes.
    #[error("not a sparse-vector dataset (bad magic)")]
    BadMagic,

    #[error("unsupported dataset format version {0}")]
    BadVersion(u32),

    /// The file ended in the middle of a header, vector, or feature list.
    #[error("dataset truncated mid-record")]
    Truncated,

    #[error("vector {id}: features not sorted by strictly increasing dimension")]
    UnsortedFeatures { id: u64 },

    #[error("vector {id}: weight {weight} at dimension {dim} is not a positive finite value")]
    NonPositiveWeight { id: u64, dim: u32, weight: f32 },

    #[error("vector {id}: dimension {dim} out of range for dimensionality {dims}")]
    DimensionOutOfRange { id: u64, dim: u32, dims: u32 },

    /// A single vector is larger than the whole block budget, so no blocking
    /// of the file can ever load it.
    #[error("vector {id} needs {bytes} bytes but the block budget is {budget} bytes")]
    VectorExceedsBudget { id: u64, bytes: u64, budget: u64 },

    #[error("datasets disagree on dimensionality: {r_dims} vs {s_dims}")]
    DimensionalityMismatch { r_dims: u32, s_dims: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("spectra input line {line}: {message}")]
    SpectraParse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
