use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("dimension must be even, got {0}")]
    OddDimension(usize),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not skew-symmetric (max |A + A^T| = {0:e})")]
    NotSkew(f64),

    #[error("matrix norm {norm:e} exceeds the supported bound {bound:e}")]
    NormTooLarge { norm: f64, bound: f64 },

    #[error("generators {i} and {j} do not commute (max |[L_i, L_j]| = {residual:e})")]
    NonCommuting { i: usize, j: usize, residual: f64 },

    #[error("matrix is singular or ill-conditioned (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("plane decomposition failed: reconstruction residual {residual:e}")]
    DecompositionFailed { residual: f64 },

    #[error(
        "basis extraction failed after {attempts} attempts: generator {generator} is not \
         block-diagonal in the recovered basis (offending entry ({row}, {col}), residual {residual:e})"
    )]
    BasisExtraction {
        attempts: usize,
        generator: usize,
        row: usize,
        col: usize,
        residual: f64,
    },

    #[error("matrix is not orthogonal (max |P^T P - I| = {0:e})")]
    NotOrthogonal(f64),

    #[error("FFT path produced an imaginary residue of {0:e}")]
    ImaginaryResidue(f64),

    #[error("block size {block} does not divide dimension {dim}")]
    BlockSize { dim: usize, block: usize },

    #[error("position outside the chart domain: {0}")]
    Domain(String),

    #[error("batch is empty")]
    EmptyBatch,

    #[error("ragged batch: row {index} has {what} of length {found}, expected {expected}")]
    RaggedBatch {
        index: usize,
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("encoder is not multiplicative (outer-product encodings cannot be absorbed)")]
    NotMultiplicative,

    #[error("basis is too close to the identity to witness non-absorption (max |P - I| = {0:e})")]
    DegenerateBasis(f64),

    #[error("loss is not finite")]
    NonFiniteLoss,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
