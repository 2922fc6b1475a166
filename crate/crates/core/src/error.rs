use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("preset `{name}` is defined for d={expected}, grid has d={found}")]
    PresetDimension {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("negative spectrum value {value} at flat index {index}")]
    NegativeSpectrum { index: usize, value: f64 },
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("index {0:?} out of range")]
    IndexOutOfRange(Vec<i64>),
    #[error("negative pure power at n={n:?}: 1 - sum(b_p^2) = {deficit:e}")]
    NegativePurePower { n: Vec<i64>, deficit: f64 },
    #[error("naive summation needs {terms:e} term evaluations, budget is {budget:e}")]
    CostGuard { terms: f64, budget: f64 },
    #[error("samples do not share one grid")]
    MixedGrids,
    #[error("bispectrum slice of {len} pairs exceeds the limit of {limit}")]
    SliceTooLarge { len: usize, limit: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
