use crate::types::NonlinearityKind;

/// Error type shared by all library operations.
#[derive(Debug, thiserror::Error)]
pub enum FrogError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("pulse length must be at least 2, got {0}")]
    TooShort(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("delay index {m} out of range (m_count = {m_count})")]
    DelayOutOfRange { m: usize, m_count: usize },
    #[error("SHG kind requires x2 = x1")]
    ShgMismatch,
    #[error("operation requires L = 1, got L = {0}")]
    RequiresUnitStride(usize),
    #[error("operation does not support kind {0:?}")]
    UnsupportedKind(NonlinearityKind),
    #[error("noise level must be nonnegative, got {0}")]
    NegativeNoiseLevel(f64),
    #[error("negative trace entry at ({0}, {1})")]
    NegativeEntry(usize, usize),
    #[error("zero-energy reference signal")]
    ZeroReference,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("Parseval mismatch of relative size {0:.3e} between temporal and spectral magnitudes")]
    ParsevalMismatch(f64),
    #[error("phase system has empty support")]
    EmptySupport,
    #[error("in SHG mode the transform must keep x1 = x2 ({0})")]
    ShgTransform(String),
    #[error("oracle budget exceeded: {0}")]
    OracleBudget(String),
    #[error("bandlimit hypothesis violated: longest zero run {run} < required {required}")]
    BandlimitViolated { run: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, FrogError>;
