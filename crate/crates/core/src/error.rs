use std::path::PathBuf;

/// Errors raised by every layer of the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two")]
    NonPowerOfTwo(usize),
    #[error("grid size {0} is below the minimum of 8 points per axis")]
    GridTooSmall(usize),
    #[error("box length must be positive and finite, got {0}")]
    InvalidBoxLength(f64),
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },
    #[error("expected {expected} samples, got {actual}")]
    SampleCountMismatch { expected: usize, actual: usize },
    #[error("field has nonzero mean {mean:e} (sup norm {sup:e})")]
    NonZeroMean { mean: f64, sup: f64 },
    #[error("Littlewood-Paley block {0} is numerically zero")]
    DegenerateBlock(i32),
    #[error("vector field is not divergence free (max |k.u| = {0:e})")]
    NotDivergenceFree(f64),
    #[error("{name} must be non-negative, got {value}")]
    NegativeParameter { name: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("CFL number {cfl:.4} exceeds 0.5 at t = {t}")]
    CflViolation { cfl: f64, t: f64 },
    #[error("solution diverged (non-finite values) at t = {0}")]
    Diverged(f64),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("trajectory is missing the `{0}` monitor")]
    MissingMonitor(String),
    #[error("no lattice modes in band [{k_min}, {k_max}]")]
    EmptyBand { k_min: f64, k_max: f64 },
    #[error("field is not band-limited below the dealiasing cutoff")]
    NotBandLimited,
    #[error("need at least 3 successful records to fit a rate, got {0}")]
    InsufficientPoints(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
