use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain parameters: {0}")]
    InvalidSpec(String),

    #[error("qubit ordering violated at site {site}: spacing {spacing}")]
    Ordering { site: usize, spacing: f64 },

    #[error("spacing phase {phase} at bond {bond} is within the pole guard of a multiple of pi")]
    SingularSpacing { bond: usize, phase: f64 },

    #[error("dispersion pole: k = {k} coincides with phi = {phi}")]
    DispersionPole { k: f64, phi: f64 },

    #[error("eigensolver failed (realization {realization:?}): {reason}")]
    Eigensolver { realization: Option<u64>, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("non-positive decay rate {value} at realization {index}")]
    NonPositiveRate { index: usize, value: f64 },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("series is not decaying exponentially (semilog slope {slope})")]
    NotExponential { slope: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("cell (n = {n}, w = {w}) aborted: {failed} of {total} realizations failed")]
    CellAborted { n: usize, w: f64, failed: u64, total: u64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
