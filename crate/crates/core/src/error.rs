use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular response at Ω = {omega} rad/s: {reason}")]
    Singular { omega: f64, reason: String },

    #[error("spectrum evaluated outside tabulated band at f = {frequency_hz} Hz")]
    Extrapolation { frequency_hz: f64 },

    #[error("integration error: {0}")]
    Integration(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("fit did not converge after {iterations} iterations (best residual {residual:.3e})")]
    Fit {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
