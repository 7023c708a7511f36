use thiserror::Error;

/// Residuals left after an incomplete Gaussian-shell removal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShellResiduals {
    pub mean_x: f64,
    pub mean_p: f64,
    pub variance_gap: f64,
    pub covariance: f64,
    pub leakage: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension for {what}: {dim}")]
    InvalidDimension { what: &'static str, dim: usize },

    #[error("layout error: {0}")]
    Layout(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("operator is not Hermitian (max |A - A†| = {0:e})")]
    NotHermitian(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration failed at t = {time_reached}: {message}")]
    Integration { time_reached: f64, message: String },

    #[error("Gaussian-shell removal incomplete (leakage {:e})", .0.leakage)]
    ShellRemoval(ShellResiduals),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
