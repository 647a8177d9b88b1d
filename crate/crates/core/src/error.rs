use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge after {panels} panels: estimate {estimate:e}, error {error_estimate:e}"
    )]
    QuadratureNotConverged {
        estimate: f64,
        error_estimate: f64,
        panels: usize,
    },

    #[error("integrand returned a non-finite value at x = {abscissa}")]
    NonFiniteIntegrand { abscissa: f64 },

    #[error("singular tridiagonal system: zero pivot at row {index}")]
    SingularMatrix { index: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("simulation diverged on path {path} at step {step}")]
    SimulationDiverged { path: usize, step: usize },

    #[error("PDE solution diverged at time step {step} (max |G| = {max_abs:e})")]
    PdeDiverged { step: usize, max_abs: f64 },

    #[error("point (r = {r}, u = {u}) lies outside the PDE grid")]
    OutsideGrid { r: f64, u: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::Domain(_)
                | Error::Dimension(_)
                | Error::OutsideGrid { .. }
                | Error::Parse { .. }
                | Error::Input(_)
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
