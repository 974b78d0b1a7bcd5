use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error(
        "field {bz_mt} mT is below the perturbative threshold of {min_mt} mT; \
         the analytic branch formulas are only valid when the electron Zeeman energy dominates \
         the hyperfine coupling (use the diagonalization oracle instead)"
    )]
    BelowPerturbativeField { bz_mt: f64, min_mt: f64 },

    #[error("geometry too close to a dipolar singularity: {0}")]
    DegenerateGeometry(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("sampler stalled: no move accepted in {window} steps (last log-posterior {log_posterior})")]
    Stall { window: usize, log_posterior: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Integrator(_) | Error::Stall { .. } | Error::NotHermitian { .. })
    }
}
