use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mixture weights: {0}")]
    Weight(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid covariance: {0}")]
    Covariance(String),
    #[error("mixture is not zero-mean (|sum a_i mu_i| = {offset:e}); recenter first")]
    NotCentered { offset: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },
    #[error("run with gamma = {gamma} failed: {source}")]
    Sweep {
        gamma: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
