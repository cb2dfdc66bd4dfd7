use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid scenario or parameter set; the message names the offending field.
    #[error("configuration error: {0}")]
    Config(String),

    /// Non-finite state or failed linear solve during integration.
    #[error("numerical failure at t = {t:.6} s: {detail}")]
    Numerical { t: f64, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
