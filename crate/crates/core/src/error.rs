use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("divergent: {0}")]
    Divergent(String),
    #[error("model is explosive: {0}")]
    Explosive(String),
    #[error("unsupported for this model: {0}")]
    Unsupported(String),
    #[error("resource guard tripped: {0}")]
    BlowUp(String),
    #[error("node cap of {0} exceeded")]
    CapExceeded(usize),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("empty selection: {0}")]
    EmptySelection(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no closed form: {0}")]
    NoClosedForm(String),
}

pub type Result<T> = std::result::Result<T, Error>;
