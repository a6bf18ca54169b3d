use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HenonError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("uncertified domain: {0}")]
    Uncertified(String),
    #[error("branch tracking failed at step {step}: |theta| = {theta_abs}")]
    Branch { step: usize, theta_abs: f64 },
    #[error("root finder did not converge (degree {degree}, residual {residual:e})")]
    RootFinder { degree: usize, residual: f64 },
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, HenonError>;
