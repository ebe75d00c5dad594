use thiserror::Error;

/// Errors raised by the solenoid toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("point {x} lies outside the closure of P_*(c) = [{lo}, {hi}]")]
    OutsideStar { x: f64, lo: f64, hi: f64 },
    #[error("enumeration budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("support violation: {mass:e} of the field lies outside the periodization window")]
    SupportViolation { mass: f64 },
    #[error("tail bound {bound:e} exceeds requested precision {precision:e}")]
    TailTooLarge { bound: f64, precision: f64 },
    #[error("iteration did not converge after {iterations} steps (last difference {last:e})")]
    NotConverged { iterations: usize, last: f64 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
