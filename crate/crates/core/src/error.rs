use thiserror::Error;

use crate::field::BetaParams;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameters a0={a0}, a1={a1}: need a0 >= a1 >= 1")]
    InvalidParams { a0: i64, a1: i64 },
    #[error("parameter mismatch: {0} vs {1}")]
    ParamsMismatch(BetaParams, BetaParams),
    #[error("division by zero")]
    DivisionByZero,
    #[error("point {0} lies outside [0, 1]")]
    OutOfDomain(String),
    #[error("polynomial degree {0} exceeds the cap of {cap}", cap = crate::poly::MAX_DEGREE)]
    DegreeCap(usize),
    #[error("coefficient {0} is not rational")]
    NonRational(String),
    #[error("function is not in the span of the basis: {0}")]
    NotInSpan(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}
