use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid integrator settings: {0}")]
    InvalidSettings(String),

    #[error("no coercivity radius found up to |x| = {search_bound}")]
    CoercivityNotDetected { search_bound: f64 },

    #[error("solution blew up at t = {t} (sign {sign})")]
    BlowUp { t: f64, sign: f64 },

    #[error("pullback limit did not converge (last difference {last_difference:e} after horizon {horizon})")]
    PullbackNotConverged { last_difference: f64, horizon: f64 },

    #[error("trajectory span too short: need {needed}, have {available}")]
    InsufficientSpan { needed: f64, available: f64 },

    #[error("time {t} outside trajectory span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },

    #[error("future limit gamma+ = {gamma} is not in R_f: {reason}")]
    FutureNotInRf { gamma: f64, reason: String },

    #[error("past limit gamma- = {gamma} is not in R_f: {reason}")]
    PastNotInRf { gamma: f64, reason: String },

    #[error("tail criterion ({tail}) and gap criterion ({gap}) disagree")]
    InconsistentCriteria { tail: String, gap: String },

    #[error("base solution is not hyperbolic: {0}")]
    NotHyperbolic(String),

    #[error(
        "continuation iterates not Cauchy after {iterations} iterations (last step {last_step:e})"
    )]
    ContractionFailed { iterations: usize, last_step: f64 },

    #[error("no sign change of the gap function on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("profile has no closed-form derivative")]
    ProfileNotDifferentiable,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("cache i/o: {0}")]
    Cache(String),
}
