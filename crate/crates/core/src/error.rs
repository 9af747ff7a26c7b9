use thiserror::Error;

use crate::series::PeriodId;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical layers (series, indicator preparation,
/// estimation and diagnostics).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid period: {0}")]
    InvalidPeriod(String),
    #[error("frequency mismatch: expected {expected}, got {got}")]
    FrequencyMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("no complete year in series span")]
    NoCompleteYear,
    #[error("undefined growth rate at {0} (zero denominator)")]
    UndefinedGrowthRate(PeriodId),
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid dummy range SD({from},{to})")]
    InvalidDummyRange { from: i32, to: i32 },
    #[error("dummy SD({from},{to}) outside span")]
    DummyOutsideSpan { from: i32, to: i32 },
    #[error("invalid arrears event `{label}`: {reason}")]
    InvalidEvent { label: String, reason: String },
    #[error("disbursement outside series span: {0}")]
    DisbursementOutsideSpan(PeriodId),
    #[error("accrual year outside series span: {0}")]
    AccrualOutsideSpan(i32),
    #[error("insufficient overlap: {got} common years, need at least {needed}")]
    InsufficientOverlap { needed: usize, got: usize },
    #[error("zero constraint year {0}")]
    ZeroConstraintYear(i32),
    #[error("constant annual series: correlation undefined")]
    ConstantSeries,

    #[error("insufficient quarters: {n_quarters} quarters cannot hold {n_years} years")]
    InsufficientQuarters { n_years: usize, n_quarters: usize },
    #[error("rho out of admissible range: {0}")]
    RhoOutOfRange(f64),
    #[error("rho not applicable to the Fernandez model")]
    RhoNotApplicable,
    #[error("likelihood evaluation failed for every rho on the grid")]
    LikelihoodFailed,
    #[error("collinear regressors")]
    CollinearRegressors,
    #[error("insufficient degrees of freedom: {n_years} years for {k} regressors")]
    InsufficientDegreesOfFreedom { n_years: usize, k: usize },
    #[error("covariance not positive definite")]
    CovarianceNotPositiveDefinite,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("span mismatch: {0}")]
    SpanMismatch(String),

    #[error("degenerate constraint series (zero total sum of squares)")]
    DegenerateConstraint,
    #[error("degenerate residuals")]
    DegenerateResiduals,
    #[error("lag too large: {lag} for {n} observations")]
    LagTooLarge { lag: usize, n: usize },
}
