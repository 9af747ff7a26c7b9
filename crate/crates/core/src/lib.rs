//! Temporal disaggregation of annual flows into quarterly estimates.
//!
//! The crate covers the full compilation chain: preparing quarterly
//! indicators (arrears reallocation, step dummies, quality against the annual
//! constraint), regression-based disaggregation with Chow-Lin, Fernandez and
//! Litterman residual models, the standard diagnostics battery, and a
//! config-driven batch pipeline behind the `tempdis` binary.

pub mod diagnostics;
pub mod disagg;
pub mod distributions;
pub mod error;
pub mod indicator;
pub mod pipeline;
pub mod series;

pub use disagg::{
    disaggregate, estimate_rho, gls_fit_given_rho, Design, FitResult, Method, ModelSpec,
    RhoPolicy, RhoSearch, RhoSource,
};
pub use error::{Error, Result};
pub use series::{annualize, pct_change_prev, pct_change_year_ago, Frequency, PeriodId, Series, Span};
