//! Validation statistics for a fitted disaggregation model.

mod movement;
mod statistics;

use serde::Serialize;

pub use movement::{movement_stats, MovementStats, MIN_COMMON_QUARTERS};
pub use statistics::{
    coef_t_tests, durbin_watson, het_ratio_test, jarque_bera, ljung_box, r2_and_f,
    CoefficientTest, HetRatio, JarqueBera, LjungBox, RegressionFit, DEFAULT_LJUNG_BOX_LAGS,
};

use crate::disagg::FitResult;
use crate::error::Result;
use crate::series::Series;

/// Which low-frequency residuals the residual tests run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualKind {
    /// `P u_L` with `P'P = (C V C')^-1`.
    #[default]
    Whitened,
    /// `u_L` as is.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagnosticsOptions {
    pub ljung_box_lags: usize,
    pub residuals: ResidualKind,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            ljung_box_lags: DEFAULT_LJUNG_BOX_LAGS,
            residuals: ResidualKind::Whitened,
        }
    }
}

/// A statistic that could not be computed for this fit, and why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unavailable {
    pub test: &'static str,
    pub reason: String,
}

/// Standard diagnostics of one fit. Tests whose preconditions the fit does
/// not meet (too few years, zero residuals) are `None` and listed in
/// `unavailable`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub rho: f64,
    pub residuals: ResidualKind,
    pub regression: Option<RegressionFit>,
    /// Square root of the innovation variance, in the units of the data.
    pub standard_error: f64,
    pub durbin_watson: Option<f64>,
    pub jarque_bera: Option<JarqueBera>,
    pub h_test: Option<HetRatio>,
    pub ljung_box: Option<LjungBox>,
    pub coefficients: Vec<CoefficientTest>,
    pub unavailable: Vec<Unavailable>,
}

impl DiagnosticsReport {
    pub fn r_squared(&self) -> Option<f64> {
        self.regression.as_ref().map(|r| r.r_squared)
    }
}

fn keep<T>(test: &'static str, r: Result<T>, missing: &mut Vec<Unavailable>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            missing.push(Unavailable {
                test,
                reason: e.to_string(),
            });
            None
        }
    }
}

/// Runs the full battery on `fit` against the annual constraint.
pub fn diagnose(
    fit: &FitResult,
    y_annual: &Series,
    intercept: bool,
    options: DiagnosticsOptions,
) -> DiagnosticsReport {
    let mut missing = Vec::new();
    let residuals: &[f64] = match options.residuals {
        ResidualKind::Whitened => &fit.whitened_residuals,
        ResidualKind::Raw => fit.low_freq_residuals.values(),
    };
    let regression = keep(
        "f_test",
        r2_and_f(
            y_annual.values(),
            fit.fitted_annual.values(),
            fit.n_regressors(),
            intercept,
        ),
        &mut missing,
    );
    let durbin_watson = keep("durbin_watson", durbin_watson(residuals), &mut missing);
    let jarque_bera = keep("jarque_bera", jarque_bera(residuals), &mut missing);
    let h_test = keep("h_test", het_ratio_test(residuals), &mut missing);
    let ljung_box = keep(
        "ljung_box",
        ljung_box(residuals, options.ljung_box_lags),
        &mut missing,
    );
    let coefficients = keep("coefficients", coef_t_tests(fit, fit.df()), &mut missing)
        .unwrap_or_default();
    DiagnosticsReport {
        rho: fit.rho,
        residuals: options.residuals,
        regression,
        standard_error: fit.sigma2.sqrt(),
        durbin_watson,
        jarque_bera,
        h_test,
        ljung_box,
        coefficients,
        unavailable: missing,
    }
}
