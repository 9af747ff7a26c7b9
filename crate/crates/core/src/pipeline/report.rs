//! Per-job JSON report with fixed number formatting.
//!
//! Statistics are written with 6 decimals, p-values and rho with 3, and
//! p-values at or above 0.9995 as `1`. Missing or non-finite values are `null`.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::diagnostics::{DiagnosticsReport, MovementStats, ResidualKind, Unavailable};
use crate::disagg::{FitResult, RhoPolicy, RhoSearch, RhoSource};
use crate::indicator::IndicatorQuality;
use crate::series::Span;

use super::JobConfig;

fn fixed(x: f64, decimals: usize) -> Option<String> {
    if !x.is_finite() {
        return None;
    }
    let s = format!("{x:.decimals$}");
    match s.strip_prefix('-') {
        Some(abs) if abs.bytes().all(|b| b == b'0' || b == b'.') => Some(abs.to_string()),
        _ => Some(s),
    }
}

/// `13.4239` -> `13.423900`.
pub fn format_statistic(x: f64) -> Option<String> {
    fixed(x, 6)
}

/// Three decimals; `1` from 0.9995 up.
pub fn format_p_value(p: f64) -> Option<String> {
    if p >= 0.9995 && p.is_finite() {
        Some("1".into())
    } else {
        fixed(p, 3)
    }
}

fn raw<S: Serializer>(text: Option<String>, s: S) -> Result<S::Ok, S::Error> {
    match text {
        None => s.serialize_none(),
        Some(t) => RawValue::from_string(t)
            .map_err(serde::ser::Error::custom)?
            .serialize(s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Stat(Option<f64>);

impl Serialize for Stat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        raw(self.0.and_then(format_statistic), s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PValue(Option<f64>);

impl Serialize for PValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        raw(self.0.and_then(format_p_value), s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rho(f64);

impl Serialize for Rho {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        raw(fixed(self.0, 3), s)
    }
}

fn stat(x: f64) -> Stat {
    Stat(Some(x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ModelSummary {
    method: &'static str,
    intercept: bool,
    regressors: Vec<String>,
    dummies: Vec<[i32; 2]>,
    rho_policy: &'static str,
    target_first: String,
    target_last: String,
    constraint_first: i32,
    constraint_last: i32,
    n_years: usize,
    n_quarters: usize,
    df: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CoefficientRow {
    label: String,
    estimate: Stat,
    standard_error: Stat,
    t_statistic: Stat,
    p_value: PValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct FitSummary {
    rho: Rho,
    rho_source: RhoSource,
    r_squared: Stat,
    f_statistic: Stat,
    f_p_value: PValue,
    f_df1: Option<usize>,
    f_df2: Option<usize>,
    standard_error: Stat,
    sigma2: Stat,
    log_likelihood: Stat,
    exact_fit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct JarqueBeraRow {
    statistic: Stat,
    p_value: PValue,
    skewness: Stat,
    kurtosis: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct HTestRow {
    statistic: Stat,
    p_value: PValue,
    m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct LjungBoxRow {
    statistic: Stat,
    p_value: PValue,
    lags: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ResidualTests {
    residuals: ResidualKind,
    durbin_watson: Stat,
    jarque_bera: Option<JarqueBeraRow>,
    h_test: Option<HTestRow>,
    ljung_box: Option<LjungBoxRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct MovementRow {
    corr_qopq: Stat,
    corr_qosq: Stat,
    rmse_qopq: Stat,
    rmse_qosq: Stat,
    max_discrepancy_qopq: Stat,
    max_discrepancy_qosq: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct YearCoverage {
    year: i32,
    coverage_pct: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct QualityRow {
    first_year: i32,
    last_year: i32,
    correlation: Stat,
    coverage_rate_pct: Stat,
    ratio_of_totals_pct: Stat,
    per_year_coverage: Vec<YearCoverage>,
}

/// Everything written to `<job>_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobReport {
    tool: Tool,
    job: String,
    /// sha256 of each input file, keyed by its path as written in the config.
    inputs: BTreeMap<String, String>,
    model: ModelSummary,
    coefficients: Vec<CoefficientRow>,
    fit: FitSummary,
    residual_tests: ResidualTests,
    movement: Option<MovementRow>,
    indicator_quality: Option<QualityRow>,
    unavailable: Vec<Unavailable>,
}

impl JobReport {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn build(
        job: &JobConfig,
        inputs: BTreeMap<String, String>,
        target: Span,
        fit: &FitResult,
        diag: &DiagnosticsReport,
        movement: Option<&MovementStats>,
        quality: Option<&IndicatorQuality>,
        unavailable: Vec<Unavailable>,
    ) -> Self {
        let constraint_first = fit.fitted_annual.start().year();
        let regression = diag.regression.as_ref();
        let rho_policy = match job.rho {
            _ if !job.method.has_rho() => "random_walk",
            RhoPolicy::Fixed(_) => "fixed",
            RhoPolicy::Estimate(RhoSearch::Full) => "estimate",
            RhoPolicy::Estimate(RhoSearch::NonNegative) => "estimate_nonnegative",
        };
        let tests: BTreeMap<&str, _> = diag
            .coefficients
            .iter()
            .map(|c| (c.label.as_str(), c))
            .collect();
        JobReport {
            tool: Tool {
                name: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
            },
            job: job.name.clone(),
            inputs,
            model: ModelSummary {
                method: job.method.name(),
                intercept: job.intercept,
                regressors: fit.coefficients.iter().map(|c| c.label.clone()).collect(),
                dummies: job.dummies.iter().map(|&(a, b)| [a, b]).collect(),
                rho_policy,
                target_first: target.first().to_string(),
                target_last: target.last().to_string(),
                constraint_first,
                constraint_last: constraint_first + fit.n_years() as i32 - 1,
                n_years: fit.n_years(),
                n_quarters: target.len(),
                df: fit.df(),
            },
            coefficients: fit
                .coefficients
                .iter()
                .map(|c| {
                    let t = tests.get(c.label.as_str());
                    CoefficientRow {
                        label: c.label.clone(),
                        estimate: stat(c.estimate),
                        standard_error: stat(c.standard_error),
                        t_statistic: Stat(t.and_then(|t| t.t_statistic)),
                        p_value: PValue(t.and_then(|t| t.p_value)),
                    }
                })
                .collect(),
            fit: FitSummary {
                rho: Rho(fit.rho),
                rho_source: fit.rho_source,
                r_squared: Stat(regression.map(|r| r.r_squared)),
                f_statistic: Stat(regression.and_then(|r| r.f_statistic)),
                f_p_value: PValue(regression.and_then(|r| r.f_p_value)),
                f_df1: regression.map(|r| r.df1),
                f_df2: regression.map(|r| r.df2),
                standard_error: stat(diag.standard_error),
                sigma2: stat(fit.sigma2),
                log_likelihood: stat(fit.log_likelihood),
                exact_fit: fit.exact_fit,
            },
            residual_tests: ResidualTests {
                residuals: diag.residuals,
                durbin_watson: Stat(diag.durbin_watson),
                jarque_bera: diag.jarque_bera.as_ref().map(|j| JarqueBeraRow {
                    statistic: stat(j.statistic),
                    p_value: PValue(Some(j.p_value)),
                    skewness: stat(j.skewness),
                    kurtosis: stat(j.kurtosis),
                }),
                h_test: diag.h_test.as_ref().map(|h| HTestRow {
                    statistic: stat(h.statistic),
                    p_value: PValue(Some(h.p_value)),
                    m: h.m,
                }),
                ljung_box: diag.ljung_box.as_ref().map(|l| LjungBoxRow {
                    statistic: stat(l.statistic),
                    p_value: PValue(Some(l.p_value)),
                    lags: l.lags,
                }),
            },
            movement: movement.map(|m| MovementRow {
                corr_qopq: Stat(m.corr_qopq),
                corr_qosq: Stat(m.corr_qosq),
                rmse_qopq: stat(m.rmse_qopq),
                rmse_qosq: stat(m.rmse_qosq),
                max_discrepancy_qopq: stat(m.max_discrepancy_qopq),
                max_discrepancy_qosq: stat(m.max_discrepancy_qosq),
            }),
            indicator_quality: quality.map(|q| QualityRow {
                first_year: q.first_year,
                last_year: q.last_year,
                correlation: stat(q.correlation),
                coverage_rate_pct: stat(q.coverage_rate_pct),
                ratio_of_totals_pct: stat(q.ratio_of_totals_pct),
                per_year_coverage: q
                    .per_year_coverage
                    .iter()
                    .map(|&(year, c)| YearCoverage {
                        year,
                        coverage_pct: stat(c),
                    })
                    .collect(),
            }),
            unavailable: diag.unavailable.iter().cloned().chain(unavailable).collect(),
        }
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
