//! Regression-based temporal disaggregation.
//!
//! The annual constraint `y_L` is regressed by GLS on the annualized
//! quarterly regressors `C X`, with a residual covariance `C V C'` implied by
//! one of three quarterly residual models. The quarterly estimate
//! `X b + V C' (C V C')^-1 u_L` reproduces the annual constraint exactly and
//! extrapolates through quarters that carry no aggregation row.

mod covariance;
mod gls;
pub mod oracle;
mod rho;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use covariance::{aggregation_matrix, aggregation_matrix_at, covariance_matrix, MAX_ABS_RHO};
pub use gls::gls_fit_given_rho;
pub use rho::{estimate_rho, RhoEstimate, RhoSearch};

use crate::error::{Error, Result};
use crate::indicator::step_dummy;
use crate::series::{Frequency, PeriodId, Series, Span};

/// Quarterly residual model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Stationary AR(1) residuals.
    ChowLin,
    /// Random-walk residuals.
    Fernandez,
    /// Random walk with AR(1) increments.
    Litterman,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ChowLin => "chowlin",
            Method::Fernandez => "fernandez",
            Method::Litterman => "litterman",
        }
    }

    pub fn has_rho(self) -> bool {
        !matches!(self, Method::Fernandez)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMethod(pub String);

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown method `{}`", self.0)
    }
}

impl std::error::Error for UnknownMethod {}

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "chowlin" => Ok(Method::ChowLin),
            "fernandez" => Ok(Method::Fernandez),
            "litterman" => Ok(Method::Litterman),
            _ => Err(UnknownMethod(s.to_string())),
        }
    }
}

/// How the autoregressive parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoPolicy {
    Fixed(f64),
    Estimate(RhoSearch),
}

impl Default for RhoPolicy {
    fn default() -> Self {
        RhoPolicy::Estimate(RhoSearch::Full)
    }
}

/// Where the reported `rho` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSource {
    Fixed,
    Estimated,
    /// Fernandez: the random-walk limit, reported as `rho = 1`.
    RandomWalk,
}

/// Declarative description of one disaggregation model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub method: Method,
    pub intercept: bool,
    pub indicator_names: Vec<String>,
    pub dummies: Vec<(i32, i32)>,
    pub rho: RhoPolicy,
}

impl ModelSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            intercept: false,
            indicator_names: Vec::new(),
            dummies: Vec::new(),
            rho: RhoPolicy::default(),
        }
    }

    pub fn intercept(mut self, yes: bool) -> Self {
        self.intercept = yes;
        self
    }

    pub fn indicator(mut self, name: impl Into<String>) -> Self {
        self.indicator_names.push(name.into());
        self
    }

    pub fn dummy(mut self, from_year: i32, to_year: i32) -> Self {
        self.dummies.push((from_year, to_year));
        self
    }

    pub fn rho(mut self, rho: RhoPolicy) -> Self {
        self.rho = rho;
        self
    }

    pub fn n_regressors(&self) -> usize {
        usize::from(self.intercept) + self.indicator_names.len() + self.dummies.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_regressors() == 0 {
            return Err(Error::InvalidModel("model has no regressors".into()));
        }
        if let RhoPolicy::Fixed(r) = self.rho {
            if self.method.has_rho() && !(r.is_finite() && r.abs() <= MAX_ABS_RHO) {
                return Err(Error::RhoOutOfRange(r));
            }
        }
        for &(a, b) in &self.dummies {
            if a > b {
                return Err(Error::InvalidDummyRange { from: a, to: b });
            }
        }
        Ok(())
    }
}

/// Quarterly regressors over a common span, one labelled column each.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    span: Span,
    labels: Vec<String>,
    matrix: DMatrix<f64>,
}

impl Design {
    /// Each column series must cover `span`; it is cut to it.
    pub fn from_columns(span: Span, columns: Vec<(String, Series)>) -> Result<Self> {
        if span.frequency() != Frequency::Quarterly {
            return Err(Error::FrequencyMismatch {
                expected: Frequency::Quarterly.name(),
                got: span.frequency().name(),
            });
        }
        if columns.is_empty() {
            return Err(Error::InvalidModel("model has no regressors".into()));
        }
        let n = span.len();
        let mut matrix = DMatrix::zeros(n, columns.len());
        let mut labels = Vec::with_capacity(columns.len());
        for (j, (label, s)) in columns.into_iter().enumerate() {
            let cut = s.slice(span.first(), span.last()).map_err(|_| {
                Error::SpanMismatch(format!(
                    "regressor `{label}` ({}..{}) does not cover target span {span}",
                    s.start(),
                    s.end()
                ))
            })?;
            matrix.set_column(j, &nalgebra::DVector::from_column_slice(cut.values()));
            labels.push(label);
        }
        Ok(Self {
            span,
            labels,
            matrix,
        })
    }

    pub fn from_matrix(span: Span, labels: Vec<String>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != span.len() || matrix.ncols() != labels.len() || labels.is_empty() {
            return Err(Error::InvalidModel(format!(
                "design matrix {}x{} does not match span length {} and {} labels",
                matrix.nrows(),
                matrix.ncols(),
                span.len(),
                labels.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite regressor value".into()));
        }
        Ok(Self {
            span,
            labels,
            matrix,
        })
    }

    pub fn span(&self) -> Span {
        self.span
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_regressors(&self) -> usize {
        self.labels.len()
    }

    /// Column offset of the first constrained quarter, after checking that
    /// the span covers every constraint year in full.
    pub(crate) fn constraint_offset(&self, y_annual: &Series) -> Result<usize> {
        y_annual.require_frequency(Frequency::Annual)?;
        let first = PeriodId::quarter(y_annual.start().year(), 1);
        let last = PeriodId::quarter(y_annual.end().year(), 4);
        if !self.span.contains(first) || !self.span.contains(last) {
            return Err(Error::SpanMismatch(format!(
                "target span {} does not cover constraint years {}..{}",
                self.span,
                y_annual.start(),
                y_annual.end()
            )));
        }
        Ok(self.span.first().periods_until(first) as usize)
    }
}

/// One row of the coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub label: String,
    pub estimate: f64,
    pub standard_error: f64,
    /// `None` when the standard error is zero.
    pub t_statistic: Option<f64>,
    pub p_value: Option<f64>,
}

/// Outcome of one disaggregation fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub method: Method,
    pub coefficients: Vec<Coefficient>,
    pub rho: f64,
    pub rho_source: RhoSource,
    /// Innovation variance with divisor `n_years - k`.
    pub sigma2: f64,
    /// Annual constraint minus annualized regression fit.
    pub low_freq_residuals: Series,
    /// GLS-whitened low-frequency residuals `P u_L`, `P'P = (C V C')^-1`.
    pub whitened_residuals: Vec<f64>,
    /// `C X b`, the annualized regression fit.
    pub fitted_annual: Series,
    /// Quarterly estimate over the target span (constrained years plus any
    /// leading or trailing extrapolation).
    pub quarterly_estimate: Series,
    /// Concentrated Gaussian log-likelihood; `+inf` on an exact fit.
    pub log_likelihood: f64,
    /// Zero residuals up to rounding; standard errors are then zero.
    pub exact_fit: bool,
    /// Profile from the rho search, when rho was estimated.
    pub rho_profile: Option<Vec<(f64, f64)>>,
}

impl FitResult {
    pub fn n_years(&self) -> usize {
        self.low_freq_residuals.len()
    }

    pub fn n_regressors(&self) -> usize {
        self.coefficients.len()
    }

    /// Residual degrees of freedom, `n_years - k`.
    pub fn df(&self) -> usize {
        self.n_years() - self.n_regressors()
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }
}

/// Label used for a step dummy column.
pub fn dummy_label(from_year: i32, to_year: i32) -> String {
    format!("SD({from_year},{to_year})")
}

/// Assembles the regressor matrix for `spec` over `target_span`: intercept,
/// indicators in `spec` order, then step dummies.
pub fn build_design(
    spec: &ModelSpec,
    indicators: &BTreeMap<String, Series>,
    target_span: Span,
) -> Result<Design> {
    spec.validate()?;
    let mut columns = Vec::with_capacity(spec.n_regressors());
    if spec.intercept {
        columns.push(("c".to_string(), Series::new(target_span.first(), vec![1.0; target_span.len()])?));
    }
    for name in &spec.indicator_names {
        let s = indicators
            .get(name)
            .ok_or_else(|| Error::InvalidModel(format!("indicator `{name}` not supplied")))?;
        columns.push((name.clone(), s.clone()));
    }
    for &(a, b) in &spec.dummies {
        if b < target_span.first().year() || a > target_span.last().year() {
            return Err(Error::DummyOutsideSpan { from: a, to: b });
        }
        columns.push((dummy_label(a, b), step_dummy(a, b, target_span)?));
    }
    Design::from_columns(target_span, columns)
}

/// Fits `spec`: builds the design, resolves rho and runs the GLS smoother.
pub fn disaggregate(
    spec: &ModelSpec,
    y_annual: &Series,
    indicators: &BTreeMap<String, Series>,
    target_span: Span,
) -> Result<FitResult> {
    let design = build_design(spec, indicators, target_span)?;
    fit_design(spec.method, spec.rho, y_annual, &design)
}

/// Resolves rho per `policy` and fits. Fernandez ignores the policy.
pub fn fit_design(
    method: Method,
    policy: RhoPolicy,
    y_annual: &Series,
    design: &Design,
) -> Result<FitResult> {
    match (method, policy) {
        (Method::Fernandez, _) => gls_fit_given_rho(y_annual, design, method, 1.0),
        (_, RhoPolicy::Fixed(rho)) => {
            let mut fit = gls_fit_given_rho(y_annual, design, method, rho)?;
            fit.rho_source = RhoSource::Fixed;
            Ok(fit)
        }
        (_, RhoPolicy::Estimate(search)) => {
            let est = estimate_rho(y_annual, design, method, search)?;
            let mut fit = gls_fit_given_rho(y_annual, design, method, est.rho)?;
            fit.rho_source = RhoSource::Estimated;
            fit.rho_profile = Some(est.profile);
            Ok(fit)
        }
    }
}
