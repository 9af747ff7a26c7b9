//! Python bindings: `import tempdis_py`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use tempdis::diagnostics::{self, DiagnosticsOptions, ResidualKind};
use tempdis::indicator::{self, ArrearsEvent};
use tempdis::pipeline;
use tempdis::{Method, ModelSpec, PeriodId, RhoPolicy, RhoSearch};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts any serializable value through JSON into plain Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A contiguous annual or quarterly series.
#[pyclass(name = "Series", module = "tempdis_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySeries {
    inner: tempdis::Series,
}

impl From<tempdis::Series> for PySeries {
    fn from(inner: tempdis::Series) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PySeries {
    /// `Series("1999Q1", [...])` or `Series("1999", [...])`.
    #[new]
    fn new(start: &str, values: Vec<f64>) -> PyResult<Self> {
        let start: PeriodId = start.parse().map_err(value_error)?;
        Ok(tempdis::Series::new(start, values).map_err(value_error)?.into())
    }

    #[getter]
    fn start(&self) -> String {
        self.inner.start().to_string()
    }

    #[getter]
    fn end(&self) -> String {
        self.inner.end().to_string()
    }

    #[getter]
    fn frequency(&self) -> &'static str {
        self.inner.frequency().name()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn periods(&self) -> Vec<String> {
        self.inner.periods().map(|p| p.to_string()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Series({}..{}, {} {} values)",
            self.inner.start(),
            self.inner.end(),
            self.inner.len(),
            self.inner.frequency().name()
        )
    }

    fn __eq__(&self, other: PyRef<'_, PySeries>) -> bool {
        self.inner == other.inner
    }
}

/// Result of one disaggregation fit.
#[pyclass(name = "FitResult", module = "tempdis_py", frozen)]
struct PyFitResult {
    inner: tempdis::FitResult,
}

#[pymethods]
impl PyFitResult {
    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.name()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn rho_source<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.rho_source)
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.sigma2
    }

    #[getter]
    fn log_likelihood(&self) -> f64 {
        self.inner.log_likelihood
    }

    #[getter]
    fn exact_fit(&self) -> bool {
        self.inner.exact_fit
    }

    #[getter]
    fn df(&self) -> usize {
        self.inner.df()
    }

    /// List of dicts with label, estimate, standard_error, t_statistic, p_value.
    #[getter]
    fn coefficients<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.coefficients)
    }

    #[getter]
    fn quarterly_estimate(&self) -> PySeries {
        self.inner.quarterly_estimate.clone().into()
    }

    #[getter]
    fn fitted_annual(&self) -> PySeries {
        self.inner.fitted_annual.clone().into()
    }

    #[getter]
    fn low_freq_residuals(&self) -> PySeries {
        self.inner.low_freq_residuals.clone().into()
    }

    #[getter]
    fn whitened_residuals(&self) -> Vec<f64> {
        self.inner.whitened_residuals.clone()
    }

    #[getter]
    fn rho_profile(&self) -> Option<Vec<(f64, f64)>> {
        self.inner.rho_profile.clone()
    }

    /// Full diagnostics battery as a dict.
    #[pyo3(signature = (constraint, intercept, ljung_box_lags = diagnostics::DEFAULT_LJUNG_BOX_LAGS, whitened = true))]
    fn diagnose<'py>(
        &self,
        py: Python<'py>,
        constraint: PyRef<'_, PySeries>,
        intercept: bool,
        ljung_box_lags: usize,
        whitened: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let options = DiagnosticsOptions {
            ljung_box_lags,
            residuals: if whitened { ResidualKind::Whitened } else { ResidualKind::Raw },
        };
        to_py(py, &diagnostics::diagnose(&self.inner, &constraint.inner, intercept, options))
    }

    fn __repr__(&self) -> String {
        format!(
            "FitResult({}, rho={:.3}, {} coefficients, {} years)",
            self.inner.method.name(),
            self.inner.rho,
            self.inner.coefficients.len(),
            self.inner.n_years()
        )
    }
}

/// Disaggregates `constraint` with the named quarterly indicators.
///
/// `rho=None` estimates rho by maximum likelihood; `first`/`last` bound the
/// target span (default: first constraint quarter to the indicators' end).
#[pyfunction]
#[pyo3(signature = (constraint, indicators, method, intercept = false, dummies = Vec::new(), rho = None, nonnegative = false, first = None, last = None))]
#[allow(clippy::too_many_arguments)]
fn disaggregate(
    constraint: PyRef<'_, PySeries>,
    indicators: &Bound<'_, PyDict>,
    method: &str,
    intercept: bool,
    dummies: Vec<(i32, i32)>,
    rho: Option<f64>,
    nonnegative: bool,
    first: Option<&str>,
    last: Option<&str>,
) -> PyResult<PyFitResult> {
    let method: Method = method.parse().map_err(value_error)?;
    let mut series = BTreeMap::new();
    let mut spec = ModelSpec::new(method).intercept(intercept);
    for (name, value) in indicators.iter() {
        let name: String = name.extract()?;
        let s: PyRef<'_, PySeries> = value.extract()?;
        series.insert(name.clone(), s.inner.clone());
        spec = spec.indicator(name);
    }
    for (a, b) in dummies {
        spec = spec.dummy(a, b);
    }
    spec = spec.rho(match rho {
        Some(r) => RhoPolicy::Fixed(r),
        None if nonnegative => RhoPolicy::Estimate(RhoSearch::NonNegative),
        None => RhoPolicy::Estimate(RhoSearch::Full),
    });
    let y = &constraint.inner;
    let first = match first {
        Some(p) => p.parse().map_err(value_error)?,
        None => PeriodId::quarter(y.start().year(), 1),
    };
    let last = match last {
        Some(p) => p.parse().map_err(value_error)?,
        None => series
            .values()
            .map(|s| s.end())
            .min()
            .ok_or_else(|| value_error("no indicator given; pass `last`"))?,
    };
    let span = tempdis::Span::new(first, last).map_err(value_error)?;
    let fit = tempdis::disaggregate(&spec, y, &series, span).map_err(value_error)?;
    Ok(PyFitResult { inner: fit })
}

#[pyfunction]
fn annualize(series: PyRef<'_, PySeries>) -> PyResult<PySeries> {
    Ok(tempdis::annualize(&series.inner).map_err(value_error)?.into())
}

#[pyfunction]
fn pct_change_prev(series: PyRef<'_, PySeries>) -> PyResult<PySeries> {
    Ok(tempdis::pct_change_prev(&series.inner).map_err(value_error)?.into())
}

#[pyfunction]
fn pct_change_year_ago(series: PyRef<'_, PySeries>) -> PyResult<PySeries> {
    Ok(tempdis::pct_change_year_ago(&series.inner).map_err(value_error)?.into())
}

#[pyfunction]
fn step_dummy(from_year: i32, to_year: i32, first: &str, last: &str) -> PyResult<PySeries> {
    let span = tempdis::Span::new(first.parse().map_err(value_error)?, last.parse().map_err(value_error)?)
        .map_err(value_error)?;
    Ok(indicator::step_dummy(from_year, to_year, span).map_err(value_error)?.into())
}

/// Applies arrears events given as the JSON text of an events file.
#[pyfunction]
fn adjust_for_arrears(series: PyRef<'_, PySeries>, events_json: &str) -> PyResult<PySeries> {
    let events: Vec<ArrearsEvent> = serde_json::from_str(events_json).map_err(value_error)?;
    Ok(indicator::adjust_for_arrears(&series.inner, &events).map_err(value_error)?.into())
}

#[pyfunction]
fn indicator_quality<'py>(
    py: Python<'py>,
    indicator: PyRef<'_, PySeries>,
    constraint: PyRef<'_, PySeries>,
) -> PyResult<Bound<'py, PyAny>> {
    let q = indicator::indicator_quality(&indicator.inner, &constraint.inner).map_err(value_error)?;
    to_py(py, &q)
}

#[pyfunction]
fn durbin_watson(residuals: Vec<f64>) -> PyResult<f64> {
    diagnostics::durbin_watson(&residuals).map_err(value_error)
}

#[pyfunction]
fn jarque_bera<'py>(py: Python<'py>, residuals: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &diagnostics::jarque_bera(&residuals).map_err(value_error)?)
}

#[pyfunction]
fn het_ratio_test<'py>(py: Python<'py>, residuals: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &diagnostics::het_ratio_test(&residuals).map_err(value_error)?)
}

#[pyfunction]
#[pyo3(signature = (residuals, max_lag = diagnostics::DEFAULT_LJUNG_BOX_LAGS))]
fn ljung_box<'py>(py: Python<'py>, residuals: Vec<f64>, max_lag: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &diagnostics::ljung_box(&residuals, max_lag).map_err(value_error)?)
}

#[pyfunction]
fn movement_stats<'py>(
    py: Python<'py>,
    indicator: PyRef<'_, PySeries>,
    estimate: PyRef<'_, PySeries>,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &diagnostics::movement_stats(&indicator.inner, &estimate.inner).map_err(value_error)?)
}

/// Runs a config file; returns `(job, error or None)` pairs in config order.
#[pyfunction]
#[pyo3(signature = (config, out = None))]
fn run_config(py: Python<'_>, config: PathBuf, out: Option<PathBuf>) -> PyResult<Vec<(String, Option<String>)>> {
    let cfg = pipeline::parse_config(&config).map_err(value_error)?;
    let outcomes = py
        .detach(|| pipeline::run_config(&cfg, None, out.as_deref()))
        .map_err(value_error)?;
    Ok(outcomes
        .into_iter()
        .map(|o| (o.job, o.result.err().map(|e| e.to_string())))
        .collect())
}

#[pymodule]
fn tempdis_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySeries>()?;
    m.add_class::<PyFitResult>()?;
    m.add_function(wrap_pyfunction!(disaggregate, m)?)?;
    m.add_function(wrap_pyfunction!(annualize, m)?)?;
    m.add_function(wrap_pyfunction!(pct_change_prev, m)?)?;
    m.add_function(wrap_pyfunction!(pct_change_year_ago, m)?)?;
    m.add_function(wrap_pyfunction!(step_dummy, m)?)?;
    m.add_function(wrap_pyfunction!(adjust_for_arrears, m)?)?;
    m.add_function(wrap_pyfunction!(indicator_quality, m)?)?;
    m.add_function(wrap_pyfunction!(durbin_watson, m)?)?;
    m.add_function(wrap_pyfunction!(jarque_bera, m)?)?;
    m.add_function(wrap_pyfunction!(het_ratio_test, m)?)?;
    m.add_function(wrap_pyfunction!(ljung_box, m)?)?;
    m.add_function(wrap_pyfunction!(movement_stats, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
