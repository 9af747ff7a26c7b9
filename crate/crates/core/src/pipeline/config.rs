//! Job configuration file.
//!
//! ```json
//! {
//!   "output_dir": "out",
//!   "jobs": [{
//!     "name": "cg",
//!     "constraint": "cg_annual.csv",
//!     "indicators": [{"label": "state", "path": "cg_state.csv", "arrears": "cg_arrears.json"}],
//!     "method": "fernandez",
//!     "intercept": true,
//!     "dummies": [[2012, 2015], [2021, 2024]],
//!     "target_span": {"first": "1999Q1", "last": "2025Q1"}
//!   }]
//! }
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer};
use serde_json::Value;

use super::PipelineError;
use crate::diagnostics::{DiagnosticsOptions, ResidualKind, DEFAULT_LJUNG_BOX_LAGS};
use crate::disagg::{Method, ModelSpec, RhoPolicy, RhoSearch, MAX_ABS_RHO};
use crate::series::{Frequency, PeriodId, Span};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSource {
    pub label: String,
    pub path: PathBuf,
    /// Arrears events applied to this source before any summation.
    #[serde(default)]
    pub arrears: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpan {
    pub first: PeriodId,
    pub last: PeriodId,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_lags")]
    pub ljung_box_lags: usize,
    #[serde(default = "default_true")]
    pub whitened: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            ljung_box_lags: DEFAULT_LJUNG_BOX_LAGS,
            whitened: true,
        }
    }
}

fn default_lags() -> usize {
    DEFAULT_LJUNG_BOX_LAGS
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoSetting {
    Estimate,
    Fixed(f64),
}

impl<'de> Deserialize<'de> for RhoSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "estimate" => Ok(RhoSetting::Estimate),
            Value::Number(n) => n
                .as_f64()
                .map(RhoSetting::Fixed)
                .ok_or_else(|| serde::de::Error::custom("invalid rho")),
            other => Err(serde::de::Error::custom(format!(
                "rho must be \"estimate\" or a number, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RhoSearchSetting {
    Full,
    Nonnegative,
}

fn method_from_str<'de, D: Deserializer<'de>>(d: D) -> Result<Method, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJob {
    name: String,
    constraint: PathBuf,
    indicators: Vec<IndicatorSource>,
    #[serde(default)]
    sum_indicators: bool,
    #[serde(default)]
    arrears: Option<PathBuf>,
    #[serde(deserialize_with = "method_from_str")]
    method: Method,
    #[serde(default)]
    intercept: bool,
    #[serde(default)]
    rho: Option<RhoSetting>,
    #[serde(default)]
    rho_search: Option<RhoSearchSetting>,
    #[serde(default)]
    dummies: Vec<[i32; 2]>,
    #[serde(default)]
    target_span: Option<TargetSpan>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    diagnostics: DiagnosticsConfig,
}

/// One validated disaggregation job. Paths are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub name: String,
    pub constraint: PathBuf,
    pub indicators: Vec<IndicatorSource>,
    pub sum_indicators: bool,
    /// Applied to the model indicator: the sum, or the only source.
    pub arrears: Option<PathBuf>,
    pub method: Method,
    pub intercept: bool,
    pub rho: RhoPolicy,
    pub dummies: Vec<(i32, i32)>,
    pub target_span: Option<Span>,
    pub output_dir: Option<PathBuf>,
    pub diagnostics: DiagnosticsOptions,
}

impl JobConfig {
    /// Regressor label of the summed indicator.
    pub fn summed_label(&self) -> String {
        self.indicators
            .iter()
            .map(|i| i.label.as_str())
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn model_spec(&self) -> ModelSpec {
        let names = if self.sum_indicators {
            vec![self.summed_label()]
        } else {
            self.indicators.iter().map(|i| i.label.clone()).collect()
        };
        ModelSpec {
            method: self.method,
            intercept: self.intercept,
            indicator_names: names,
            dummies: self.dummies.clone(),
            rho: self.rho,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub base_dir: PathBuf,
    pub output_dir: PathBuf,
    pub jobs: Vec<JobConfig>,
}

impl Config {
    /// Config paths as written, for reporting digests with stable names.
    pub fn display_path(&self, p: &Path) -> String {
        p.strip_prefix(&self.base_dir)
            .unwrap_or(p)
            .display()
            .to_string()
    }
}

fn config_error(job: Option<&str>, message: impl Into<String>) -> PipelineError {
    PipelineError::Config {
        job: job.map(str::to_string),
        message: message.into(),
    }
}

/// Reads and validates a config file; defaults are applied.
pub fn parse_config(path: &Path) -> Result<Config, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    parse_config_str(&text, &base_dir)
}

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<Config, PipelineError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| config_error(None, format!("invalid JSON: {e}")))?;
    let Value::Object(mut root) = root else {
        return Err(config_error(None, "top level must be an object"));
    };
    let jobs = match root.remove("jobs") {
        Some(Value::Array(jobs)) => jobs,
        Some(_) => return Err(config_error(None, "`jobs` must be an array")),
        None => return Err(config_error(None, "missing key `jobs`")),
    };
    let output_dir = match root.remove("output_dir") {
        None => base_dir.join("out"),
        Some(Value::String(s)) => base_dir.join(s),
        Some(_) => return Err(config_error(None, "`output_dir` must be a string")),
    };
    if let Some(key) = root.keys().next() {
        return Err(config_error(None, format!("unknown key `{key}`")));
    }
    if jobs.is_empty() {
        return Err(config_error(None, "`jobs` is empty"));
    }

    let mut seen = BTreeSet::new();
    let mut parsed = Vec::with_capacity(jobs.len());
    for (i, value) in jobs.into_iter().enumerate() {
        let fallback = format!("#{}", i + 1);
        let label = value
            .get("name")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or(fallback);
        let raw: RawJob =
            serde_json::from_value(value).map_err(|e| config_error(Some(&label), e.to_string()))?;
        let job = validate(raw, base_dir)?;
        if !seen.insert(job.name.clone()) {
            return Err(config_error(Some(&job.name), "duplicate job name"));
        }
        parsed.push(job);
    }
    Ok(Config {
        base_dir: base_dir.to_path_buf(),
        output_dir,
        jobs: parsed,
    })
}

fn validate(raw: RawJob, base: &Path) -> Result<JobConfig, PipelineError> {
    let name = raw.name;
    let fail = |m: String| config_error(Some(&name), m);
    if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
        return Err(fail(format!("invalid job name `{name}`")));
    }
    if raw.indicators.is_empty() {
        return Err(fail("`indicators` is empty".into()));
    }
    let mut labels = BTreeSet::new();
    for ind in &raw.indicators {
        if !labels.insert(ind.label.as_str()) {
            return Err(fail(format!("duplicate indicator label `{}`", ind.label)));
        }
    }
    if raw.sum_indicators && raw.indicators.len() < 2 {
        return Err(fail("`sum_indicators` needs at least two indicators".into()));
    }
    if raw.arrears.is_some() && !raw.sum_indicators && raw.indicators.len() > 1 {
        return Err(fail(
            "job-level `arrears` needs a single indicator or `sum_indicators`; attach events per indicator instead".into(),
        ));
    }
    for &[a, b] in &raw.dummies {
        if a > b {
            return Err(fail(format!("invalid dummy range SD({a},{b})")));
        }
    }
    let search = match raw.rho_search {
        None | Some(RhoSearchSetting::Full) => RhoSearch::Full,
        Some(RhoSearchSetting::Nonnegative) => RhoSearch::NonNegative,
    };
    let rho = match raw.rho {
        None | Some(RhoSetting::Estimate) => RhoPolicy::Estimate(search),
        Some(RhoSetting::Fixed(r)) => {
            if raw.method.has_rho() && r.abs() > MAX_ABS_RHO {
                return Err(fail(format!("rho out of admissible range: {r}")));
            }
            RhoPolicy::Fixed(r)
        }
    };
    if raw.diagnostics.ljung_box_lags == 0 {
        return Err(fail("`diagnostics.ljung_box_lags` must be positive".into()));
    }
    let target_span = match raw.target_span {
        None => None,
        Some(t) => {
            if t.first.frequency() != Frequency::Quarterly || t.last.frequency() != Frequency::Quarterly {
                return Err(fail("`target_span` bounds must be quarters".into()));
            }
            Some(Span::new(t.first, t.last).map_err(|e| fail(e.to_string()))?)
        }
    };
    let resolve = |p: PathBuf| base.join(p);
    Ok(JobConfig {
        constraint: resolve(raw.constraint),
        indicators: raw
            .indicators
            .into_iter()
            .map(|i| IndicatorSource {
                label: i.label,
                path: resolve(i.path),
                arrears: i.arrears.map(resolve),
            })
            .collect(),
        sum_indicators: raw.sum_indicators,
        arrears: raw.arrears.map(resolve),
        method: raw.method,
        intercept: raw.intercept,
        rho,
        dummies: raw.dummies.iter().map(|&[a, b]| (a, b)).collect(),
        target_span,
        output_dir: raw.output_dir.map(resolve),
        diagnostics: DiagnosticsOptions {
            ljung_box_lags: raw.diagnostics.ljung_box_lags,
            residuals: if raw.diagnostics.whitened {
                ResidualKind::Whitened
            } else {
                ResidualKind::Raw
            },
        },
        name,
    })
}
