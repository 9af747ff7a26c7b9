use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::report::JobReport;
use super::{parse_series_csv, series_to_csv, Config, JobConfig, PipelineError, Stage};
use crate::diagnostics::{diagnose, movement_stats, Unavailable};
use crate::disagg::{disaggregate, FitResult};
use crate::indicator::{adjust_for_arrears, indicator_quality, ArrearsEvent};
use crate::series::{Frequency, PeriodId, Series, Span};

/// Parses an arrears events file: a JSON array of events.
pub fn load_events(path: &Path) -> Result<Vec<ArrearsEvent>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    parse_events(&text, path)
}

fn parse_events(text: &str, path: &Path) -> Result<Vec<ArrearsEvent>, PipelineError> {
    serde_json::from_str(text).map_err(|e| PipelineError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Result of one successful job.
#[derive(Debug, Clone)]
pub struct JobOutput {
    pub job: String,
    pub dir: PathBuf,
    pub fit: FitResult,
    /// The model indicator after arrears adjustment and summation.
    pub indicator: Series,
    pub report: JobReport,
}

#[derive(Debug)]
pub struct JobOutcome {
    pub job: String,
    pub result: Result<JobOutput, PipelineError>,
}

struct Inputs<'a> {
    config: &'a Config,
    job: &'a str,
    digests: BTreeMap<String, String>,
}

impl Inputs<'_> {
    fn read(&mut self, path: &Path) -> Result<String, PipelineError> {
        let bytes = std::fs::read(path)
            .map_err(|e| PipelineError::stage(self.job, Stage::Load, PipelineError::io(path, e)))?;
        self.digests.insert(
            self.config.display_path(path),
            hex::encode(Sha256::digest(&bytes)),
        );
        String::from_utf8(bytes)
            .map_err(|_| PipelineError::stage(self.job, Stage::Load, format!("{} is not UTF-8", path.display())))
    }

    fn series(&mut self, path: &Path, frequency: Frequency) -> Result<Series, PipelineError> {
        let text = self.read(path)?;
        parse_series_csv(&text, frequency, &path.display().to_string())
            .map_err(|e| PipelineError::stage(self.job, Stage::Load, e))
    }

    fn events(&mut self, path: &Path) -> Result<Vec<ArrearsEvent>, PipelineError> {
        let text = self.read(path)?;
        parse_events(&text, path).map_err(|e| PipelineError::stage(self.job, Stage::Load, e))
    }
}

fn sum_common(name: &str, parts: &[Series]) -> Result<Series, PipelineError> {
    let first = parts.iter().map(Series::start).max().expect("non-empty");
    let last = parts.iter().map(Series::end).min().expect("non-empty");
    if first > last {
        return Err(PipelineError::stage(name, Stage::Indicators, "summed indicators share no quarter"));
    }
    let mut total = vec![0.0; (first.periods_until(last) + 1) as usize];
    for part in parts {
        let s = part
            .slice(first, last)
            .map_err(|e| PipelineError::stage(name, Stage::Indicators, e))?;
        for (t, v) in total.iter_mut().zip(s.values()) {
            *t += v;
        }
    }
    Series::new(first, total).map_err(|e| PipelineError::stage(name, Stage::Indicators, e))
}

fn rebased(values: &[f64]) -> Vec<Option<f64>> {
    let base = values[0];
    values
        .iter()
        .map(|v| (base != 0.0).then(|| 100.0 * v / base))
        .collect()
}

fn plot_csv(indicator: &Series, estimate: &Series) -> String {
    let mut out = String::from("period,indicator_rebased,estimate_rebased\n");
    let ind = rebased(indicator.values());
    let est = rebased(estimate.values());
    let cell = |v: Option<f64>| v.and_then(super::format_statistic).unwrap_or_default();
    for (i, p) in estimate.periods().enumerate() {
        let _ = writeln!(out, "{p},{},{}", cell(ind[i]), cell(est[i]));
    }
    out
}

/// Runs one job and writes its three output files into `out_root/<job>`
/// (or the job's own `output_dir`).
pub fn run_job(job: &JobConfig, config: &Config, out_root: &Path) -> Result<JobOutput, PipelineError> {
    let name = job.name.as_str();
    let fail = |stage: Stage| move |e: crate::Error| PipelineError::stage(name, stage, e);
    let mut inputs = Inputs {
        config,
        job: name,
        digests: BTreeMap::new(),
    };

    let constraint = inputs.series(&job.constraint, Frequency::Annual)?;
    let mut sources = Vec::with_capacity(job.indicators.len());
    for src in &job.indicators {
        let mut series = inputs.series(&src.path, Frequency::Quarterly)?;
        if let Some(path) = &src.arrears {
            let events = inputs.events(path)?;
            series = adjust_for_arrears(&series, &events).map_err(fail(Stage::Arrears))?;
        }
        sources.push((src.label.clone(), series));
    }
    let mut model: Vec<(String, Series)> = if job.sum_indicators {
        let parts: Vec<Series> = sources.into_iter().map(|(_, s)| s).collect();
        vec![(job.summed_label(), sum_common(name, &parts)?)]
    } else {
        sources
    };
    if let Some(path) = &job.arrears {
        let events = inputs.events(path)?;
        let (_, series) = &mut model[0];
        *series = adjust_for_arrears(series, &events).map_err(fail(Stage::Arrears))?;
    }

    let target = match job.target_span {
        Some(span) => span,
        None => {
            let first = PeriodId::quarter(constraint.start().year(), 1);
            let last = model.iter().map(|(_, s)| s.end()).min().expect("indicator present");
            Span::new(first, last).map_err(fail(Stage::Indicators))?
        }
    };
    let indicator = model[0].1.clone();
    let indicators: BTreeMap<String, Series> = model.into_iter().collect();
    let fit = disaggregate(&job.model_spec(), &constraint, &indicators, target)
        .map_err(fail(Stage::Disaggregate))?;

    let diag = diagnose(&fit, &constraint, job.intercept, job.diagnostics);
    let mut unavailable = Vec::new();
    let quality = indicator_quality(&indicator, &constraint)
        .map_err(|e| unavailable.push(Unavailable { test: "indicator_quality", reason: e.to_string() }))
        .ok();
    let on_target = indicator
        .slice(target.first(), target.last())
        .map_err(fail(Stage::Indicators))?;
    let movement = movement_stats(&on_target, &fit.quarterly_estimate)
        .map_err(|e| unavailable.push(Unavailable { test: "movement", reason: e.to_string() }))
        .ok();

    let report = JobReport::build(
        job,
        inputs.digests,
        target,
        &fit,
        &diag,
        movement.as_ref(),
        quality.as_ref(),
        unavailable,
    );

    let dir = job.output_dir.clone().unwrap_or_else(|| out_root.join(name));
    let write = |file: String, contents: &str| -> Result<(), PipelineError> {
        let path = dir.join(file);
        std::fs::write(&path, contents)
            .map_err(|e| PipelineError::stage(name, Stage::Write, PipelineError::io(&path, e)))
    };
    std::fs::create_dir_all(&dir)
        .map_err(|e| PipelineError::stage(name, Stage::Write, PipelineError::io(&dir, e)))?;
    write(format!("{name}_quarterly.csv"), &series_to_csv(&fit.quarterly_estimate))?;
    write(format!("{name}_report.json"), &report.to_json())?;
    write(format!("{name}_plot.csv"), &plot_csv(&on_target, &fit.quarterly_estimate))?;

    Ok(JobOutput {
        job: job.name.clone(),
        dir,
        fit,
        indicator,
        report,
    })
}

/// Runs the selected jobs (all when `only` is `None`) in parallel. Outcomes
/// come back in config order; a failed job does not stop the others.
pub fn run_config(
    config: &Config,
    only: Option<&[String]>,
    out_root: Option<&Path>,
) -> Result<Vec<JobOutcome>, PipelineError> {
    if let Some(names) = only {
        for n in names {
            if !config.jobs.iter().any(|j| &j.name == n) {
                return Err(PipelineError::Config {
                    job: Some(n.clone()),
                    message: "no such job".into(),
                });
            }
        }
    }
    let out_root = out_root.unwrap_or(&config.output_dir);
    let selected: Vec<&JobConfig> = config
        .jobs
        .iter()
        .filter(|j| only.is_none_or(|names| names.contains(&j.name)))
        .collect();
    Ok(selected
        .par_iter()
        .map(|job| JobOutcome {
            job: job.name.clone(),
            result: run_job(job, config, out_root),
        })
        .collect())
}
