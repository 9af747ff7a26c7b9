//! Config-driven batch runner: one disaggregation job per target series.
//!
//! Each job loads its inputs, adjusts indicators for arrears, fits the model,
//! runs the diagnostics and writes three files into its own directory:
//! `<job>_quarterly.csv`, `<job>_report.json` and `<job>_plot.csv`.

mod config;
mod csv_io;
mod report;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};

pub use config::{
    parse_config, parse_config_str, Config, DiagnosticsConfig, IndicatorSource, JobConfig,
    RhoSetting, TargetSpan,
};
pub use csv_io::{load_series_csv, parse_series_csv, series_to_csv};
pub use report::{format_p_value, format_statistic, JobReport};
pub use run::{load_events, run_config, run_job, JobOutcome, JobOutput};

/// Pipeline step a job failed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Arrears,
    Indicators,
    Disaggregate,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Arrears => "arrears",
            Stage::Indicators => "indicators",
            Stage::Disaggregate => "disaggregate",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config{}: {message}", job.as_ref().map(|j| format!(" (job `{j}`)")).unwrap_or_default())]
    Config { job: Option<String>, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{input}:{line}: {message}")]
    Csv {
        input: String,
        line: u64,
        message: String,
    },
    #[error("job `{job}` failed at {stage}: {message}")]
    Stage {
        job: String,
        stage: Stage,
        message: String,
    },
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn stage(job: &str, stage: Stage, err: impl fmt::Display) -> Self {
        PipelineError::Stage {
            job: job.to_string(),
            stage,
            message: err.to_string(),
        }
    }
}
