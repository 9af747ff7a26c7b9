use std::fmt::Write as _;
use std::path::Path;

use csv::{ReaderBuilder, Trim};

use super::PipelineError;
use crate::series::{Frequency, PeriodId, Series};

/// Reads a `period,value` CSV file.
pub fn load_series_csv(path: &Path, frequency: Frequency) -> Result<Series, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    parse_series_csv(&text, frequency, &path.display().to_string())
}

/// Parses `period,value` CSV text. `input` names the source in errors.
pub fn parse_series_csv(
    text: &str,
    frequency: Frequency,
    input: &str,
) -> Result<Series, PipelineError> {
    let err = |line: u64, message: String| PipelineError::Csv {
        input: input.to_string(),
        line,
        message,
    };
    let mut reader = ReaderBuilder::new()
        .trim(Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| err(1, e.to_string()))?;
    if headers.len() != 2 || &headers[0] != "period" || &headers[1] != "value" {
        return Err(err(1, "header must be `period,value`".into()));
    }

    let mut start: Option<PeriodId> = None;
    let mut prev: Option<PeriodId> = None;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let period: PeriodId = record[0]
            .parse()
            .map_err(|e: crate::error::Error| err(line, e.to_string()))?;
        if period.frequency() != frequency {
            return Err(err(
                line,
                format!("period `{period}` is not {}", frequency.name()),
            ));
        }
        let value: f64 = record[1]
            .parse()
            .map_err(|_| err(line, format!("malformed value `{}`", &record[1])))?;
        if !value.is_finite() {
            return Err(err(line, format!("non-finite value `{}`", &record[1])));
        }
        if let Some(p) = prev {
            if period <= p {
                return Err(err(line, format!("periods not increasing: {period} after {p}")));
            }
            if period != p.succ() {
                return Err(err(
                    line,
                    format!("non-contiguous series: {} missing", p.succ()),
                ));
            }
        }
        start.get_or_insert(period);
        prev = Some(period);
        values.push(value);
    }
    let start = start.ok_or_else(|| err(1, "no observations".into()))?;
    Series::new(start, values).map_err(|e| err(0, e.to_string()))
}

/// `period,value` text with shortest round-trip decimal values.
pub fn series_to_csv(series: &Series) -> String {
    let mut out = String::from("period,value\n");
    for (p, v) in series.iter() {
        let _ = writeln!(out, "{p},{v}");
    }
    out
}
