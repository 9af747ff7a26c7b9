//! Indicator preparation: arrears reallocation, step dummies and indicator
//! quality against the annual constraint.
//!
//! Arrears from delayed wage agreements show up in cash or commitment
//! sources in the quarter they are paid. An [`ArrearsEvent`] describes where
//! the money was recorded (disbursements) and where it accrued (annual
//! allocations spread over quarters with caller-supplied weights).
//! [`adjust_for_arrears`] removes the former and imputes the latter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{annualize, Frequency, PeriodId, Series, Span};

/// Default relative tolerance on `|disbursed - accrued|`.
pub const DEFAULT_BALANCE_TOLERANCE: f64 = 1e-6;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disbursement {
    pub period: PeriodId,
    pub amount: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Accrual {
    pub year: i32,
    pub allocation: f64,
    pub weights: [f64; 4],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    label: String,
    #[serde(default)]
    disbursements: Vec<Disbursement>,
    #[serde(default)]
    accruals: Vec<Accrual>,
}

/// One delayed wage-agreement episode. Construction validates the weights
/// and that the disbursed total matches the accrued total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEvent")]
pub struct ArrearsEvent {
    label: String,
    disbursements: Vec<Disbursement>,
    accruals: Vec<Accrual>,
}

impl TryFrom<RawEvent> for ArrearsEvent {
    type Error = Error;

    fn try_from(raw: RawEvent) -> Result<Self> {
        ArrearsEvent::new(raw.label, raw.disbursements, raw.accruals)
    }
}

impl ArrearsEvent {
    pub fn new(
        label: impl Into<String>,
        disbursements: Vec<Disbursement>,
        accruals: Vec<Accrual>,
    ) -> Result<Self> {
        Self::with_tolerance(label, disbursements, accruals, DEFAULT_BALANCE_TOLERANCE)
    }

    pub fn with_tolerance(
        label: impl Into<String>,
        disbursements: Vec<Disbursement>,
        accruals: Vec<Accrual>,
        balance_tolerance: f64,
    ) -> Result<Self> {
        let label = label.into();
        let invalid = |reason: String| Error::InvalidEvent {
            label: label.clone(),
            reason,
        };
        for d in &disbursements {
            if d.period.frequency() != Frequency::Quarterly {
                return Err(invalid(format!("disbursement period {} is not a quarter", d.period)));
            }
            if !(d.amount.is_finite() && d.amount >= 0.0) {
                return Err(invalid(format!("disbursement amount {} at {}", d.amount, d.period)));
            }
        }
        for a in &accruals {
            if !(a.allocation.is_finite() && a.allocation >= 0.0) {
                return Err(invalid(format!("allocation {} for {}", a.allocation, a.year)));
            }
            if a.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(invalid(format!("negative or non-finite weight for {}", a.year)));
            }
            let sum: f64 = a.weights.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(invalid(format!("weights for {} sum to {sum}", a.year)));
            }
        }
        let disbursed: f64 = disbursements.iter().map(|d| d.amount).sum();
        let accrued: f64 = accruals.iter().map(|a| a.allocation).sum();
        let scale = disbursed.abs().max(accrued.abs());
        if (disbursed - accrued).abs() > balance_tolerance * scale {
            return Err(invalid(format!(
                "disbursed total {disbursed} differs from accrued total {accrued}"
            )));
        }
        Ok(Self {
            label,
            disbursements,
            accruals,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn disbursements(&self) -> &[Disbursement] {
        &self.disbursements
    }

    pub fn accruals(&self) -> &[Accrual] {
        &self.accruals
    }
}

/// Indicator-vs-constraint agreement on annual levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorQuality {
    pub first_year: i32,
    pub last_year: i32,
    /// Pearson correlation of annualized indicator and constraint levels.
    pub correlation: f64,
    /// Mean of the yearly coverage percentages.
    pub coverage_rate_pct: f64,
    /// `100 * sum(indicator) / sum(constraint)` over the common years.
    pub ratio_of_totals_pct: f64,
    pub per_year_coverage: Vec<(i32, f64)>,
}

/// Step dummy `SD(from_year, to_year)` over a quarterly span.
pub fn step_dummy(from_year: i32, to_year: i32, span: Span) -> Result<Series> {
    if from_year > to_year {
        return Err(Error::InvalidDummyRange {
            from: from_year,
            to: to_year,
        });
    }
    if span.frequency() != Frequency::Quarterly {
        return Err(Error::FrequencyMismatch {
            expected: Frequency::Quarterly.name(),
            got: span.frequency().name(),
        });
    }
    let values = span
        .periods()
        .map(|p| f64::from(u8::from((from_year..=to_year).contains(&p.year()))))
        .collect();
    Series::new(span.first(), values)
}

/// Subtracts each recorded disbursement from its quarter.
pub fn net_arrears(raw: &Series, event: &ArrearsEvent) -> Result<Series> {
    raw.require_frequency(Frequency::Quarterly)?;
    let mut values = raw.values().to_vec();
    for d in &event.disbursements {
        let i = raw
            .index_of(d.period)
            .ok_or(Error::DisbursementOutsideSpan(d.period))?;
        values[i] -= d.amount;
    }
    raw.with_values(values)
}

/// Adds `allocation * weight_k` to quarter `k` of each accrual year.
pub fn impute_accruals(netted: &Series, event: &ArrearsEvent) -> Result<Series> {
    netted.require_frequency(Frequency::Quarterly)?;
    let mut values = netted.values().to_vec();
    for a in &event.accruals {
        let first = netted
            .index_of(PeriodId::quarter(a.year, 1))
            .filter(|_| netted.contains(PeriodId::quarter(a.year, 4)))
            .ok_or(Error::AccrualOutsideSpan(a.year))?;
        for (k, w) in a.weights.iter().enumerate() {
            values[first + k] += a.allocation * w;
        }
    }
    netted.with_values(values)
}

/// Applies netting then imputation for each event, in list order.
pub fn adjust_for_arrears(raw: &Series, events: &[ArrearsEvent]) -> Result<Series> {
    events.iter().try_fold(raw.clone(), |acc, event| {
        impute_accruals(&net_arrears(&acc, event)?, event)
    })
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let denom = (sxx * syy).sqrt();
    (denom > 0.0).then(|| (sxy / denom).clamp(-1.0, 1.0))
}

/// Correlation and coverage of the annualized indicator against the constraint.
pub fn indicator_quality(indicator: &Series, constraint: &Series) -> Result<IndicatorQuality> {
    constraint.require_frequency(Frequency::Annual)?;
    let annual = annualize(indicator)?;
    let first = annual.start().max(constraint.start());
    let last = annual.end().min(constraint.end());
    let common = if first <= last {
        first.periods_until(last) as usize + 1
    } else {
        0
    };
    if common < 3 {
        return Err(Error::InsufficientOverlap {
            needed: 3,
            got: common,
        });
    }
    let ind = annual.slice(first, last)?;
    let con = constraint.slice(first, last)?;
    let per_year_coverage = ind
        .iter()
        .zip(con.values())
        .map(|((p, i), &c)| {
            if c == 0.0 {
                Err(Error::ZeroConstraintYear(p.year()))
            } else {
                Ok((p.year(), 100.0 * i / c))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let correlation = pearson(ind.values(), con.values()).ok_or(Error::ConstantSeries)?;
    let coverage_rate_pct =
        per_year_coverage.iter().map(|(_, c)| c).sum::<f64>() / per_year_coverage.len() as f64;
    let ratio_of_totals_pct =
        100.0 * ind.values().iter().sum::<f64>() / con.values().iter().sum::<f64>();
    Ok(IndicatorQuality {
        first_year: first.year(),
        last_year: last.year(),
        correlation,
        coverage_rate_pct,
        ratio_of_totals_pct,
        per_year_coverage,
    })
}
