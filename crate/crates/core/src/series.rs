//! Frequency-stamped contiguous time series, calendar arithmetic, flow
//! aggregation and growth-rate transforms.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Observation frequency. Only annual and quarterly series are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Frequency {
    Annual,
    Quarterly,
}

impl Frequency {
    /// Subperiods per year.
    pub fn periods_per_year(self) -> u8 {
        match self {
            Frequency::Annual => 1,
            Frequency::Quarterly => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Frequency::Annual => "annual",
            Frequency::Quarterly => "quarterly",
        }
    }
}

/// A calendar period: a year, or a quarter within a year.
///
/// Ordering is lexicographic on `(year, subperiod)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PeriodId {
    year: i32,
    subperiod: u8,
    frequency: Frequency,
}

impl PeriodId {
    pub fn new(year: i32, subperiod: u8, frequency: Frequency) -> Result<Self> {
        if subperiod < 1 || subperiod > frequency.periods_per_year() {
            return Err(Error::InvalidPeriod(format!(
                "subperiod {subperiod} invalid for {} frequency",
                frequency.name()
            )));
        }
        Ok(Self {
            year,
            subperiod,
            frequency,
        })
    }

    pub fn annual(year: i32) -> Self {
        Self {
            year,
            subperiod: 1,
            frequency: Frequency::Annual,
        }
    }

    /// Panics if `quarter` is not in 1..=4.
    pub fn quarter(year: i32, quarter: u8) -> Self {
        assert!((1..=4).contains(&quarter), "quarter {quarter} out of range");
        Self {
            year,
            subperiod: quarter,
            frequency: Frequency::Quarterly,
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn subperiod(self) -> u8 {
        self.subperiod
    }

    pub fn frequency(self) -> Frequency {
        self.frequency
    }

    /// Periods elapsed since year 0, subperiod 1. Used for offsets.
    fn ordinal(self) -> i64 {
        let p = i64::from(self.frequency.periods_per_year());
        i64::from(self.year) * p + i64::from(self.subperiod) - 1
    }

    fn from_ordinal(ordinal: i64, frequency: Frequency) -> Self {
        let p = i64::from(frequency.periods_per_year());
        Self {
            year: ordinal.div_euclid(p) as i32,
            subperiod: (ordinal.rem_euclid(p) + 1) as u8,
            frequency,
        }
    }

    /// The period `n` steps later (earlier for negative `n`).
    pub fn offset(self, n: i64) -> Self {
        Self::from_ordinal(self.ordinal() + n, self.frequency)
    }

    pub fn succ(self) -> Self {
        self.offset(1)
    }

    pub fn pred(self) -> Self {
        self.offset(-1)
    }

    /// Signed number of periods from `self` to `other`. Both must share a frequency.
    pub fn periods_until(self, other: PeriodId) -> i64 {
        debug_assert_eq!(self.frequency, other.frequency);
        other.ordinal() - self.ordinal()
    }
}

impl fmt::Display for PeriodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frequency {
            Frequency::Annual => write!(f, "{}", self.year),
            Frequency::Quarterly => write!(f, "{}Q{}", self.year, self.subperiod),
        }
    }
}

impl FromStr for PeriodId {
    type Err = Error;

    /// Parses `YYYY` (annual) or `YYYYQn` (quarterly).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidPeriod(format!("malformed period literal `{s}`"));
        let (year_part, quarter) = match s.find(['Q', 'q']) {
            Some(pos) => {
                let q = &s[pos + 1..];
                if q.len() != 1 {
                    return Err(bad());
                }
                let q: u8 = q.parse().map_err(|_| bad())?;
                (&s[..pos], Some(q))
            }
            None => (s, None),
        };
        if year_part.len() != 4 || !year_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year: i32 = year_part.parse().map_err(|_| bad())?;
        match quarter {
            None => Ok(PeriodId::annual(year)),
            Some(q) if (1..=4).contains(&q) => Ok(PeriodId::quarter(year, q)),
            Some(_) => Err(bad()),
        }
    }
}

impl serde::Serialize for PeriodId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PeriodId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An inclusive range of consecutive periods of one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    first: PeriodId,
    last: PeriodId,
}

impl Span {
    pub fn new(first: PeriodId, last: PeriodId) -> Result<Self> {
        if first.frequency() != last.frequency() || first > last {
            return Err(Error::SpanMismatch(format!("invalid span [{first}, {last}]")));
        }
        Ok(Self { first, last })
    }

    pub fn first(&self) -> PeriodId {
        self.first
    }

    pub fn last(&self) -> PeriodId {
        self.last
    }

    pub fn frequency(&self) -> Frequency {
        self.first.frequency()
    }

    pub fn len(&self) -> usize {
        (self.first.periods_until(self.last) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: PeriodId) -> bool {
        p.frequency() == self.frequency() && self.first <= p && p <= self.last
    }

    pub fn periods(&self) -> impl Iterator<Item = PeriodId> {
        let first = self.first;
        (0..self.len()).map(move |i| first.offset(i as i64))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

/// An immutable, contiguous, finite-valued time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    start: PeriodId,
    values: Vec<f64>,
}

impl Series {
    pub fn new(start: PeriodId, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSeries("series must hold at least one value".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at {}",
                start.offset(i as i64)
            )));
        }
        Ok(Self { start, values })
    }

    pub fn annual(first_year: i32, values: Vec<f64>) -> Result<Self> {
        Self::new(PeriodId::annual(first_year), values)
    }

    pub fn quarterly(first_year: i32, first_quarter: u8, values: Vec<f64>) -> Result<Self> {
        Self::new(PeriodId::quarter(first_year, first_quarter), values)
    }

    pub fn frequency(&self) -> Frequency {
        self.start.frequency()
    }

    pub fn start(&self) -> PeriodId {
        self.start
    }

    /// Last period of the span (inclusive).
    pub fn end(&self) -> PeriodId {
        self.start.offset(self.values.len() as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn span(&self) -> Span {
        Span {
            first: self.start,
            last: self.end(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn period(&self, index: usize) -> PeriodId {
        self.start.offset(index as i64)
    }

    pub fn periods(&self) -> impl Iterator<Item = PeriodId> + '_ {
        (0..self.values.len()).map(|i| self.period(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (PeriodId, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.period(i), v))
    }

    /// Position of `period` in the series, if inside the span.
    pub fn index_of(&self, period: PeriodId) -> Option<usize> {
        if period.frequency() != self.frequency() {
            return None;
        }
        let d = self.start.periods_until(period);
        (d >= 0 && (d as usize) < self.values.len()).then_some(d as usize)
    }

    pub fn get(&self, period: PeriodId) -> Option<f64> {
        self.index_of(period).map(|i| self.values[i])
    }

    pub fn contains(&self, period: PeriodId) -> bool {
        self.index_of(period).is_some()
    }

    /// Sub-series over `[first, last]`; both ends must lie in the span.
    pub fn slice(&self, first: PeriodId, last: PeriodId) -> Result<Series> {
        match (self.index_of(first), self.index_of(last)) {
            (Some(a), Some(b)) if a <= b => Series::new(first, self.values[a..=b].to_vec()),
            _ => Err(Error::SpanMismatch(format!(
                "[{first}, {last}] not inside series span [{}, {}]",
                self.start,
                self.end()
            ))),
        }
    }

    /// Same span, values replaced.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Series> {
        if values.len() != self.values.len() {
            return Err(Error::InvalidSeries(format!(
                "length {} does not match span length {}",
                values.len(),
                self.values.len()
            )));
        }
        Series::new(self.start, values)
    }

    /// Element-wise `a*self + b*other`; both series must share span and frequency.
    pub fn linear_combination(&self, a: f64, other: &Series, b: f64) -> Result<Series> {
        self.require_aligned(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Series::new(self.start, values)
    }

    pub(crate) fn require_frequency(&self, expected: Frequency) -> Result<()> {
        if self.frequency() != expected {
            return Err(Error::FrequencyMismatch {
                expected: expected.name(),
                got: self.frequency().name(),
            });
        }
        Ok(())
    }

    pub(crate) fn require_aligned(&self, other: &Series) -> Result<()> {
        if self.start != other.start || self.values.len() != other.values.len() {
            return Err(Error::SpanMismatch(format!(
                "[{}, {}] vs [{}, {}]",
                self.start,
                self.end(),
                other.start,
                other.end()
            )));
        }
        Ok(())
    }
}

/// Sums each complete calendar year of a quarterly flow series.
///
/// Incomplete leading and trailing years are dropped.
pub fn annualize(q: &Series) -> Result<Series> {
    q.require_frequency(Frequency::Quarterly)?;
    let lead = (5 - q.start().subperiod() as usize) % 4;
    let sums: Vec<f64> = q.values()[lead.min(q.len())..]
        .chunks_exact(4)
        .map(|c| c.iter().sum())
        .collect();
    if sums.is_empty() {
        return Err(Error::NoCompleteYear);
    }
    let first_year = q.period(lead).year();
    Series::annual(first_year, sums)
}

fn pct_change_lagged(q: &Series, lag: usize) -> Result<Series> {
    if q.len() <= lag {
        return Err(Error::TooShort {
            needed: lag + 1,
            got: q.len(),
        });
    }
    let v = q.values();
    let out = (lag..v.len())
        .map(|t| {
            if v[t - lag] == 0.0 {
                Err(Error::UndefinedGrowthRate(q.period(t)))
            } else {
                Ok(100.0 * (v[t] / v[t - lag] - 1.0))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Series::new(q.period(lag), out)
}

/// Percent change on the previous period, `100 * (x_t / x_{t-1} - 1)`.
pub fn pct_change_prev(q: &Series) -> Result<Series> {
    pct_change_lagged(q, 1)
}

/// Percent change on the same quarter one year earlier, `100 * (x_t / x_{t-4} - 1)`.
pub fn pct_change_year_ago(q: &Series) -> Result<Series> {
    q.require_frequency(Frequency::Quarterly)?;
    pct_change_lagged(q, 4)
}
