use serde::Serialize;

use crate::error::{Error, Result};
use crate::indicator::pearson;
use crate::series::{pct_change_prev, pct_change_year_ago, Frequency, Series};

/// Agreement of quarter-on-quarter and year-on-year growth between an
/// indicator and a disaggregated estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MovementStats {
    /// `None` when either growth series is constant.
    pub corr_qopq: Option<f64>,
    pub corr_qosq: Option<f64>,
    pub rmse_qopq: f64,
    pub rmse_qosq: f64,
    /// Estimate growth minus indicator growth with the largest magnitude.
    pub max_discrepancy_qopq: f64,
    pub max_discrepancy_qosq: f64,
}

pub const MIN_COMMON_QUARTERS: usize = 9;

struct Comparison {
    corr: Option<f64>,
    rmse: f64,
    max_discrepancy: f64,
}

fn compare(indicator: &Series, estimate: &Series) -> Comparison {
    let diffs: Vec<f64> = estimate
        .values()
        .iter()
        .zip(indicator.values())
        .map(|(e, i)| e - i)
        .collect();
    let rmse = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    let max_discrepancy = diffs
        .iter()
        .copied()
        .fold(0.0f64, |best, d| if d.abs() > best.abs() { d } else { best });
    Comparison {
        corr: pearson(indicator.values(), estimate.values()),
        rmse,
        max_discrepancy,
    }
}

/// Movement statistics on the common quarterly span of both series.
pub fn movement_stats(indicator: &Series, estimate: &Series) -> Result<MovementStats> {
    indicator.require_frequency(Frequency::Quarterly)?;
    estimate.require_frequency(Frequency::Quarterly)?;
    let first = indicator.start().max(estimate.start());
    let last = indicator.end().min(estimate.end());
    let common = if first <= last {
        first.periods_until(last) as usize + 1
    } else {
        0
    };
    if common < MIN_COMMON_QUARTERS {
        return Err(Error::TooShort {
            needed: MIN_COMMON_QUARTERS,
            got: common,
        });
    }
    let ind = indicator.slice(first, last)?;
    let est = estimate.slice(first, last)?;
    let qopq = compare(&pct_change_prev(&ind)?, &pct_change_prev(&est)?);
    let qosq = compare(&pct_change_year_ago(&ind)?, &pct_change_year_ago(&est)?);
    Ok(MovementStats {
        corr_qopq: qopq.corr,
        corr_qosq: qosq.corr,
        rmse_qopq: qopq.rmse,
        rmse_qosq: qosq.rmse,
        max_discrepancy_qopq: qopq.max_discrepancy,
        max_discrepancy_qosq: qosq.max_discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(v: &[f64]) -> Series {
        Series::quarterly(2000, 1, v.to_vec()).unwrap()
    }

    fn growth(v: &[f64], lag: usize) -> Vec<f64> {
        (lag..v.len()).map(|t| 100.0 * (v[t] / v[t - lag] - 1.0)).collect()
    }

    #[test]
    fn identical_series() {
        let v: Vec<f64> = (0..12).map(|t| 100.0 + (t * t) as f64 + 3.0 * (t % 4) as f64).collect();
        let m = movement_stats(&q(&v), &q(&v)).unwrap();
        assert!((m.corr_qopq.unwrap() - 1.0).abs() < 1e-12);
        assert!((m.corr_qosq.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.rmse_qopq, 0.0);
        assert_eq!(m.rmse_qosq, 0.0);
        assert_eq!(m.max_discrepancy_qopq, 0.0);
        assert_eq!(m.max_discrepancy_qosq, 0.0);
    }

    #[test]
    fn level_shift_by_direct_formula() {
        let ind: Vec<f64> = vec![100., 104., 103., 108., 110., 115., 112., 118., 121., 124., 123., 130.];
        let est: Vec<f64> = ind.iter().map(|v| v + 20.0).collect();
        let m = movement_stats(&q(&ind), &q(&est)).unwrap();
        for (lag, rmse, maxd) in [(1, m.rmse_qopq, m.max_discrepancy_qopq), (4, m.rmse_qosq, m.max_discrepancy_qosq)] {
            let d: Vec<f64> = growth(&est, lag).iter().zip(growth(&ind, lag)).map(|(e, i)| e - i).collect();
            let want = (d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64).sqrt();
            assert!((rmse - want).abs() < 1e-12);
            let want_max = d.iter().copied().fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!((maxd - want_max).abs() < 1e-12);
        }
        assert!(m.corr_qopq.unwrap() < 1.0);
    }

    #[test]
    fn signed_discrepancy() {
        // one quarter where estimate growth is 11.377 points below the indicator
        let ind = vec![100.0; 10];
        let mut est = vec![100.0; 10];
        for v in est.iter_mut().skip(5) {
            *v = 100.0 * (1.0 - 0.11377);
        }
        let m = movement_stats(&q(&ind), &q(&est)).unwrap();
        assert!((m.max_discrepancy_qopq + 11.377).abs() < 1e-9);
        assert_eq!(m.corr_qopq, None);
    }

    #[test]
    fn short_overlap_rejected() {
        let a = q(&[1.0; 12]);
        let b = Series::quarterly(2002, 1, vec![1.0; 8]).unwrap();
        assert_eq!(movement_stats(&a, &b), Err(Error::TooShort { needed: 9, got: 4 }));
        let zero = q(&[1., 0., 1., 1., 1., 1., 1., 1., 1., 1.]);
        assert!(matches!(movement_stats(&zero, &zero), Err(Error::UndefinedGrowthRate(_))));
    }

    proptest! {
        #[test]
        fn swapping_negates_discrepancy(
            a in prop::collection::vec(50.0f64..150.0, 9..24),
            noise in prop::collection::vec(-10.0f64..10.0, 24),
        ) {
            let b: Vec<f64> = a.iter().zip(&noise).map(|(x, n)| x + n).collect();
            let m1 = movement_stats(&q(&a), &q(&b)).unwrap();
            let m2 = movement_stats(&q(&b), &q(&a)).unwrap();
            prop_assert_eq!(m1.max_discrepancy_qopq, -m2.max_discrepancy_qopq);
            prop_assert_eq!(m1.max_discrepancy_qosq, -m2.max_discrepancy_qosq);
            prop_assert!((m1.rmse_qopq - m2.rmse_qopq).abs() < 1e-9);
            prop_assert!((m1.rmse_qosq - m2.rmse_qosq).abs() < 1e-9);
            match (m1.corr_qopq, m2.corr_qopq) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                (x, y) => prop_assert_eq!(x, y),
            }
            prop_assert!(m1.rmse_qopq >= 0.0);
        }
    }
}
