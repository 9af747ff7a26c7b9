//! Regression fit measures and residual tests.

use serde::Serialize;

use crate::disagg::FitResult;
use crate::distributions::{chi_square_sf, f_sf, student_t_two_sided};
use crate::error::{Error, Result};

/// Relative size of the residual sum of squares treated as a perfect fit.
const PERFECT_FIT_TOLERANCE: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub r_squared: f64,
    /// `None` when the fit is perfect or there are no slope regressors.
    pub f_statistic: Option<f64>,
    pub f_p_value: Option<f64>,
    pub df1: usize,
    pub df2: usize,
}

/// R-squared and overall F test of annual observed against annual fitted.
///
/// With an intercept the total sum of squares is centered and F has
/// `(k - 1, n - k)` degrees of freedom; without one it is uncentered with
/// `(k, n - k)`.
pub fn r2_and_f(y: &[f64], fitted: &[f64], k: usize, intercept: bool) -> Result<RegressionFit> {
    let n = y.len();
    if fitted.len() != n {
        return Err(Error::SpanMismatch(format!(
            "{n} observations vs {} fitted values",
            fitted.len()
        )));
    }
    if n <= k {
        return Err(Error::InsufficientDegreesOfFreedom { n_years: n, k });
    }
    let rss: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let tss: f64 = if intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean) * (v - mean)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    };
    if tss == 0.0 {
        return Err(Error::DegenerateConstraint);
    }
    let df1 = if intercept { k - 1 } else { k };
    let df2 = n - k;
    let perfect = rss <= PERFECT_FIT_TOLERANCE * tss;
    let r_squared = if perfect { 1.0 } else { 1.0 - rss / tss };
    let (f_statistic, f_p_value) = if perfect || df1 == 0 {
        (None, None)
    } else {
        let f = (r_squared / df1 as f64) / ((1.0 - r_squared) / df2 as f64);
        (Some(f), Some(f_sf(f, df1 as f64, df2 as f64)))
    };
    Ok(RegressionFit {
        r_squared,
        f_statistic,
        f_p_value,
        df1,
        df2,
    })
}

/// `sum_{t>=2} (e_t - e_{t-1})^2 / sum e_t^2`.
pub fn durbin_watson(residuals: &[f64]) -> Result<f64> {
    if residuals.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: residuals.len(),
        });
    }
    let ss: f64 = residuals.iter().map(|e| e * e).sum();
    if ss == 0.0 {
        return Err(Error::DegenerateResiduals);
    }
    let num: f64 = residuals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(num / ss)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JarqueBera {
    pub statistic: f64,
    pub p_value: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// `(n/6) (S^2 + (K-3)^2/4)` with moment estimators (divisor `n`),
/// referred to chi-square(2).
pub fn jarque_bera(residuals: &[f64]) -> Result<JarqueBera> {
    let n = residuals.len();
    if n < 4 {
        return Err(Error::TooShort { needed: 4, got: n });
    }
    let nf = n as f64;
    let mean = residuals.iter().sum::<f64>() / nf;
    let moment = |p: i32| residuals.iter().map(|e| (e - mean).powi(p)).sum::<f64>() / nf;
    let m2 = moment(2);
    if m2 <= 0.0 {
        return Err(Error::DegenerateResiduals);
    }
    let skewness = moment(3) / m2.powf(1.5);
    let kurtosis = moment(4) / (m2 * m2);
    let statistic = nf / 6.0 * (skewness * skewness + (kurtosis - 3.0).powi(2) / 4.0);
    Ok(JarqueBera {
        statistic,
        p_value: chi_square_sf(statistic, 2.0),
        skewness,
        kurtosis,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HetRatio {
    pub statistic: f64,
    pub p_value: f64,
    /// Observations in each compared block, `floor(n/3)`.
    pub m: usize,
}

/// Ratio of the sum of squares of the last `m` residuals to that of the
/// first `m`, `m = floor(n/3)`, referred to the upper tail of `F(m, m)`.
pub fn het_ratio_test(residuals: &[f64]) -> Result<HetRatio> {
    let n = residuals.len();
    if n < 6 {
        return Err(Error::TooShort { needed: 6, got: n });
    }
    let m = n / 3;
    let ss = |s: &[f64]| s.iter().map(|e| e * e).sum::<f64>();
    let head = ss(&residuals[..m]);
    let tail = ss(&residuals[n - m..]);
    if head == 0.0 {
        return Err(Error::DegenerateResiduals);
    }
    let statistic = tail / head;
    Ok(HetRatio {
        statistic,
        p_value: f_sf(statistic, m as f64, m as f64),
        m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LjungBox {
    pub statistic: f64,
    pub p_value: f64,
    pub lags: usize,
}

pub const DEFAULT_LJUNG_BOX_LAGS: usize = 7;

/// `n(n+2) sum_{j=1..L} r_j^2 / (n-j)` on mean-centered autocorrelations,
/// referred to chi-square(L) without a parameter-count adjustment.
pub fn ljung_box(residuals: &[f64], max_lag: usize) -> Result<LjungBox> {
    let n = residuals.len();
    if max_lag == 0 || max_lag + 1 >= n {
        return Err(Error::LagTooLarge { lag: max_lag, n });
    }
    let nf = n as f64;
    let mean = residuals.iter().sum::<f64>() / nf;
    let c: Vec<f64> = residuals.iter().map(|e| e - mean).collect();
    let c0: f64 = c.iter().map(|e| e * e).sum();
    if c0 == 0.0 {
        return Err(Error::DegenerateResiduals);
    }
    let statistic = nf
        * (nf + 2.0)
        * (1..=max_lag)
            .map(|j| {
                let r = c[j..].iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / c0;
                r * r / (nf - j as f64)
            })
            .sum::<f64>();
    Ok(LjungBox {
        statistic,
        p_value: chi_square_sf(statistic, max_lag as f64),
        lags: max_lag,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientTest {
    pub label: String,
    pub t_statistic: Option<f64>,
    pub p_value: Option<f64>,
}

/// `t = estimate / se`, two-sided Student-t p with `df` degrees of freedom.
/// Coefficients with a zero standard error get no t statistic.
pub fn coef_t_tests(fit: &FitResult, df: usize) -> Result<Vec<CoefficientTest>> {
    if df == 0 {
        return Err(Error::InsufficientDegreesOfFreedom {
            n_years: fit.n_years(),
            k: fit.n_regressors(),
        });
    }
    Ok(fit
        .coefficients
        .iter()
        .map(|c| {
            let t = (c.standard_error > 0.0).then(|| c.estimate / c.standard_error);
            CoefficientTest {
                label: c.label.clone(),
                t_statistic: t,
                p_value: t.map(|t| student_t_two_sided(t, df as f64)),
            }
        })
        .collect())
}
