//! Dense reference implementation used as a test oracle.
//!
//! Every matrix is formed explicitly and every inverse is taken directly:
//! the aggregation matrix, the covariance as the inverse of its precision
//! matrix, `(C V C')^-1` and `(X_L' W X_L)^-1`. No factorization, block sum
//! or closed form from the production path is reused. Intended for desk
//! scale only (at most 64 quarters).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{build_design, Coefficient, FitResult, Method, ModelSpec, RhoPolicy, RhoSearch, RhoSource};
use crate::distributions::student_t_two_sided;
use crate::error::{Error, Result};
use crate::series::{Frequency, PeriodId, Series, Span};

pub const MAX_ORACLE_QUARTERS: usize = 64;

fn bidiagonal(n: usize, sub: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if i == j + 1 {
            sub
        } else {
            0.0
        }
    })
}

/// Covariance as the explicit inverse of the precision matrix.
pub fn dense_covariance(method: Method, rho: f64, n: usize) -> Result<DMatrix<f64>> {
    let precision = match method {
        Method::Fernandez => {
            let d = bidiagonal(n, -1.0);
            d.transpose() * d
        }
        Method::Litterman => {
            let d = bidiagonal(n, -1.0);
            let h = bidiagonal(n, -rho);
            d.transpose() * h.transpose() * &h * d
        }
        Method::ChowLin => {
            // Prais-Winsten transform: eps_1 = sqrt(1-rho^2) u_1, eps_t = u_t - rho u_{t-1}
            let mut a = bidiagonal(n, -rho);
            a[(0, 0)] = (1.0 - rho * rho).sqrt();
            a.transpose() * a
        }
    };
    precision
        .try_inverse()
        .ok_or(Error::CovarianceNotPositiveDefinite)
}

struct DenseFit {
    beta: DVector<f64>,
    xwx_inv: DMatrix<f64>,
    u: DVector<f64>,
    quad: f64,
    yhat: DVector<f64>,
    exact: bool,
    log_likelihood: f64,
}

fn dense_fit(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    offset: usize,
    method: Method,
    rho: f64,
) -> Result<DenseFit> {
    let n_years = y.len();
    let n = x.nrows();
    let k = x.ncols();
    if n_years <= k {
        return Err(Error::InsufficientDegreesOfFreedom { n_years, k });
    }
    let mut c = DMatrix::zeros(n_years, n);
    for yr in 0..n_years {
        for q in 0..4 {
            c[(yr, offset + 4 * yr + q)] = 1.0;
        }
    }
    let v = dense_covariance(method, rho, n)?;
    let v_l = &c * &v * c.transpose();
    let w = v_l
        .clone()
        .try_inverse()
        .ok_or(Error::CovarianceNotPositiveDefinite)?;
    let x_l = &c * x;
    let xwx = x_l.transpose() * &w * &x_l;
    let eig = xwx.clone().symmetric_eigenvalues();
    if eig.min() <= 1e-14 * eig.max().abs() {
        return Err(Error::CollinearRegressors);
    }
    let xwx_inv = xwx.try_inverse().ok_or(Error::CollinearRegressors)?;
    let beta = &xwx_inv * x_l.transpose() * &w * y;
    let u = y - &x_l * &beta;
    let quad = (u.transpose() * &w * &u)[(0, 0)];
    let yy = (y.transpose() * &w * y)[(0, 0)];
    let exact = quad.max(0.0).sqrt() <= super::gls::EXACT_FIT_TOLERANCE * yy.sqrt();
    let yhat = x * &beta + &v * c.transpose() * &w * &u;
    let nf = n_years as f64;
    let log_likelihood = if exact {
        f64::INFINITY
    } else {
        -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + (quad / nf).ln() + 1.0)
            - 0.5 * v_l.determinant().ln()
    };
    Ok(DenseFit {
        beta,
        xwx_inv,
        u,
        quad,
        yhat,
        exact,
        log_likelihood,
    })
}

fn search_rho(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    offset: usize,
    method: Method,
    search: RhoSearch,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let lower = match search {
        RhoSearch::Full => -99,
        RhoSearch::NonNegative => 0,
    };
    let eval = |m: i32| dense_fit(y, x, offset, method, f64::from(m) / 1000.0).map(|f| f.log_likelihood);
    let mut points: Vec<(i32, f64)> = Vec::new();
    for i in lower..=99 {
        points.push((10 * i, eval(10 * i)?));
    }
    let pick = |pts: &[(i32, f64)]| -> Option<i32> {
        let mut best: Option<(i32, f64)> = None;
        for &(m, l) in pts {
            if l.is_nan() || l == f64::NEG_INFINITY {
                continue;
            }
            best = match best {
                None => Some((m, l)),
                Some((bm, bl)) => {
                    let better = l > bl
                        || (l == bl && (m.abs() < bm.abs() || (m.abs() == bm.abs() && m > bm)));
                    if better { Some((m, l)) } else { Some((bm, bl)) }
                }
            };
        }
        best.map(|(m, _)| m)
    };
    let coarse = pick(&points).ok_or(Error::LikelihoodFailed)?;
    for m in (coarse - 9).max(10 * lower)..=(coarse + 9).min(990) {
        if m % 10 != 0 {
            points.push((m, eval(m)?));
        }
    }
    let best = pick(&points).ok_or(Error::LikelihoodFailed)?;
    points.sort_by_key(|p| p.0);
    Ok((
        f64::from(best) / 1000.0,
        points.into_iter().map(|(m, l)| (f64::from(m) / 1000.0, l)).collect(),
    ))
}

/// Same contract as [`super::disaggregate`], computed densely.
pub fn brute_force_oracle(
    spec: &ModelSpec,
    y_annual: &Series,
    indicators: &BTreeMap<String, Series>,
    target_span: Span,
) -> Result<FitResult> {
    if target_span.len() > MAX_ORACLE_QUARTERS {
        return Err(Error::InvalidModel(format!(
            "oracle limited to {MAX_ORACLE_QUARTERS} quarters"
        )));
    }
    if y_annual.frequency() != Frequency::Annual {
        return Err(Error::FrequencyMismatch {
            expected: "annual",
            got: y_annual.frequency().name(),
        });
    }
    let design = build_design(spec, indicators, target_span)?;
    let offset = design.constraint_offset(y_annual)?;
    let x = design.matrix().clone();
    let y = DVector::from_column_slice(y_annual.values());

    let (rho, rho_source, profile) = match (spec.method, spec.rho) {
        (Method::Fernandez, _) => (1.0, RhoSource::RandomWalk, None),
        (_, RhoPolicy::Fixed(r)) => {
            if r.abs() > super::MAX_ABS_RHO {
                return Err(Error::RhoOutOfRange(r));
            }
            (r, RhoSource::Fixed, None)
        }
        (m, RhoPolicy::Estimate(search)) => {
            let (r, p) = search_rho(&y, &x, offset, m, search)?;
            (r, RhoSource::Estimated, Some(p))
        }
    };
    let fit = dense_fit(&y, &x, offset, spec.method, rho)?;
    let df = y.len() - x.ncols();
    let sigma2 = if fit.exact { 0.0 } else { fit.quad / df as f64 };
    let coefficients = design
        .labels()
        .iter()
        .enumerate()
        .map(|(j, label)| {
            let se = (sigma2 * fit.xwx_inv[(j, j)]).sqrt();
            let t = (se > 0.0).then(|| fit.beta[j] / se);
            Coefficient {
                label: label.clone(),
                estimate: fit.beta[j],
                standard_error: se,
                t_statistic: t,
                p_value: t.map(|t| student_t_two_sided(t, df as f64)),
            }
        })
        .collect();
    let x_l_beta: Vec<f64> = (0..y.len()).map(|i| y[i] - fit.u[i]).collect();
    let first_year = PeriodId::annual(y_annual.start().year());
    Ok(FitResult {
        method: spec.method,
        coefficients,
        rho,
        rho_source,
        sigma2,
        low_freq_residuals: Series::new(first_year, fit.u.iter().copied().collect())?,
        whitened_residuals: Vec::new(),
        fitted_annual: Series::new(first_year, x_l_beta)?,
        quarterly_estimate: Series::new(target_span.first(), fit.yhat.iter().copied().collect())?,
        log_likelihood: fit.log_likelihood,
        exact_fit: fit.exact,
        rho_profile: profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_indicator_identity() {
        let first = PeriodId::quarter(2000, 1);
        let span = Span::new(first, first.offset(7)).unwrap();
        let ind: BTreeMap<String, Series> = [(
            "x".to_string(),
            Series::new(first, vec![1., 1., 1., 1., 2., 2., 2., 2.]).unwrap(),
        )]
        .into();
        let y = Series::annual(2000, vec![4.0, 8.0]).unwrap();
        let spec = ModelSpec::new(Method::ChowLin).indicator("x").rho(RhoPolicy::Fixed(0.0));
        let fit = brute_force_oracle(&spec, &y, &ind, span).unwrap();
        assert!(fit.exact_fit);
        assert!(fit.low_freq_residuals.values().iter().all(|u| u.abs() < 1e-12));
    }

    #[test]
    fn litterman_zero_matches_fernandez() {
        let first = PeriodId::quarter(2000, 1);
        let span = Span::new(first, first.offset(13)).unwrap();
        let x: Vec<f64> = (0..14).map(|t| 5.0 + (t as f64).cos()).collect();
        let ind: BTreeMap<String, Series> = [("x".to_string(), Series::new(first, x).unwrap())].into();
        let y = Series::annual(2000, vec![21.0, 19.0, 24.0]).unwrap();
        let f = brute_force_oracle(&ModelSpec::new(Method::Fernandez).indicator("x"), &y, &ind, span).unwrap();
        let l = brute_force_oracle(
            &ModelSpec::new(Method::Litterman).indicator("x").rho(RhoPolicy::Fixed(0.0)),
            &y,
            &ind,
            span,
        )
        .unwrap();
        for (a, b) in f.quarterly_estimate.values().iter().zip(l.quarterly_estimate.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
