use nalgebra::{DMatrix, DVector};

use super::covariance::{aggregate_covariance, check_rho, covariance_matrix};
use super::{Coefficient, Design, FitResult, Method, RhoSource};
use crate::distributions::student_t_two_sided;
use crate::error::{Error, Result};
use crate::series::{PeriodId, Series};

/// Whitened residual norm below this fraction of the whitened constraint
/// norm counts as an exact fit.
pub(crate) const EXACT_FIT_TOLERANCE: f64 = 1e-10;

/// Column pivots below this fraction of the whitened column norm are
/// treated as collinear.
const RANK_TOLERANCE: f64 = 1e-10;

/// Low-frequency GLS solution for a given `V_L`.
pub(crate) struct LowFreqFit {
    pub beta: DVector<f64>,
    /// `(X_L' V_L^-1 X_L)^-1`
    pub unscaled_cov: DMatrix<f64>,
    pub residuals: DVector<f64>,
    pub whitened: DVector<f64>,
    /// `V_L^-1 u_L`
    pub v_l_inv_u: DVector<f64>,
    pub rss: f64,
    pub exact_fit: bool,
    pub log_likelihood: f64,
}

/// GLS of `y_l` on `x_l` with covariance `v_l`, via Cholesky whitening and QR.
pub(crate) fn low_freq_fit(
    y_l: &DVector<f64>,
    x_l: &DMatrix<f64>,
    v_l: &DMatrix<f64>,
) -> Result<LowFreqFit> {
    let (n, k) = x_l.shape();
    if n <= k {
        return Err(Error::InsufficientDegreesOfFreedom { n_years: n, k });
    }
    let chol = v_l
        .clone()
        .cholesky()
        .ok_or(Error::CovarianceNotPositiveDefinite)?;
    let l = chol.l();
    let y_t = l
        .solve_lower_triangular(y_l)
        .ok_or(Error::CovarianceNotPositiveDefinite)?;
    let x_t = l
        .solve_lower_triangular(x_l)
        .ok_or(Error::CovarianceNotPositiveDefinite)?;

    let qr = x_t.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let norm = x_t.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= RANK_TOLERANCE * norm {
            return Err(Error::CollinearRegressors);
        }
    }
    let qty = qr.q().transpose() * &y_t;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::CollinearRegressors)?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(Error::CollinearRegressors)?;
    let unscaled_cov = &r_inv * r_inv.transpose();

    let residuals = y_l - x_l * &beta;
    let whitened = &y_t - &x_t * &beta;
    let v_l_inv_u = l
        .tr_solve_lower_triangular(&whitened)
        .ok_or(Error::CovarianceNotPositiveDefinite)?;
    let rss = whitened.norm_squared();
    let exact_fit = whitened.norm() <= EXACT_FIT_TOLERANCE * y_t.norm();

    let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let nf = n as f64;
    let log_likelihood = if exact_fit {
        f64::INFINITY
    } else {
        -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + (rss / nf).ln() + 1.0) - 0.5 * log_det
    };

    Ok(LowFreqFit {
        beta,
        unscaled_cov,
        residuals,
        whitened,
        v_l_inv_u,
        rss,
        exact_fit,
        log_likelihood,
    })
}

/// `C X` with the aggregation rows starting at quarter `offset`.
pub(crate) fn aggregate_rows(x: &DMatrix<f64>, n_years: usize, offset: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n_years, x.ncols(), |y, j| {
        let r0 = offset + 4 * y;
        (r0..r0 + 4).map(|i| x[(i, j)]).sum()
    })
}

/// GLS disaggregation at a fixed `rho` (ignored for Fernandez).
pub fn gls_fit_given_rho(
    y_annual: &Series,
    design: &Design,
    method: Method,
    rho: f64,
) -> Result<FitResult> {
    check_rho(method, rho)?;
    let offset = design.constraint_offset(y_annual)?;
    let n_years = y_annual.len();
    let k = design.n_regressors();
    if n_years <= k {
        return Err(Error::InsufficientDegreesOfFreedom { n_years, k });
    }
    let x = design.matrix();
    let n = x.nrows();

    let v = covariance_matrix(method, rho, n)?;
    let (v_l, v_ct) = aggregate_covariance(&v, n_years, offset);
    let x_l = aggregate_rows(x, n_years, offset);
    let y_l = DVector::from_column_slice(y_annual.values());
    let lf = low_freq_fit(&y_l, &x_l, &v_l)?;

    let yhat = x * &lf.beta + &v_ct * &lf.v_l_inv_u;

    let df = n_years - k;
    let sigma2 = if lf.exact_fit { 0.0 } else { lf.rss / df as f64 };
    let coefficients = design
        .labels()
        .iter()
        .enumerate()
        .map(|(j, label)| {
            let estimate = lf.beta[j];
            let standard_error = (sigma2 * lf.unscaled_cov[(j, j)]).sqrt();
            let (t_statistic, p_value) = if standard_error > 0.0 {
                let t = estimate / standard_error;
                (Some(t), Some(student_t_two_sided(t, df as f64)))
            } else {
                (None, None)
            };
            Coefficient {
                label: label.clone(),
                estimate,
                standard_error,
                t_statistic,
                p_value,
            }
        })
        .collect();

    let first_year = PeriodId::annual(y_annual.start().year());
    Ok(FitResult {
        method,
        coefficients,
        rho: if method.has_rho() { rho } else { 1.0 },
        rho_source: if method.has_rho() {
            RhoSource::Fixed
        } else {
            RhoSource::RandomWalk
        },
        sigma2,
        low_freq_residuals: Series::new(first_year, lf.residuals.iter().copied().collect())?,
        whitened_residuals: lf.whitened.iter().copied().collect(),
        fitted_annual: Series::new(first_year, (&x_l * &lf.beta).iter().copied().collect())?,
        quarterly_estimate: Series::new(design.span().first(), yhat.iter().copied().collect())?,
        log_likelihood: lf.log_likelihood,
        exact_fit: lf.exact_fit,
        rho_profile: None,
    })
}
