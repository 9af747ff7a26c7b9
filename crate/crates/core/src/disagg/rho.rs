use nalgebra::DVector;

use super::covariance::{aggregate_covariance, covariance_matrix};
use super::gls::{aggregate_rows, low_freq_fit};
use super::{Design, Method};
use crate::error::{Error, Result};
use crate::series::Series;

/// Admissible region for the rho search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhoSearch {
    /// `[-0.99, 0.99]`
    #[default]
    Full,
    /// `[0, 0.99]`
    NonNegative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoEstimate {
    pub rho: f64,
    pub log_likelihood: f64,
    /// `(rho, log-likelihood)` for every evaluated point, sorted by rho.
    pub profile: Vec<(f64, f64)>,
}

/// Grid points are held as integer thousandths so coarse and fine grids
/// share exact values.
const COARSE_STEP: i32 = 10;
const GRID_LIMIT: i32 = 990;

/// Maximum-likelihood rho for Chow-Lin or Litterman.
///
/// Maximizes the concentrated log-likelihood
/// `-(n/2)(ln 2pi + ln(u'V_L^-1 u / n) + 1) - ln det(V_L) / 2` on the grid
/// `{-0.99, -0.98, ..., 0.99}`, then on a 0.001 grid within one coarse step
/// of the best point. Ties go to the smallest `|rho|`, then to positive rho.
/// An exact fit makes the likelihood `+inf` everywhere, which resolves to 0.
pub fn estimate_rho(
    y_annual: &Series,
    design: &Design,
    method: Method,
    search: RhoSearch,
) -> Result<RhoEstimate> {
    if !method.has_rho() {
        return Err(Error::RhoNotApplicable);
    }
    let offset = design.constraint_offset(y_annual)?;
    let n_years = y_annual.len();
    let k = design.n_regressors();
    if n_years <= k {
        return Err(Error::InsufficientDegreesOfFreedom { n_years, k });
    }
    let n_used = offset + 4 * n_years;
    let x_l = aggregate_rows(design.matrix(), n_years, offset);
    let y_l = DVector::from_column_slice(y_annual.values());

    let eval = |milli: i32| -> Result<f64> {
        let rho = f64::from(milli) / 1000.0;
        let v = covariance_matrix(method, rho, n_used)?;
        let (v_l, _) = aggregate_covariance(&v, n_years, offset);
        match low_freq_fit(&y_l, &x_l, &v_l) {
            Ok(fit) => Ok(fit.log_likelihood),
            Err(Error::CovarianceNotPositiveDefinite) => Ok(f64::NAN),
            Err(e) => Err(e),
        }
    };

    let lower = match search {
        RhoSearch::Full => -GRID_LIMIT,
        RhoSearch::NonNegative => 0,
    };
    let mut profile: Vec<(i32, f64)> = Vec::new();
    let mut milli = lower;
    while milli <= GRID_LIMIT {
        profile.push((milli, eval(milli)?));
        milli += COARSE_STEP;
    }
    let coarse_best = best(&profile).ok_or(Error::LikelihoodFailed)?;
    let lo = (coarse_best - COARSE_STEP + 1).max(lower);
    let hi = (coarse_best + COARSE_STEP - 1).min(GRID_LIMIT);
    for m in lo..=hi {
        if m % COARSE_STEP != 0 {
            profile.push((m, eval(m)?));
        }
    }
    let best_milli = best(&profile).ok_or(Error::LikelihoodFailed)?;
    profile.sort_by_key(|&(m, _)| m);
    let log_likelihood = profile
        .iter()
        .find(|&&(m, _)| m == best_milli)
        .map(|&(_, l)| l)
        .unwrap_or(f64::NAN);
    Ok(RhoEstimate {
        rho: f64::from(best_milli) / 1000.0,
        log_likelihood,
        profile: profile
            .into_iter()
            .map(|(m, l)| (f64::from(m) / 1000.0, l))
            .collect(),
    })
}

/// Argmax with the tie-break order: smaller `|rho|` first, positive before negative.
fn best(profile: &[(i32, f64)]) -> Option<i32> {
    let mut order: Vec<&(i32, f64)> = profile
        .iter()
        .filter(|(_, l)| !l.is_nan() && *l > f64::NEG_INFINITY)
        .collect();
    order.sort_by_key(|&&(m, _)| (m.abs(), -m));
    let mut best: Option<(i32, f64)> = None;
    for &&(m, l) in &order {
        if best.is_none_or(|(_, bl)| l > bl) {
            best = Some((m, l));
        }
    }
    best.map(|(m, _)| m)
}
