//! Temporal aggregation map and the high-frequency residual covariance
//! structures of the three static disaggregation models.

use nalgebra::DMatrix;

use super::Method;
use crate::error::{Error, Result};

/// Largest admissible `|rho|` for the autoregressive structures.
pub const MAX_ABS_RHO: f64 = 0.999;

/// `n_years x n_quarters` annual-sum matrix. Row `y` has ones in columns
/// `4y..4y+3`; any trailing columns are extrapolation quarters and stay zero.
pub fn aggregation_matrix(n_years: usize, n_quarters: usize) -> Result<DMatrix<f64>> {
    aggregation_matrix_at(n_years, n_quarters, 0)
}

/// As [`aggregation_matrix`] with the first constrained quarter at column `offset`.
pub fn aggregation_matrix_at(
    n_years: usize,
    n_quarters: usize,
    offset: usize,
) -> Result<DMatrix<f64>> {
    if n_years == 0 || n_quarters < offset + 4 * n_years {
        return Err(Error::InsufficientQuarters {
            n_years,
            n_quarters,
        });
    }
    Ok(DMatrix::from_fn(n_years, n_quarters, |y, q| {
        if q >= offset + 4 * y && q < offset + 4 * y + 4 {
            1.0
        } else {
            0.0
        }
    }))
}

pub(crate) fn check_rho(method: Method, rho: f64) -> Result<()> {
    match method {
        Method::Fernandez => Ok(()),
        Method::ChowLin | Method::Litterman => {
            if rho.is_finite() && rho.abs() <= MAX_ABS_RHO {
                Ok(())
            } else {
                Err(Error::RhoOutOfRange(rho))
            }
        }
    }
}

/// Residual covariance `V` (up to the scale `sigma^2`) for `n` quarters.
///
/// * Chow-Lin: stationary AR(1), `rho^|i-j| / (1 - rho^2)`.
/// * Fernandez: `(D'D)^-1` with `D` the first-difference matrix, i.e. `min(i, j)` (1-based).
/// * Litterman: `(D'H'HD)^-1`, a random walk whose increments follow an AR(1)
///   started at zero. Built as the double cumulative sum of the increment covariance.
///
/// `rho` is ignored for Fernandez.
pub fn covariance_matrix(method: Method, rho: f64, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidModel("covariance of an empty sample".into()));
    }
    check_rho(method, rho)?;
    let v = match method {
        Method::ChowLin => {
            let scale = 1.0 / (1.0 - rho * rho);
            let powers = powers(rho, n);
            DMatrix::from_fn(n, n, |i, j| powers[i.abs_diff(j)] * scale)
        }
        Method::Fernandez => DMatrix::from_fn(n, n, |i, j| (i.min(j) + 1) as f64),
        Method::Litterman => {
            let powers = powers(rho, 2 * n + 1);
            let denom = 1.0 - rho * rho;
            // increments e_t = rho e_{t-1} + eps_t, e_0 = eps_0
            let mut v = DMatrix::from_fn(n, n, |i, j| {
                let m = i.min(j) + 1;
                powers[i.abs_diff(j)] * (1.0 - powers[2 * m]) / denom
            });
            cumulate_2d(&mut v);
            v.fill_upper_triangle_with_lower_triangle();
            v
        }
    };
    Ok(v)
}

fn powers(rho: f64, n: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n);
    let mut acc = 1.0;
    for _ in 0..n {
        p.push(acc);
        acc *= rho;
    }
    p
}

/// In-place 2-D prefix sum: `v_ij <- sum_{a<=i, b<=j} v_ab`.
fn cumulate_2d(v: &mut DMatrix<f64>) {
    let (r, c) = v.shape();
    for j in 0..c {
        for i in 1..r {
            v[(i, j)] += v[(i - 1, j)];
        }
    }
    for j in 1..c {
        for i in 0..r {
            v[(i, j)] += v[(i, j - 1)];
        }
    }
}

/// `C V C'` and `V C'` without forming `C`: block sums over the constrained quarters.
pub(crate) fn aggregate_covariance(
    v: &DMatrix<f64>,
    n_years: usize,
    offset: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = v.nrows();
    let v_ct = DMatrix::from_fn(n, n_years, |i, y| {
        let c0 = offset + 4 * y;
        (c0..c0 + 4).map(|j| v[(i, j)]).sum()
    });
    let v_l = DMatrix::from_fn(n_years, n_years, |a, b| {
        let r0 = offset + 4 * a;
        (r0..r0 + 4).map(|i| v_ct[(i, b)]).sum()
    });
    (v_l, v_ct)
}
