use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tempdis::{disaggregate, FitResult, Method, ModelSpec, PeriodId, RhoPolicy, Series, Span};

struct Case {
    y: Series,
    indicators: BTreeMap<String, Series>,
    span: Span,
}

/// `n_years` constrained years plus `extra` extrapolated quarters.
fn case(seed: u64, n_years: usize, extra: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 4 * n_years + extra;
    let first = PeriodId::quarter(2010, 1);
    let mut level = 100.0;
    let x: Vec<f64> = (0..n)
        .map(|_| {
            level += rng.random_range(-2.0..3.0);
            level
        })
        .collect();
    let y: Vec<f64> = x[..4 * n_years]
        .chunks(4)
        .map(|c| 1.5 * c.iter().sum::<f64>() + rng.random_range(-20.0..20.0))
        .collect();
    Case {
        y: Series::annual(2010, y).unwrap(),
        indicators: [("x".to_string(), Series::new(first, x).unwrap())].into(),
        span: Span::new(first, first.offset(n as i64 - 1)).unwrap(),
    }
}

fn fit(c: &Case, method: Method, rho: RhoPolicy, intercept: bool) -> FitResult {
    let spec = ModelSpec::new(method).intercept(intercept).indicator("x").rho(rho);
    disaggregate(&spec, &c.y, &c.indicators, c.span).unwrap()
}

/// `y_hat - X b` per quarter.
fn smoothed_residuals(c: &Case, f: &FitResult, intercept: bool) -> Vec<f64> {
    let b = f.estimates();
    let x = c.indicators["x"].values();
    f.quarterly_estimate
        .values()
        .iter()
        .zip(x)
        .map(|(y, x)| {
            let xb = if intercept { b[0] + b[1] * x } else { b[0] * x };
            y - xb
        })
        .collect()
}

#[test]
fn chow_lin_extrapolation_decays_geometrically() {
    for (seed, rho) in [(1, 0.7), (2, -0.4), (3, 0.95)] {
        let c = case(seed, 10, 6);
        let f = fit(&c, Method::ChowLin, RhoPolicy::Fixed(rho), true);
        let u = smoothed_residuals(&c, &f, true);
        let last = 4 * 10 - 1;
        for h in 1..=6 {
            let expected = rho.powi(h as i32) * u[last];
            assert!(
                (u[last + h] - expected).abs() <= 1e-9 * (1.0 + u[last].abs()),
                "rho {rho} h {h}: {} vs {expected}",
                u[last + h]
            );
        }
    }
}

#[test]
fn fernandez_extrapolation_holds_last_residual() {
    let c = case(4, 8, 5);
    let f = fit(&c, Method::Fernandez, RhoPolicy::default(), false);
    let u = smoothed_residuals(&c, &f, false);
    let last = 4 * 8 - 1;
    for h in 1..=5 {
        assert!((u[last + h] - u[last]).abs() <= 1e-9 * (1.0 + u[last].abs()));
    }
}

#[test]
fn scaling_the_constraint_scales_the_fit() {
    for method in [Method::ChowLin, Method::Fernandez, Method::Litterman] {
        let c = case(5, 12, 2);
        let base = fit(&c, method, RhoPolicy::default(), true);
        let k = 3.0;
        let scaled = Case {
            y: c.y.with_values(c.y.values().iter().map(|v| k * v).collect()).unwrap(),
            indicators: c.indicators.clone(),
            span: c.span,
        };
        let s = fit(&scaled, method, RhoPolicy::default(), true);
        assert_eq!(s.rho, base.rho, "{method:?}");
        for (a, b) in s.quarterly_estimate.values().iter().zip(base.quarterly_estimate.values()) {
            assert!((a - k * b).abs() <= 1e-9 * b.abs().max(1.0), "{method:?}");
        }
        for (a, b) in s.estimates().iter().zip(base.estimates()) {
            assert!((a - k * b).abs() <= 1e-9 * b.abs().max(1.0), "{method:?}");
        }
        assert!((s.sigma2 - k * k * base.sigma2).abs() <= 1e-9 * k * k * base.sigma2);
        let t: Vec<_> = s.coefficients.iter().map(|c| c.t_statistic.unwrap()).collect();
        let t0: Vec<_> = base.coefficients.iter().map(|c| c.t_statistic.unwrap()).collect();
        for (a, b) in t.iter().zip(&t0) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
        }
    }
}

#[test]
fn rescaling_the_indicator_rescales_its_coefficient() {
    let c = case(6, 10, 0);
    let base = fit(&c, Method::ChowLin, RhoPolicy::default(), false);
    let x = &c.indicators["x"];
    let scaled = Case {
        y: c.y.clone(),
        indicators: [("x".to_string(), x.with_values(x.values().iter().map(|v| v / 4.0).collect()).unwrap())].into(),
        span: c.span,
    };
    let s = fit(&scaled, Method::ChowLin, RhoPolicy::default(), false);
    assert_eq!(s.rho, base.rho);
    assert!((s.estimates()[0] - 4.0 * base.estimates()[0]).abs() <= 1e-9 * base.estimates()[0].abs());
    for (a, b) in s.quarterly_estimate.values().iter().zip(base.quarterly_estimate.values()) {
        assert!((a - b).abs() <= 1e-9 * b.abs());
    }
}
