//! Ordinary least squares via Householder QR.
//!
//! With an intercept the response and regressors are centered first and the
//! slope problem is solved on the centered design; the intercept is then
//! recovered from the means. Log prices sit far from zero and top holdings
//! are strongly collinear, so both the centering and the orthogonal solve
//! matter. Normal equations are never formed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitOptions {
    pub include_intercept: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            include_intercept: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    /// One slope per regressor column, in column order.
    pub coefficients: Vec<f64>,
    pub intercept: Option<f64>,
    /// Centered when an intercept is fitted, uncentered otherwise.
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    /// Ratio of extreme singular values of the (centered) design.
    pub condition_number: f64,
    pub n_obs: usize,
}

impl RegressionFit {
    pub fn intercept_or_zero(&self) -> f64 {
        self.intercept.unwrap_or(0.0)
    }

    pub fn fitted(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.residuals).map(|(a, e)| a - e).collect()
    }
}

/// Fits `y = α + X β + ε`, with `α` omitted unless requested.
pub fn fit(y: &[f64], x: &DMatrix<f64>, opts: FitOptions) -> Result<RegressionFit> {
    let n = y.len();
    let p = x.ncols();
    if x.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.nrows(),
        });
    }
    if p == 0 {
        return Err(Error::InvalidParameter("no regressors supplied".into()));
    }
    let needed = p + usize::from(opts.include_intercept) + 1;
    if n < needed {
        return Err(Error::InsufficientData { needed, actual: n });
    }
    if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "non-finite value in regression input".into(),
        ));
    }

    let y = DVector::from_column_slice(y);
    let (design, response, x_means, y_mean) = if opts.include_intercept {
        let means: Vec<f64> = x.column_iter().map(|c| c.mean()).collect();
        let y_mean = y.mean();
        let centered = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - means[j]);
        (centered, y.add_scalar(-y_mean), means, y_mean)
    } else {
        (x.clone(), y.clone(), vec![0.0; p], 0.0)
    };

    let singular = design.clone().svd(false, false).singular_values;
    let s_max = singular.max();
    let s_min = singular.min();
    // Rounding in the inputs is relative to their raw magnitude, which
    // centering hides; scale the rank tolerance by the larger of the two.
    let raw_scale = x.column_iter().map(|c| c.norm()).fold(s_max, f64::max);
    let tol = n as f64 * f64::EPSILON * raw_scale;

    let qr = design.clone().qr();
    let r = qr.r();
    if s_max == 0.0 || s_min <= tol {
        let dependent = (0..p)
            .filter(|&j| r[(j, j)].abs() <= tol.max(f64::MIN_POSITIVE))
            .collect();
        return Err(Error::RankDeficient {
            dependent_columns: dependent,
        });
    }

    let qty = qr.q().tr_mul(&response);
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numeric("triangular solve failed".into()))?;

    let residuals = &response - &design * &beta;
    let ss_res = residuals.norm_squared();
    let ss_tot = response.norm_squared();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = opts.include_intercept.then(|| {
        y_mean
            - coefficients
                .iter()
                .zip(&x_means)
                .map(|(b, m)| b * m)
                .sum::<f64>()
    });

    Ok(RegressionFit {
        coefficients,
        intercept,
        r_squared,
        residuals: residuals.iter().copied().collect(),
        condition_number: s_max / s_min,
        n_obs: n,
    })
}

/// Single-regressor convenience over [`fit`].
pub fn fit_simple(y: &[f64], x: &[f64], opts: FitOptions) -> Result<RegressionFit> {
    fit(y, &DMatrix::from_column_slice(x.len(), 1, x), opts)
}

/// `ŷ_t = α + Σ_j β_j x_{j,t}`.
pub fn predict(fit: &RegressionFit, x: &DMatrix<f64>) -> Result<Vec<f64>> {
    if x.ncols() != fit.coefficients.len() {
        return Err(Error::DimensionMismatch {
            expected: fit.coefficients.len(),
            actual: x.ncols(),
        });
    }
    let alpha = fit.intercept_or_zero();
    Ok(x.row_iter()
        .map(|row| {
            alpha
                + row
                    .iter()
                    .zip(&fit.coefficients)
                    .map(|(v, b)| v * b)
                    .sum::<f64>()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const WITH: FitOptions = FitOptions {
        include_intercept: true,
    };
    const WITHOUT: FitOptions = FitOptions {
        include_intercept: false,
    };

    #[test]
    fn identity_regression() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let f = fit_simple(&x, &x, WITH).unwrap();
        assert!((f.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(f.intercept.unwrap().abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.residuals.iter().all(|e| e.abs() < 1e-12));
        assert_eq!(f.n_obs, 4);
    }

    #[test]
    fn three_point_closed_form() {
        let (x, y) = ([1.0, 2.0, 3.0], [2.0, 4.0, 7.0]);
        // Sxy / Sxx with x̄ = 2, ȳ = 13/3.
        let xm = 2.0;
        let ym = 13.0 / 3.0;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum();
        let sxx: f64 = x.iter().map(|a| (a - xm) * (a - xm)).sum();
        let beta = sxy / sxx;
        let alpha = ym - beta * xm;
        assert!((beta - 2.5).abs() < 1e-15);
        assert!((alpha + 2.0 / 3.0).abs() < 1e-15);

        let f = fit_simple(&y, &x, WITH).unwrap();
        assert!((f.coefficients[0] - beta).abs() < 1e-12);
        assert!((f.intercept.unwrap() - alpha).abs() < 1e-12);
    }

    #[test]
    fn recovers_two_regressor_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100;
        let x = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-5.0..5.0));
        let y: Vec<f64> = (0..n)
            .map(|i| 3.0 + 2.0 * x[(i, 0)] - x[(i, 1)] + 1e-10 * rng.random_range(-1.0..1.0))
            .collect();
        let f = fit(&y, &x, WITH).unwrap();
        assert!((f.coefficients[0] - 2.0).abs() < 1e-6);
        assert!((f.coefficients[1] + 1.0).abs() < 1e-6);
        assert!((f.intercept.unwrap() - 3.0).abs() < 1e-6);

        // Holdout rows of the same exact-linear relation.
        let x_new = DMatrix::from_fn(10, 2, |i, j| (i as f64) * 0.7 - (j as f64) * 1.3);
        let pred = predict(&f, &x_new).unwrap();
        for i in 0..10 {
            let truth = 3.0 + 2.0 * x_new[(i, 0)] - x_new[(i, 1)];
            assert!((pred[i] - truth).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicate_columns_are_rank_deficient() {
        let c: Vec<f64> = (0..20).map(|i| (i as f64).sin() + 2.0).collect();
        let x = DMatrix::from_fn(20, 3, |i, j| if j == 0 { (i as f64).cos() } else { c[i] });
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        match fit(&y, &x, WITH) {
            Err(Error::RankDeficient { dependent_columns }) => {
                assert_eq!(dependent_columns, vec![2])
            }
            other => panic!("unexpected {other:?}"),
        }
        // A constant regressor collides with the intercept.
        let x = DMatrix::from_element(20, 1, 4.0);
        assert!(matches!(
            fit(&y, &x, WITH),
            Err(Error::RankDeficient { .. })
        ));
        assert!(fit(&y, &x, WITHOUT).is_ok());
    }

    #[test]
    fn log_prices_of_scaled_duplicate_are_rank_deficient() {
        // ln(3p) = ln 3 + ln p up to rounding in the logs.
        let p: Vec<f64> = (0..40)
            .map(|i| 10.0 * (1.0 + 0.01 * ((i * 7 % 11) as f64)))
            .collect();
        let x = DMatrix::from_fn(
            40,
            2,
            |i, j| if j == 0 { p[i].ln() } else { (3.0 * p[i]).ln() },
        );
        let y: Vec<f64> = (0..40).map(|i| i as f64 / 252.0).collect();
        assert!(matches!(
            fit(&y, &x, WITH),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn input_errors() {
        let x = DMatrix::from_element(3, 1, 1.0);
        assert!(matches!(
            fit(&[1.0, 2.0], &x, WITH),
            Err(Error::DimensionMismatch { .. })
        ));
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        assert!(matches!(
            fit(&[1.0, 2.0], &x, WITH),
            Err(Error::InsufficientData {
                needed: 3,
                actual: 2
            })
        ));
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let f = fit(&[1.0, 2.0, 4.0], &x, WITH).unwrap();
        assert!(predict(&f, &DMatrix::from_element(3, 2, 1.0)).is_err());
    }

    #[test]
    fn predict_definitions() {
        let x = DMatrix::from_fn(30, 2, |i, j| ((i * (j + 2)) as f64).sin());
        let y: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).cos()).collect();
        let f = fit(&y, &x, WITH).unwrap();
        let pred = predict(&f, &x).unwrap();
        for (p, q) in pred.iter().zip(f.fitted(&y)) {
            assert!((p - q).abs() < 1e-12);
        }

        let zero = RegressionFit {
            coefficients: vec![0.0, 0.0],
            intercept: Some(1.25),
            r_squared: 0.0,
            residuals: vec![],
            condition_number: 1.0,
            n_obs: 0,
        };
        assert!(predict(&zero, &x).unwrap().iter().all(|v| *v == 1.25));
    }

    #[test]
    fn no_intercept_r_squared_is_uncentered() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.5, 1.9, 3.2, 3.9];
        let f = fit_simple(&y, &x, WITHOUT).unwrap();
        assert!(f.intercept.is_none());
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        assert!((f.coefficients[0] - sxy / sxx).abs() < 1e-14);
        let ss_res: f64 = f.residuals.iter().map(|e| e * e).sum();
        let ss_tot: f64 = y.iter().map(|v| v * v).sum();
        assert!((f.r_squared - (1.0 - ss_res / ss_tot)).abs() < 1e-14);
    }

    fn design(seed: u64, n: usize, p: usize) -> (Vec<f64>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
        let y = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        (y, x)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn response_scaling_and_shift(seed in 0u64..10_000, k in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0], c in -100.0f64..100.0) {
            let (y, x) = design(seed, 40, 3);
            let base = fit(&y, &x, WITH).unwrap();
            let ky: Vec<f64> = y.iter().map(|v| v * k).collect();
            let scaled = fit(&ky, &x, WITH).unwrap();
            for (a, b) in base.coefficients.iter().zip(&scaled.coefficients) {
                prop_assert!((b - k * a).abs() <= 1e-10 * (1.0 + k.abs()));
            }
            prop_assert!((scaled.intercept.unwrap() - k * base.intercept.unwrap()).abs() <= 1e-10 * (1.0 + k.abs()));
            prop_assert!((scaled.r_squared - base.r_squared).abs() <= 1e-10);

            let cy: Vec<f64> = y.iter().map(|v| v + c).collect();
            let shifted = fit(&cy, &x, WITH).unwrap();
            for (a, b) in base.coefficients.iter().zip(&shifted.coefficients) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
            prop_assert!((shifted.intercept.unwrap() - base.intercept.unwrap() - c).abs() <= 1e-10);
            for (a, b) in base.residuals.iter().zip(&shifted.residuals) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }

        #[test]
        fn regressor_scaling(seed in 0u64..10_000, k in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0], j in 0usize..3) {
            let (y, x) = design(seed, 35, 3);
            let base = fit(&y, &x, WITH).unwrap();
            let mut xs = x.clone();
            xs.column_mut(j).scale_mut(k);
            let scaled = fit(&y, &xs, WITH).unwrap();
            prop_assert!((scaled.coefficients[j] * k - base.coefficients[j]).abs() <= 1e-10);
            for (a, b) in base.residuals.iter().zip(&scaled.residuals) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }

        #[test]
        fn residual_structure(seed in 0u64..10_000, n in 8usize..60, p in 1usize..5) {
            let (y, x) = design(seed, n, p);
            let f = fit(&y, &x, WITH).unwrap();
            prop_assert_eq!(f.residuals.len(), n);
            let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mean = f.residuals.iter().sum::<f64>() / n as f64;
            prop_assert!(mean.abs() <= 1e-10 * scale);
            let e_norm = f.residuals.iter().map(|e| e * e).sum::<f64>().sqrt();
            for j in 0..p {
                let col = x.column(j);
                let m = col.mean();
                let dot: f64 = f.residuals.iter().zip(col.iter()).map(|(e, v)| e * (v - m)).sum();
                let c_norm = col.iter().map(|v| (v - m).powi(2)).sum::<f64>().sqrt();
                prop_assert!(dot.abs() <= 1e-8 * e_norm * c_norm);
            }
            prop_assert!(f.r_squared >= 0.0 && f.r_squared <= 1.0 + 1e-12);
            prop_assert!(f.condition_number >= 1.0);
        }
    }
}
