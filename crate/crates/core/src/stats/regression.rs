use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::hypothesis::t_two_sided_p;
use crate::{Error, Result};

/// Ordinary least squares fit with classical standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub n: usize,
}

impl RegressionResult {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// `(coefficient, p value)` for a named predictor.
    pub fn term(&self, name: &str) -> Option<(f64, f64)> {
        self.index_of(name)
            .map(|i| (self.coefficients[i], self.p_values[i]))
    }
}

/// Least squares on an explicit design matrix given as rows. Predictors are
/// named `x0, x1, ...`; include a column of ones for an intercept.
pub fn ols(design: &[Vec<f64>], y: &[f64]) -> Result<RegressionResult> {
    let p = design.first().map_or(0, Vec::len);
    let names = (0..p).map(|j| format!("x{j}")).collect();
    ols_named(names, design, y)
}

/// Fits `y ~ 1 + predictors`; the intercept is named `intercept`.
pub fn fit_with_intercept(predictors: &[(&str, &[f64])], y: &[f64]) -> Result<RegressionResult> {
    for (_, col) in predictors {
        if col.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: col.len(),
            });
        }
    }
    let design: Vec<Vec<f64>> = (0..y.len())
        .map(|i| {
            std::iter::once(1.0)
                .chain(predictors.iter().map(|(_, c)| c[i]))
                .collect()
        })
        .collect();
    let names = std::iter::once("intercept".to_string())
        .chain(predictors.iter().map(|(n, _)| n.to_string()))
        .collect();
    ols_named(names, &design, y)
}

fn ols_named(names: Vec<String>, design: &[Vec<f64>], y: &[f64]) -> Result<RegressionResult> {
    let n = y.len();
    if design.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: design.len(),
        });
    }
    let p = names.len();
    if p == 0 {
        return Err(Error::invalid("design matrix has no columns"));
    }
    if let Some(bad) = design.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: bad.len(),
        });
    }
    if n <= p {
        return Err(Error::InsufficientData {
            needed: p + 1,
            got: n,
        });
    }
    if y.iter()
        .chain(design.iter().flatten())
        .any(|v| !v.is_finite())
    {
        return Err(Error::invalid("non-finite value in regression input"));
    }

    let x = DMatrix::from_fn(n, p, |i, j| design[i][j]);
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if (0..p).any(|j| r[(j, j)].abs() <= 1e-10 * max_diag.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient)?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::RankDeficient)?;

    let residuals = &yv - &x * &beta;
    let rss = residuals.norm_squared();
    let mean_y = yv.mean();
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let df = (n - p) as f64;
    let y_scale = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let exact_fit = rss <= 1e-24 * y_scale;
    let sigma2 = if exact_fit { 0.0 } else { rss / df };
    let coef_scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut std_errors = Vec::with_capacity(p);
    let mut t_values = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for j in 0..p {
        // diag((X'X)^-1) = squared row norms of R^-1
        let se = (sigma2 * r_inv.row(j).norm_squared()).sqrt();
        let b = beta[j];
        let (t, pv) = if se > 0.0 {
            let t = b / se;
            (t, t_two_sided_p(t, df))
        } else if b.abs() <= 1e-10 * coef_scale {
            (0.0, 1.0)
        } else {
            (b.signum() * f64::INFINITY, 0.0)
        };
        std_errors.push(se);
        t_values.push(t);
        p_values.push(pv);
    }

    Ok(RegressionResult {
        names,
        coefficients: beta.iter().copied().collect(),
        std_errors,
        t_values,
        p_values,
        r_squared,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let r = fit_with_intercept(&[("x", &x)], &y).unwrap();
        assert!((r.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(r.coefficients[0].abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(r.p_values[1], 0.0);
    }

    #[test]
    fn constant_response() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = fit_with_intercept(&[("x", &x)], &[3.0; 4]).unwrap();
        assert!(r.coefficients[1].abs() < 1e-12);
        assert!(r.p_values[1] > 0.99);
        assert_eq!(r.r_squared, 0.0);
    }

    #[test]
    fn hand_normal_equations() {
        // Sxy = 4.7, Sxx = 5, Syy = 4.5, RSS = Syy - Sxy^2 / Sxx = 0.082
        let r = fit_with_intercept(&[("x", &[1.0, 2.0, 3.0, 4.0])], &[1.1, 1.9, 3.2, 3.8]).unwrap();
        assert!((r.coefficients[1] - 0.94).abs() < 1e-12);
        assert!((r.coefficients[0] - 0.15).abs() < 1e-12);
        assert!((r.r_squared - (1.0 - 0.082 / 4.5)).abs() < 1e-12);
        // se(slope) = sqrt(0.082 / 2 / 5)
        assert!((r.std_errors[1] - (0.0082f64).sqrt()).abs() < 1e-12);
        assert_eq!(r.term("x").unwrap().0, r.coefficients[1]);
    }

    #[test]
    fn statsmodels_reference() {
        let r = fit_with_intercept(&[("x", &[1.0, 2.0, 3.0, 4.0])], &[1.1, 1.9, 3.2, 3.8]).unwrap();
        assert!((r.t_values[1] - 10.38056345).abs() < 1e-6);
        assert!((r.p_values[1] - 0.009153).abs() < 1e-5, "{}", r.p_values[1]);
        assert!((r.p_values[0] - 0.60675812).abs() < 1e-6);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_with_intercept(&[("x", &[1.0, 1.0, 1.0])], &[1.0, 2.0, 3.0]),
            Err(Error::RankDeficient)
        ));
        assert!(matches!(
            fit_with_intercept(&[("x", &[1.0, 2.0])], &[1.0, 2.0]),
            Err(Error::InsufficientData { .. })
        ));
        let dup = [1.0, 2.0, 4.0, 8.0];
        assert!(matches!(
            fit_with_intercept(&[("a", &dup), ("b", &dup)], &[1.0, 0.0, 2.0, 5.0]),
            Err(Error::RankDeficient)
        ));
    }

    proptest! {
        #[test]
        fn recovers_exact_linear_coefficients(
            b in prop::collection::vec(-5.0f64..5.0, 3),
            rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 2), 6..30),
        ) {
            let x1: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let x2: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            let y: Vec<f64> = rows.iter().map(|r| b[0] + b[1] * r[0] + b[2] * r[1]).collect();
            match fit_with_intercept(&[("a", &x1), ("b", &x2)], &y) {
                Ok(fit) => {
                    for (est, truth) in fit.coefficients.iter().zip(&b) {
                        prop_assert!((est - truth).abs() < 1e-10, "{est} vs {truth}");
                    }
                    prop_assert!(fit.p_values.iter().all(|p| (0.0..=1.0).contains(p)));
                }
                Err(Error::RankDeficient) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}
