use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureMatrix};
use crate::seed::rng_for;
use crate::{Error, Result};

/// Draws used to place the decision threshold at the requested class balance.
pub const CALIBRATION_DRAWS: usize = 1_000_000;

/// Linear-combination generator: `y = a · x`, `x_n ~ U[0, 1]`, label `y > threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_features: usize,
    pub n_samples: usize,
    pub positive_fraction: f64,
    pub seed: u64,
    pub coefficients: Vec<f64>,
    pub threshold: f64,
}

/// Coefficients proportional to `1..=n`, normalised to sum to one.
pub fn linear_coefficients(n: usize) -> Vec<f64> {
    let total = (n * (n + 1)) as f64 / 2.0;
    (1..=n).map(|i| i as f64 / total).collect()
}

impl SyntheticSpec {
    /// Builds a spec whose threshold is the empirical `(1 - positive_fraction)`
    /// quantile of `y` over [`CALIBRATION_DRAWS`] draws from a stream that is
    /// independent of the data stream.
    pub fn calibrated(
        n_features: usize,
        n_samples: usize,
        positive_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(positive_fraction > 0.0 && positive_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "positive_fraction {positive_fraction} outside (0, 1)"
            )));
        }
        check_shape(n_features, n_samples)?;
        let coefficients = linear_coefficients(n_features);
        let mut rng = rng_for(seed, "synthetic-threshold", 0);
        let mut ys: Vec<f64> = (0..CALIBRATION_DRAWS)
            .map(|_| coefficients.iter().map(|a| a * rng.random::<f64>()).sum())
            .collect();
        ys.sort_unstable_by(f64::total_cmp);
        let threshold = quantile_sorted(&ys, 1.0 - positive_fraction);
        let spec = SyntheticSpec {
            n_features,
            n_samples,
            positive_fraction,
            seed,
            coefficients,
            threshold,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The three benchmark datasets: positive fractions 50.85 %, 25.01 % and
    /// 75.01 % with 20 features.
    pub fn reference_dataset(which: u8, n_samples: usize, seed: u64) -> Result<Self> {
        let fraction = match which {
            1 => 0.5085,
            2 => 0.2501,
            3 => 0.7501,
            _ => return Err(Error::invalid(format!("no reference dataset {which}"))),
        };
        SyntheticSpec::calibrated(20, n_samples, fraction, seed)
    }

    pub fn validate(&self) -> Result<()> {
        check_shape(self.n_features, self.n_samples)?;
        if self.coefficients.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: self.coefficients.len(),
            });
        }
        if self.coefficients.iter().any(|&a| a.is_nan() || a <= 0.0) {
            return Err(Error::invalid("coefficients must be positive"));
        }
        if self.coefficients.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("coefficients must be strictly increasing"));
        }
        let sum: f64 = self.coefficients.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("coefficients sum to {sum}, not 1")));
        }
        // y ranges over [0, sum(a)] = [0, 1]
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid(format!(
                "threshold {} outside the attainable range [0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

fn check_shape(n_features: usize, n_samples: usize) -> Result<()> {
    if n_features < 2 || n_samples < 2 {
        return Err(Error::invalid(format!(
            "degenerate synthetic spec: {n_features} features, {n_samples} samples (need >= 2 each)"
        )));
    }
    Ok(())
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let (n, p) = (spec.n_samples, spec.n_features);
    let mut rng = rng_for(spec.seed, "synthetic-data", 0);
    let mut data = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut y = 0.0;
        for a in &spec.coefficients {
            let x: f64 = rng.random();
            y += a * x;
            data.push(x);
        }
        labels.push(u8::from(y > spec.threshold));
    }
    let names = (1..=p).map(|i| format!("x{i}")).collect();
    let provenance = format!(
        "synthetic(N={p},n={n},positive_fraction={},seed={})",
        spec.positive_fraction, spec.seed
    );
    Dataset::new(FeatureMatrix::new(n, p, data)?, labels, names, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_are_normalised() {
        let a = linear_coefficients(20);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((a[0] - 1.0 / 210.0).abs() < 1e-15);
        assert!((a[19] - 20.0 / 210.0).abs() < 1e-15);
    }

    #[test]
    fn table_one_class_balances() {
        for (which, expected) in [(1u8, 5085.0), (2, 2501.0), (3, 7501.0)] {
            let spec = SyntheticSpec::reference_dataset(which, 10_000, 20240501).unwrap();
            let d = generate_synthetic(&spec).unwrap();
            let pos = d.n_positive() as f64;
            assert!(
                (pos - expected).abs() <= 150.0,
                "dataset {which}: {pos} positives"
            );
        }
    }

    #[test]
    fn zero_threshold_labels_everything_positive() {
        let spec = SyntheticSpec {
            n_features: 2,
            n_samples: 500,
            positive_fraction: 0.5,
            seed: 3,
            coefficients: vec![1.0 / 3.0, 2.0 / 3.0],
            threshold: 0.0,
        };
        let d = generate_synthetic(&spec).unwrap();
        assert_eq!(d.n_positive(), 500);
    }

    #[test]
    fn bit_identical_for_same_spec() {
        let spec = SyntheticSpec::calibrated(5, 300, 0.4, 77).unwrap();
        assert_eq!(
            generate_synthetic(&spec).unwrap(),
            generate_synthetic(&spec).unwrap()
        );
    }

    #[test]
    fn positive_fraction_converges() {
        let spec = SyntheticSpec::calibrated(20, 100_000, 0.3, 5).unwrap();
        let d = generate_synthetic(&spec).unwrap();
        assert!((d.positive_fraction() - 0.3).abs() < 0.01);
    }

    #[test]
    fn degenerate_specs_rejected() {
        assert!(SyntheticSpec::calibrated(1, 100, 0.5, 0).is_err());
        assert!(SyntheticSpec::calibrated(5, 1, 0.5, 0).is_err());
        assert!(SyntheticSpec::calibrated(5, 100, 1.0, 0).is_err());
        let mut spec = SyntheticSpec::calibrated(3, 10, 0.5, 0).unwrap();
        spec.coefficients = vec![0.5, 0.3, 0.2];
        assert!(spec.validate().is_err());
        spec.coefficients = linear_coefficients(3);
        spec.threshold = 1.5;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = SyntheticSpec::calibrated(4, 10, 0.5, 1).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<SyntheticSpec>(&text).unwrap(), spec);
    }
}
