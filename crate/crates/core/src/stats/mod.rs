//! Hypothesis tests, least squares and the analyses built on them.

mod hypothesis;
mod regression;

use serde::{Deserialize, Serialize};

use crate::degradation::Algorithm;
use crate::{Error, Result};

pub use hypothesis::{paired_t_test, shapiro_wilk, t_two_sided_p, wilcoxon_rank_sum};
pub use regression::{fit_with_intercept, ols, RegressionResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    ShapiroWilk,
    PairedT,
    WilcoxonRankSum,
}

impl TestMethod {
    pub fn name(self) -> &'static str {
        match self {
            TestMethod::ShapiroWilk => "shapiro_wilk",
            TestMethod::PairedT => "paired_t",
            TestMethod::WilcoxonRankSum => "wilcoxon_rank_sum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    /// Sample sizes: one entry for single-sample and paired tests, two for rank-sum.
    pub n: Vec<usize>,
}

/// One observation for the algorithm comparison regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPoint {
    pub auc: f64,
    pub value: f64,
    pub algorithm: Algorithm,
}

pub const ALGORITHM_TERM: &str = "feature_cut";

/// OLS of `value ~ 1 + auc + feature_cut` where the indicator is 0 for data
/// cutting and 1 for feature cutting. The `feature_cut` term carries the verdict.
pub fn algorithm_comparison(points: &[ComparisonPoint]) -> Result<RegressionResult> {
    for alg in [Algorithm::DataCut, Algorithm::FeatureCut] {
        let count = points.iter().filter(|p| p.algorithm == alg).count();
        if count < 3 {
            return Err(Error::InsufficientData {
                needed: 3,
                got: count,
            });
        }
    }
    let auc: Vec<f64> = points.iter().map(|p| p.auc).collect();
    let indicator: Vec<f64> = points
        .iter()
        .map(|p| f64::from(u8::from(p.algorithm == Algorithm::FeatureCut)))
        .collect();
    let y: Vec<f64> = points.iter().map(|p| p.value).collect();
    fit_with_intercept(&[("auc", &auc), (ALGORITHM_TERM, &indicator)], &y)
}

/// Univariate OLS of the algorithm coefficient on the correlation cut standard.
pub fn correlation_effect(points: &[(f64, f64)]) -> Result<RegressionResult> {
    let mut standards: Vec<f64> = points.iter().map(|p| p.0).collect();
    standards.sort_by(f64::total_cmp);
    standards.dedup();
    if standards.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: standards.len(),
        });
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    fit_with_intercept(&[("cut_standard", &x)], &y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacentPair {
    /// The pair compares ranks `rank` and `rank + 1` (1-based).
    pub rank: usize,
    pub test: TestResult,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyReport {
    pub alpha: f64,
    pub pairs: Vec<AdjacentPair>,
    pub significant_ratio: f64,
}

const NORMALITY_ALPHA: f64 = 0.05;

fn looks_normal(x: &[f64]) -> bool {
    shapiro_wilk(x).is_ok_and(|r| r.p_value > NORMALITY_ALPHA)
}

/// Compares each pair of adjacent importance columns.
///
/// `matrix` holds one row per bootstrap with columns already ordered by rank.
/// Both columns passing Shapiro-Wilk selects the paired t-test, otherwise the
/// Wilcoxon rank-sum test is used; a pair counts as distinguished when
/// `p < alpha`.
pub fn adjacent_rank_significance(matrix: &[Vec<f64>], alpha: f64) -> Result<AdjacencyReport> {
    let b = matrix.len();
    if b < 3 {
        return Err(Error::InsufficientData { needed: 3, got: b });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")));
    }
    let p = matrix[0].len();
    if let Some(bad) = matrix.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: bad.len(),
        });
    }
    if p < 2 {
        return Err(Error::InsufficientData { needed: 2, got: p });
    }
    let columns: Vec<Vec<f64>> = (0..p)
        .map(|j| matrix.iter().map(|r| r[j]).collect())
        .collect();
    let normal: Vec<bool> = columns.iter().map(|c| looks_normal(c)).collect();

    let mut pairs = Vec::with_capacity(p - 1);
    for j in 0..p - 1 {
        let (x, y) = (&columns[j], &columns[j + 1]);
        let test = if normal[j] && normal[j + 1] {
            match paired_t_test(x, y) {
                Err(Error::DegeneratePairing) => wilcoxon_rank_sum(x, y)?,
                other => other?,
            }
        } else {
            wilcoxon_rank_sum(x, y)?
        };
        pairs.push(AdjacentPair {
            rank: j + 1,
            significant: test.p_value < alpha,
            test,
        });
    }
    let hits = pairs.iter().filter(|p| p.significant).count();
    Ok(AdjacencyReport {
        alpha,
        significant_ratio: hits as f64 / pairs.len() as f64,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use proptest::prelude::*;
    use rand::Rng;

    fn point(auc: f64, value: f64, algorithm: Algorithm) -> ComparisonPoint {
        ComparisonPoint {
            auc,
            value,
            algorithm,
        }
    }

    #[test]
    fn identical_algorithms_give_zero_indicator() {
        let mut pts = Vec::new();
        for (a, v) in [(0.9, 0.8), (0.8, 0.7), (0.7, 0.65), (0.6, 0.4)] {
            pts.push(point(a, v, Algorithm::DataCut));
            pts.push(point(a, v, Algorithm::FeatureCut));
        }
        let r = algorithm_comparison(&pts).unwrap();
        assert!(r.term(ALGORITHM_TERM).unwrap().0.abs() < 1e-12);
    }

    #[test]
    fn constructed_offset_is_recovered() {
        let mut pts = Vec::new();
        for (a, v) in [(0.9, 0.8), (0.8, 0.71), (0.7, 0.6), (0.6, 0.52)] {
            pts.push(point(a, v, Algorithm::DataCut));
            pts.push(point(a, v + 0.2, Algorithm::FeatureCut));
        }
        let r = algorithm_comparison(&pts).unwrap();
        assert!((r.term(ALGORITHM_TERM).unwrap().0 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn comparison_needs_three_per_algorithm() {
        let pts = vec![
            point(0.9, 0.1, Algorithm::DataCut),
            point(0.8, 0.2, Algorithm::DataCut),
            point(0.7, 0.3, Algorithm::DataCut),
            point(0.9, 0.1, Algorithm::FeatureCut),
            point(0.8, 0.2, Algorithm::FeatureCut),
        ];
        assert!(matches!(
            algorithm_comparison(&pts),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn correlation_effect_examples() {
        let r = correlation_effect(&[(0.9, 0.1), (0.6, 0.2), (0.3, 0.3)]).unwrap();
        assert!((r.coefficients[1] + 1.0 / 3.0).abs() < 1e-12);
        let flat = correlation_effect(&[(0.9, 0.5), (0.6, 0.5), (0.3, 0.5)]).unwrap();
        assert!(flat.coefficients[1].abs() < 1e-12);
        assert!(correlation_effect(&[(0.9, 0.1), (0.9, 0.2), (0.3, 0.3)]).is_err());
    }

    #[test]
    fn adjacency_examples() {
        let mut rng = rng_for(5, "adjacency", 0);
        let col: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
        let identical: Vec<Vec<f64>> = col.iter().map(|&v| vec![v; 4]).collect();
        let r = adjacent_rank_significance(&identical, 0.05).unwrap();
        assert_eq!(r.pairs.len(), 3);
        assert_eq!(r.significant_ratio, 0.0);

        let disjoint: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                (0..4)
                    .map(|j| 10.0 * (4 - j) as f64 + rng.random::<f64>())
                    .collect()
            })
            .collect();
        assert_eq!(
            adjacent_rank_significance(&disjoint, 0.05)
                .unwrap()
                .significant_ratio,
            1.0
        );

        assert!(adjacent_rank_significance(&disjoint[..2], 0.05).is_err());
    }

    proptest! {
        #[test]
        fn ratio_shrinks_with_alpha(seed in any::<u64>(), b in 3usize..15, p in 2usize..6) {
            let mut rng = rng_for(seed, "adjacency-alpha", 0);
            let m: Vec<Vec<f64>> = (0..b)
                .map(|_| (0..p).map(|j| rng.random::<f64>() + 0.3 * (p - j) as f64).collect())
                .collect();
            let mut last = f64::INFINITY;
            for alpha in [0.2, 0.1, 0.05, 0.01, 0.001] {
                let r = adjacent_rank_significance(&m, alpha).unwrap();
                prop_assert!(r.significant_ratio <= last);
                prop_assert!(r.pairs.iter().all(|q| (0.0..=1.0).contains(&q.test.p_value)));
                last = r.significant_ratio;
            }
        }
    }
}
