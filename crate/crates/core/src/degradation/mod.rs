//! Bootstrap experiments and the two performance-degradation algorithms.

mod analysis;
mod export;
mod schedule;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::forest::{self, ForestHyperparams};
use crate::metrics::{auc, RankVector, StabilityIndexes};
use crate::seed::{derive_seed, rng_for};
use crate::{Error, Result};

pub use analysis::{
    compare_traces, correlation_sweep, interpolated_difference, overlap_grid, sufficiency_probe,
    trim_traces, DifferencePoint, SufficiencyPoint, SufficiencyReport, SweepEntry, SweepResult,
};
pub use export::{trace_csv, traces_csv, TRACE_CSV_HEADER};
pub use schedule::{run_data_cutting, run_data_cutting_from, run_feature_cutting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DataCut,
    FeatureCut,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DataCut => "data_cut",
            Algorithm::FeatureCut => "feature_cut",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Evaluation {
    /// Score each bootstrap's forest on the rows its resample never drew.
    OutOfBag,
    /// Stratified split per bootstrap; the forest trains on a resample of the rest.
    Holdout { test_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSchedule {
    /// Same halving and midpoint refinement as data cutting.
    Halving,
    /// Remove one feature per step.
    OneAtATime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n_bootstraps: usize,
    pub forest: ForestHyperparams,
    pub auc_floor: f64,
    pub auc_step_tolerance: f64,
    pub seed: u64,
    pub evaluation: Evaluation,
    pub feature_schedule: FeatureSchedule,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_bootstraps: 100,
            forest: ForestHyperparams::default(),
            auc_floor: 0.55,
            auc_step_tolerance: 0.05,
            seed: 0,
            evaluation: Evaluation::OutOfBag,
            feature_schedule: FeatureSchedule::Halving,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bootstraps == 0 {
            return Err(Error::invalid("n_bootstraps must be positive"));
        }
        if !(self.auc_floor >= 0.5 && self.auc_floor < 1.0) {
            return Err(Error::invalid(format!(
                "auc_floor {} outside [0.5, 1)",
                self.auc_floor
            )));
        }
        if self.auc_step_tolerance.is_nan() || self.auc_step_tolerance <= 0.0 {
            return Err(Error::invalid("auc_step_tolerance must be positive"));
        }
        if let Evaluation::Holdout { test_fraction } = self.evaluation {
            if !(test_fraction > 0.0 && test_fraction < 1.0) {
                return Err(Error::invalid(format!(
                    "holdout test_fraction {test_fraction} outside (0, 1)"
                )));
            }
        }
        Ok(())
    }

    /// A copy whose seed is derived from this one, for a sub-experiment.
    pub fn derived(&self, component: &str, index: u64) -> ExperimentConfig {
        ExperimentConfig {
            seed: derive_seed(self.seed, component, index),
            ..self.clone()
        }
    }
}

/// Bootstrap-averaged performance and importance for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub mean_auc: f64,
    pub auc_sd: f64,
    pub aucs: Vec<f64>,
    /// One row per bootstrap, columns in `feature_set` order, rows summing to 1.
    pub importance_matrix: Vec<Vec<f64>>,
    pub mean_importance: Vec<f64>,
    pub rank: RankVector,
    pub sample_count: usize,
    pub feature_set: Vec<String>,
}

impl ExperimentResult {
    fn from_bootstraps(
        aucs: Vec<f64>,
        importance_matrix: Vec<Vec<f64>>,
        sample_count: usize,
        feature_set: Vec<String>,
        source: String,
    ) -> Result<Self> {
        let b = aucs.len() as f64;
        let mean_auc = aucs.iter().sum::<f64>() / b;
        let auc_sd = if aucs.len() > 1 {
            (aucs.iter().map(|a| (a - mean_auc).powi(2)).sum::<f64>() / (b - 1.0)).sqrt()
        } else {
            0.0
        };
        let p = feature_set.len();
        let mean_importance: Vec<f64> = (0..p)
            .map(|j| importance_matrix.iter().map(|r| r[j]).sum::<f64>() / b)
            .collect();
        let rank = RankVector::from_importance(&feature_set, &mean_importance, source)?;
        Ok(ExperimentResult {
            mean_auc,
            auc_sd,
            aucs,
            importance_matrix,
            mean_importance,
            rank,
            sample_count,
            feature_set,
        })
    }

    /// The importance matrix with columns reordered from rank 1 downwards.
    pub fn rank_aligned_importance(&self) -> Vec<Vec<f64>> {
        let mut order: Vec<usize> = (0..self.feature_set.len()).collect();
        order.sort_unstable_by_key(|&j| self.rank.ranks[j]);
        self.importance_matrix
            .iter()
            .map(|row| order.iter().map(|&j| row[j]).collect())
            .collect()
    }
}

fn split_rows(d: &Dataset, c: &ExperimentConfig, b: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = d.n_samples();
    let mut rng = rng_for(c.seed, "bootstrap-resample", b);
    use rand::seq::SliceRandom;
    use rand::Rng;
    match c.evaluation {
        Evaluation::OutOfBag => {
            let mut drawn = vec![false; n];
            let train: Vec<usize> = (0..n)
                .map(|_| {
                    let r = rng.random_range(0..n);
                    drawn[r] = true;
                    r
                })
                .collect();
            let test = (0..n).filter(|&r| !drawn[r]).collect();
            Ok((train, test))
        }
        Evaluation::Holdout { test_fraction } => {
            let mut test = Vec::new();
            let mut rest = Vec::new();
            for class in [0u8, 1] {
                let mut rows: Vec<usize> = (0..n).filter(|&r| d.labels()[r] == class).collect();
                rows.shuffle(&mut rng);
                let k = ((rows.len() as f64 * test_fraction).round() as usize).min(rows.len());
                test.extend_from_slice(&rows[..k]);
                rest.extend_from_slice(&rows[k..]);
            }
            test.sort_unstable();
            rest.sort_unstable();
            if rest.is_empty() {
                return Ok((Vec::new(), test));
            }
            let train = (0..rest.len())
                .map(|_| rest[rng.random_range(0..rest.len())])
                .collect();
            Ok((train, test))
        }
    }
}

fn has_both(labels: &[u8], rows: &[usize]) -> bool {
    let pos = rows.iter().filter(|&&r| labels[r] == 1).count();
    pos > 0 && pos < rows.len()
}

/// Runs `n_bootstraps` resample, fit and evaluate rounds and averages them.
///
/// Any round whose training or evaluation rows miss a class fails the whole
/// experiment with [`Error::ClassExhaustion`].
pub fn bootstrap_experiment(d: &Dataset, c: &ExperimentConfig) -> Result<ExperimentResult> {
    c.validate()?;
    if d.n_features() == 0 {
        return Err(Error::invalid("experiment needs at least one feature"));
    }
    if !d.has_both_classes() {
        return Err(Error::ClassExhaustion(format!(
            "dataset of {} rows has a single class",
            d.n_samples()
        )));
    }
    let rounds: Vec<(f64, Vec<f64>)> = (0..c.n_bootstraps as u64)
        .into_par_iter()
        .map(|b| {
            let (train, test) = split_rows(d, c, b)?;
            if !has_both(d.labels(), &test) || !has_both(d.labels(), &train) {
                return Err(Error::ClassExhaustion(format!(
                    "bootstrap {b} of a {}-row dataset lost a class ({} training, {} evaluation rows)",
                    d.n_samples(),
                    train.len(),
                    test.len()
                )));
            }
            let h = ForestHyperparams {
                seed: derive_seed(c.seed, "bootstrap-forest", b),
                ..c.forest.clone()
            };
            let model = forest::fit(&d.select_rows(&train), &h)?;
            let held = d.select_rows(&test);
            let scores = model.predict_proba(held.features())?;
            Ok((auc(held.labels(), &scores)?, model.gini_importance()))
        })
        .collect::<Result<_>>()?;
    let (aucs, importance): (Vec<f64>, Vec<Vec<f64>>) = rounds.into_iter().unzip();
    ExperimentResult::from_bootstraps(
        aucs,
        importance,
        d.n_samples(),
        d.feature_names().to_vec(),
        format!("experiment(n={},p={})", d.n_samples(), d.n_features()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    AucFloor,
    ClassExhaustion,
    FeatureExhaustion,
}

impl TerminationReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminationReason::AucFloor => "auc_floor",
            TerminationReason::ClassExhaustion => "class_exhaustion",
            TerminationReason::FeatureExhaustion => "feature_exhaustion",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Sample count for data cutting, feature count for feature cutting.
    pub size: usize,
    /// Inserted midway after a large AUC drop.
    pub refinement: bool,
    pub result: ExperimentResult,
    /// Against the full-data reference, projected onto surviving features.
    pub indexes: StabilityIndexes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationTrace {
    pub algorithm: Algorithm,
    /// Ordered by strictly decreasing size; step 0 is the full-data reference.
    pub steps: Vec<TraceStep>,
    pub reference: ExperimentResult,
    pub termination: TerminationReason,
    pub warnings: Vec<String>,
}

impl DegradationTrace {
    pub fn aucs(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.result.mean_auc).collect()
    }

    pub fn auc_range(&self) -> Option<(f64, f64)> {
        let aucs = self.aucs();
        let lo = aucs.iter().copied().reduce(f64::min)?;
        let hi = aucs.iter().copied().reduce(f64::max)?;
        Some((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureMatrix;

    pub(crate) fn separable(n: usize) -> Dataset {
        let x: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let labels = x.iter().map(|&v| u8::from(v >= 0.5)).collect();
        Dataset::new(
            FeatureMatrix::new(n, 1, x).unwrap(),
            labels,
            vec!["x".into()],
            "sep",
        )
        .unwrap()
    }

    fn small_config(b: usize) -> ExperimentConfig {
        ExperimentConfig {
            n_bootstraps: b,
            forest: ForestHyperparams {
                n_trees: 10,
                ..Default::default()
            },
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn single_bootstrap_mean_is_that_auc() {
        let r = bootstrap_experiment(&separable(60), &small_config(1)).unwrap();
        assert_eq!(r.aucs.len(), 1);
        assert_eq!(r.mean_auc, r.aucs[0]);
        assert_eq!(r.auc_sd, 0.0);
    }

    #[test]
    fn separable_dataset_scores_high() {
        let r = bootstrap_experiment(&separable(200), &small_config(10)).unwrap();
        assert!(r.mean_auc >= 0.95, "{}", r.mean_auc);
        assert_eq!(r.mean_importance, vec![1.0]);
    }

    #[test]
    fn tiny_minority_exhausts() {
        let d = Dataset::new(
            FeatureMatrix::new(6, 1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap(),
            vec![0, 0, 0, 0, 0, 1],
            vec!["x".into()],
            "t",
        )
        .unwrap();
        let err = bootstrap_experiment(&d, &small_config(20)).unwrap_err();
        assert!(matches!(err, Error::ClassExhaustion(_)));
        assert!(err.to_string().starts_with("class_exhaustion"));
    }

    #[test]
    fn holdout_evaluation_runs() {
        let c = ExperimentConfig {
            evaluation: Evaluation::Holdout { test_fraction: 0.3 },
            ..small_config(5)
        };
        let r = bootstrap_experiment(&separable(100), &c).unwrap();
        assert!(r.mean_auc > 0.9);
        let bad = ExperimentConfig {
            evaluation: Evaluation::Holdout { test_fraction: 1.0 },
            ..small_config(5)
        };
        assert!(bootstrap_experiment(&separable(100), &bad).is_err());
    }

    #[test]
    fn result_invariants() {
        let spec = crate::SyntheticSpec::calibrated(6, 300, 0.5, 4).unwrap();
        let d = crate::dataset::generate_synthetic(&spec).unwrap();
        let r = bootstrap_experiment(&d, &small_config(6)).unwrap();
        for j in 0..6 {
            let mean = r.importance_matrix.iter().map(|row| row[j]).sum::<f64>() / 6.0;
            assert_eq!(mean, r.mean_importance[j]);
        }
        for row in &r.importance_matrix {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let again = RankVector::from_importance(&r.feature_set, &r.mean_importance, "x").unwrap();
        assert_eq!(again.ranks, r.rank.ranks);
        let aligned = r.rank_aligned_importance();
        let first = aligned.iter().map(|row| row[0]).sum::<f64>();
        let last = aligned.iter().map(|row| row[5]).sum::<f64>();
        assert!(first >= last);
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        c.auc_floor = 0.4;
        assert!(c.validate().is_err());
        c.auc_floor = 0.55;
        c.auc_step_tolerance = 0.0;
        assert!(c.validate().is_err());
    }
}
