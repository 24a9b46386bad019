//! Random-forest binary classifier with mean-decrease-impurity importance.
//!
//! Each tree is grown on a with-replacement bootstrap of the training rows.
//! At every node a uniform subset of `max_features` columns is scanned and
//! the split with the largest Gini decrease wins; candidates are midpoints
//! between consecutive distinct values. Trees grow until a node is pure, would
//! break `min_samples_leaf`, hits `max_depth`, or has no valid split.

mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix};
use crate::seed::rng_for;
use crate::{Error, Result};

use tree::TreeGrower;
pub use tree::{Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(p))`
    Sqrt,
    /// `ceil(log2(p))`
    Log2,
    All,
    Fixed(usize),
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let p = n_features as f64;
        let m = match self {
            MaxFeatures::Sqrt => p.sqrt().ceil() as usize,
            MaxFeatures::Log2 => p.log2().ceil() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Fixed(m) => m,
            MaxFeatures::Fraction(f) => (f * p).ceil() as usize,
        };
        m.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        ForestHyperparams {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            min_samples_leaf: 1,
            max_depth: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<Tree>,
    n_features: usize,
    feature_names: Vec<String>,
    hyperparams: ForestHyperparams,
}

pub fn fit(d: &Dataset, h: &ForestHyperparams) -> Result<ForestModel> {
    if d.n_features() == 0 {
        return Err(Error::invalid("cannot fit a forest on zero features"));
    }
    if d.n_samples() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: d.n_samples(),
        });
    }
    if !d.has_both_classes() {
        return Err(Error::SingleClass);
    }
    if h.n_trees == 0 || h.min_samples_leaf == 0 || h.max_depth == Some(0) {
        return Err(Error::invalid(
            "n_trees, min_samples_leaf and max_depth must be positive",
        ));
    }
    let columns = d.features().columns();
    let grower = TreeGrower {
        columns: &columns,
        labels: d.labels(),
        mtry: h.max_features.resolve(d.n_features()),
        min_samples_leaf: h.min_samples_leaf as u32,
        max_depth: h.max_depth,
    };
    let trees = (0..h.n_trees)
        .into_par_iter()
        .map(|t| grower.grow(&mut rng_for(h.seed, "tree", t as u64)))
        .collect();
    Ok(ForestModel {
        trees,
        n_features: d.n_features(),
        feature_names: d.feature_names().to_vec(),
        hyperparams: h.clone(),
    })
}

impl ForestModel {
    /// Assembles a model from prebuilt trees.
    pub fn from_trees(trees: Vec<Tree>, n_features: usize, hyperparams: ForestHyperparams) -> Self {
        ForestModel {
            trees,
            n_features,
            feature_names: (0..n_features).map(|i| format!("f{i}")).collect(),
            hyperparams,
        }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn hyperparams(&self) -> &ForestHyperparams {
        &self.hyperparams
    }

    /// Mean leaf positive fraction over trees.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf_fraction(row)).sum();
        sum / self.trees.len() as f64
    }

    pub fn predict_proba(&self, rows: &FeatureMatrix) -> Result<Vec<f64>> {
        if rows.n_cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: rows.n_cols(),
            });
        }
        Ok(rows.rows().map(|r| self.predict_row(r)).collect())
    }

    /// Normalised mean decrease in Gini impurity, summed over every split of
    /// every tree. A forest without splits gets a uniform vector.
    pub fn gini_importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for tree in &self.trees {
            for node in &tree.nodes {
                if let Node::Split {
                    feature,
                    impurity_decrease,
                    ..
                } = node
                {
                    imp[*feature] += impurity_decrease;
                }
            }
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        } else {
            log::warn!("forest has no impurity-decreasing split; importance is uniform");
            imp.fill(1.0 / self.n_features as f64);
        }
        imp
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::auc;

    fn dataset(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        let p = rows[0].len();
        let names = (0..p).map(|i| format!("f{i}")).collect();
        Dataset::new(FeatureMatrix::from_rows(&rows).unwrap(), labels, names, "t").unwrap()
    }

    fn separable(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        let labels = rows.iter().map(|r| u8::from(r[0] >= 0.5)).collect();
        dataset(rows, labels)
    }

    fn hp(n_trees: usize, seed: u64) -> ForestHyperparams {
        ForestHyperparams {
            n_trees,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn separable_feature_is_always_the_root() {
        let d = separable(40);
        let m = fit(&d, &hp(10, 1)).unwrap();
        for t in m.trees() {
            assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
        }
        let scores = m.predict_proba(d.features()).unwrap();
        let acc = scores
            .iter()
            .zip(d.labels())
            .filter(|(s, &l)| u8::from(**s > 0.5) == l)
            .count();
        assert_eq!(acc, d.n_samples());
        assert_eq!(m.gini_importance(), vec![1.0]);
    }

    #[test]
    fn constant_features_give_single_leaves() {
        let rows = vec![vec![1.0, 2.0]; 8];
        let labels = vec![0, 0, 0, 1, 1, 0, 0, 1];
        let d = dataset(rows, labels);
        let m = fit(&d, &hp(200, 3)).unwrap();
        assert!(m.trees().iter().all(|t| t.nodes.len() == 1));
        let p = m.predict_row(&[1.0, 2.0]);
        // mean of 200 bootstrap priors around the 3/8 class prior
        assert!((p - 0.375).abs() < 0.05, "{p}");
        assert_eq!(m.gini_importance(), vec![0.5, 0.5]);
    }

    #[test]
    fn xor_is_learned_exactly() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (qx, qy) in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)] {
            for i in 0..25 {
                let (dx, dy) = ((i % 5) as f64 * 0.09 + 0.02, (i / 5) as f64 * 0.09 + 0.02);
                rows.push(vec![qx + dx, qy + dy]);
                labels.push(u8::from((qx > 0.0) != (qy > 0.0)));
            }
        }
        let d = dataset(rows, labels);
        let h = ForestHyperparams {
            max_features: MaxFeatures::All,
            ..hp(25, 7)
        };
        let m = fit(&d, &h).unwrap();
        let scores = m.predict_proba(d.features()).unwrap();
        for (s, &l) in scores.iter().zip(d.labels()) {
            assert_eq!(u8::from(*s > 0.5), l);
        }
    }

    #[test]
    fn single_leaf_probability() {
        let t = Tree {
            nodes: vec![Node::Leaf {
                negatives: 3,
                positives: 1,
            }],
            n_bootstrap: 4,
            oob_rows: vec![],
        };
        let m = ForestModel::from_trees(vec![t], 2, ForestHyperparams::default());
        let rows = FeatureMatrix::new(3, 2, vec![0.0; 6]).unwrap();
        assert_eq!(m.predict_proba(&rows).unwrap(), vec![0.25; 3]);
        let wrong = FeatureMatrix::new(1, 3, vec![0.0; 3]).unwrap();
        assert!(m.predict_proba(&wrong).is_err());
    }

    #[test]
    fn averages_leaf_fractions() {
        let stump = |neg, pos| Tree {
            nodes: vec![Node::Leaf {
                negatives: neg,
                positives: pos,
            }],
            n_bootstrap: neg + pos,
            oob_rows: vec![],
        };
        let m = ForestModel::from_trees(vec![stump(4, 1), stump(2, 3)], 1, Default::default());
        assert!((m.predict_row(&[0.0]) - 0.4).abs() < 1e-15);
        let pure = ForestModel::from_trees(vec![stump(0, 2), stump(0, 5)], 1, Default::default());
        assert_eq!(pure.predict_row(&[0.0]), 1.0);
    }

    #[test]
    fn unused_feature_has_zero_importance() {
        let base = separable(30);
        let rows: Vec<Vec<f64>> = base.features().rows().map(|r| vec![r[0], 5.0]).collect();
        let d = dataset(rows, base.labels().to_vec());
        let imp = fit(&d, &hp(10, 2)).unwrap().gini_importance();
        assert_eq!(imp, vec![1.0, 0.0]);
    }

    #[test]
    fn structural_invariants() {
        let spec = crate::dataset::SyntheticSpec::calibrated(6, 300, 0.5, 4).unwrap();
        let d = crate::dataset::generate_synthetic(&spec).unwrap();
        let m = fit(&d, &hp(8, 5)).unwrap();
        for t in m.trees() {
            let mut leaf_total = 0;
            for node in &t.nodes {
                match node {
                    Node::Split {
                        feature,
                        impurity_decrease,
                        ..
                    } => {
                        assert!(*feature < 6);
                        assert!(*impurity_decrease >= 0.0);
                    }
                    Node::Leaf {
                        negatives,
                        positives,
                    } => leaf_total += negatives + positives,
                }
            }
            assert_eq!(leaf_total, t.n_bootstrap);
        }
        let imp = m.gini_importance();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let scores = m.predict_proba(d.features()).unwrap();
        assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
        assert!(auc(d.labels(), &scores).unwrap() >= 0.5);
    }

    #[test]
    fn fit_is_deterministic() {
        let spec = crate::dataset::SyntheticSpec::calibrated(5, 200, 0.4, 8).unwrap();
        let d = crate::dataset::generate_synthetic(&spec).unwrap();
        assert_eq!(fit(&d, &hp(6, 9)).unwrap(), fit(&d, &hp(6, 9)).unwrap());
    }

    #[test]
    fn appended_constant_feature_gets_no_importance() {
        let spec = crate::dataset::SyntheticSpec::calibrated(4, 200, 0.5, 10).unwrap();
        let d = crate::dataset::generate_synthetic(&spec).unwrap();
        let rows: Vec<Vec<f64>> = d
            .features()
            .rows()
            .map(|r| {
                let mut r = r.to_vec();
                r.push(0.25);
                r
            })
            .collect();
        let wide = dataset(rows, d.labels().to_vec());
        let h = ForestHyperparams {
            max_features: MaxFeatures::All,
            ..hp(6, 11)
        };
        let imp = fit(&wide, &h).unwrap().gini_importance();
        assert_eq!(imp[4], 0.0);
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_shares_importance() {
        // every split on one copy ties exactly with the other copy
        let spec = crate::dataset::SyntheticSpec::calibrated(3, 400, 0.5, 4).unwrap();
        let d = crate::dataset::generate_synthetic(&spec).unwrap();
        let rows: Vec<Vec<f64>> = d
            .features()
            .rows()
            .map(|r| vec![r[2], r[0], r[1], r[2]])
            .collect();
        let twin = dataset(rows, d.labels().to_vec());
        let h = ForestHyperparams {
            max_features: MaxFeatures::All,
            ..hp(60, 5)
        };
        let imp = fit(&twin, &h).unwrap().gini_importance();
        let share = imp[0] / (imp[0] + imp[3]);
        assert!((0.4..=0.6).contains(&share), "first copy share {share}");
    }

    #[test]
    fn fit_errors() {
        let d = dataset(vec![vec![0.0], vec![1.0]], vec![1, 1]);
        assert!(matches!(fit(&d, &hp(3, 0)), Err(Error::SingleClass)));
    }

    #[test]
    fn max_features_rules() {
        assert_eq!(MaxFeatures::Sqrt.resolve(20), 5);
        assert_eq!(MaxFeatures::Sqrt.resolve(10), 4);
        assert_eq!(MaxFeatures::Fixed(50).resolve(3), 3);
        assert_eq!(MaxFeatures::Fraction(0.0).resolve(3), 1);
        assert_eq!(MaxFeatures::Log2.resolve(1), 1);
    }
}
