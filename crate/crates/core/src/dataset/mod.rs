//! Tabular binary-classification datasets.

mod correlation;
mod ingest;
mod synthetic;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed::rng_for;
use crate::{Error, Result};

pub use correlation::{
    correlation_matrix, prune_correlated, CorrelationMatrix, PruneEntry, PruneLog,
};
pub use ingest::{load_csv, parse_csv, CategoricalPolicy, CsvOptions, MissingPolicy};
pub use synthetic::{generate_synthetic, linear_coefficients, SyntheticSpec};

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_rows * n_cols,
                got: data.len(),
            });
        }
        Ok(FeatureMatrix {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(FeatureMatrix {
            n_rows: rows.len(),
            n_cols,
            data,
        })
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows).map(move |r| self.row(r))
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, col)).collect()
    }

    /// Column-major copy, one `Vec` per column.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_cols).map(|c| self.column(c)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            data,
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(self.n_rows * cols.len());
        for r in 0..self.n_rows {
            let row = self.row(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        FeatureMatrix {
            n_rows: self.n_rows,
            n_cols: cols.len(),
            data,
        }
    }
}

/// Numeric features, binary labels, unique feature names and a provenance tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: FeatureMatrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    provenance: String,
}

impl Dataset {
    pub fn new(
        features: FeatureMatrix,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if features.n_rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.n_rows(),
                got: labels.len(),
            });
        }
        if feature_names.len() != features.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: features.n_cols(),
                got: feature_names.len(),
            });
        }
        let mut seen = HashSet::with_capacity(feature_names.len());
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name `{name}`")));
            }
        }
        if let Some(row) = labels.iter().position(|&l| l > 1) {
            return Err(Error::LabelNotBinary {
                row,
                value: labels[row].to_string(),
            });
        }
        if let Some(pos) = features.data.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos / features.n_cols(), pos % features.n_cols());
            return Err(Error::Cell {
                row,
                column: feature_names[col].clone(),
                message: "non-finite value".into(),
            });
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            provenance: provenance.into(),
        })
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn positive_fraction(&self) -> f64 {
        self.n_positive() as f64 / self.n_samples() as f64
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.n_positive();
        pos > 0 && pos < self.n_samples()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Rows in the given order; duplicates allowed (bootstrap resamples).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            feature_names: self.feature_names.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn select_features(&self, cols: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_columns(cols),
            labels: self.labels.clone(),
            feature_names: cols
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    fn with_provenance(mut self, suffix: String) -> Dataset {
        self.provenance = format!("{}|{}", self.provenance, suffix);
        self
    }
}

/// Number of positives a stratified subsample of size `k` receives.
///
/// `round(k * positive_fraction)`, clamped so that both classes keep at
/// least one row and neither class is asked for more rows than it has.
pub fn stratified_allocation(n_pos: usize, n_neg: usize, k: usize) -> Result<usize> {
    let n = n_pos + n_neg;
    if k < 2 || k > n {
        return Err(Error::invalid(format!(
            "subsample size {k} outside [2, {n}]"
        )));
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::ClassExhaustion(format!(
            "subsample of {k} rows: source has {n_pos} positives and {n_neg} negatives"
        )));
    }
    let ideal = (k as f64 * n_pos as f64 / n as f64).round() as usize;
    let lo = 1.max(k.saturating_sub(n_neg));
    let hi = (k - 1).min(n_pos);
    Ok(ideal.clamp(lo, hi))
}

/// Draws `k` rows without replacement, preserving class proportions.
///
/// Selected rows keep their original relative order.
pub fn stratified_subsample(d: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) =
        (0..d.n_samples()).partition(|&i| d.labels[i] == 1);
    let take_pos = stratified_allocation(pos.len(), neg.len(), k)?;
    let mut rng = rng_for(seed, "stratified-subsample", k as u64);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut rows: Vec<usize> = pos[..take_pos]
        .iter()
        .chain(&neg[..k - take_pos])
        .copied()
        .collect();
    rows.sort_unstable();
    Ok(d.select_rows(&rows)
        .with_provenance(format!("subsample(k={k},seed={seed})")))
}

/// Removes the named columns, keeping the order of the rest.
pub fn drop_features(d: &Dataset, names: &[String]) -> Result<Dataset> {
    let mut drop = HashSet::with_capacity(names.len());
    for name in names {
        if d.feature_index(name).is_none() {
            return Err(Error::UnknownFeature(name.clone()));
        }
        drop.insert(name.as_str());
    }
    let keep: Vec<usize> = (0..d.n_features())
        .filter(|&c| !drop.contains(d.feature_names[c].as_str()))
        .collect();
    if keep.is_empty() {
        return Err(Error::invalid("cannot drop every feature"));
    }
    if names.is_empty() {
        return Ok(d.clone());
    }
    Ok(d.select_features(&keep)
        .with_provenance(format!("drop({})", names.join(","))))
}
