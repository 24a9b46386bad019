use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

/// Symmetric matrix of Pearson coefficients between feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

pub fn correlation_matrix(d: &Dataset) -> Result<CorrelationMatrix> {
    let n = d.n_samples() as f64;
    let p = d.n_features();
    let mut centered = Vec::with_capacity(p);
    let mut norms = Vec::with_capacity(p);
    for (c, name) in d.feature_names().iter().enumerate() {
        let col = d.features().column(c);
        let mean = col.iter().sum::<f64>() / n;
        let dev: Vec<f64> = col.iter().map(|v| v - mean).collect();
        let ss: f64 = dev.iter().map(|v| v * v).sum();
        if ss == 0.0 {
            return Err(Error::ZeroVariance(name.clone()));
        }
        norms.push(ss.sqrt());
        centered.push(dev);
    }
    let mut values = vec![vec![0.0; p]; p];
    for i in 0..p {
        values[i][i] = 1.0;
        for j in i + 1..p {
            let dot: f64 = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(a, b)| a * b)
                .sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: d.feature_names().to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneEntry {
    pub kept: String,
    pub removed: String,
    /// Absolute correlation of the removed pair.
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneLog {
    pub cut_standard: f64,
    pub entries: Vec<PruneEntry>,
    /// Set when pruning left a single feature.
    pub too_few_features: bool,
}

/// Greedy removal over a precomputed matrix; returns surviving column indices
/// and `(kept, removed, |r|)` triples.
pub(crate) fn greedy_prune(
    corr: &[Vec<f64>],
    importance: &[f64],
    cut_standard: f64,
) -> (Vec<usize>, Vec<(usize, usize, f64)>) {
    let p = corr.len();
    let mut alive = vec![true; p];
    let mut log = Vec::new();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..p {
            if !alive[i] {
                continue;
            }
            for j in i + 1..p {
                if !alive[j] {
                    continue;
                }
                let r = corr[i][j].abs();
                if best.is_none_or(|(_, _, b)| r > b) {
                    best = Some((i, j, r));
                }
            }
        }
        match best {
            Some((i, j, r)) if r > cut_standard => {
                // lower importance goes; on a tie the later column goes
                let (kept, removed) = if importance[i] < importance[j] {
                    (j, i)
                } else {
                    (i, j)
                };
                alive[removed] = false;
                log.push((kept, removed, r));
            }
            _ => break,
        }
    }
    ((0..p).filter(|&c| alive[c]).collect(), log)
}

/// Repeatedly removes the weaker member of the most correlated surviving pair
/// while that pair's `|r|` exceeds `cut_standard`.
pub fn prune_correlated(
    d: &Dataset,
    importance: &[f64],
    cut_standard: f64,
) -> Result<(Dataset, PruneLog)> {
    if importance.len() != d.n_features() {
        return Err(Error::DimensionMismatch {
            expected: d.n_features(),
            got: importance.len(),
        });
    }
    if !(cut_standard > 0.0 && cut_standard <= 1.0) {
        return Err(Error::invalid(format!(
            "cut standard {cut_standard} outside (0, 1]"
        )));
    }
    let corr = correlation_matrix(d)?;
    let (keep, removed) = greedy_prune(&corr.values, importance, cut_standard);
    let names = d.feature_names();
    let entries = removed
        .into_iter()
        .map(|(k, r, c)| PruneEntry {
            kept: names[k].clone(),
            removed: names[r].clone(),
            correlation: c,
        })
        .collect::<Vec<_>>();
    let too_few_features = keep.len() < 2;
    if too_few_features {
        log::warn!(
            "correlation cut {cut_standard} leaves {} feature(s)",
            keep.len()
        );
    }
    let pruned = if entries.is_empty() {
        d.clone()
    } else {
        let mut out = d.select_features(&keep);
        out.provenance = format!("{}|prune(cut={cut_standard})", d.provenance());
        out
    };
    Ok((
        pruned,
        PruneLog {
            cut_standard,
            entries,
            too_few_features,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureMatrix;
    use proptest::prelude::*;

    fn from_columns(cols: &[Vec<f64>]) -> Dataset {
        let n = cols[0].len();
        let mut data = Vec::new();
        for r in 0..n {
            data.extend(cols.iter().map(|c| c[r]));
        }
        let names = (0..cols.len()).map(|i| format!("c{i}")).collect();
        let labels = (0..n).map(|i| (i % 2) as u8).collect();
        Dataset::new(
            FeatureMatrix::new(n, cols.len(), data).unwrap(),
            labels,
            names,
            "t",
        )
        .unwrap()
    }

    #[test]
    fn duplicate_and_negation() {
        let x = vec![0.3, 1.0, 2.5, 4.0, 4.1];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let m = correlation_matrix(&from_columns(&[x.clone(), x, neg])).unwrap();
        assert!((m.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((m.get(0, 2) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_pearson() {
        // centred dot 3, sums of squares 2 and 42/9: r = 3 / sqrt(2 * 42 / 9)
        let m =
            correlation_matrix(&from_columns(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 4.0]])).unwrap();
        assert!((m.get(0, 1) - 0.981_980_506_061_965_7).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_named() {
        let err = correlation_matrix(&from_columns(&[vec![1.0, 2.0], vec![3.0, 3.0]])).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(ref n) if n == "c1"));
    }

    #[test]
    fn cut_one_keeps_everything() {
        let d = from_columns(&[vec![1.0, 2.0, 3.0, 5.0], vec![2.0, 1.0, 4.0, 3.0]]);
        let (out, log) = prune_correlated(&d, &[0.5, 0.5], 1.0).unwrap();
        assert_eq!(out, d);
        assert!(log.entries.is_empty());
    }

    #[test]
    fn weaker_duplicate_removed() {
        let x = vec![1.0, 2.0, 3.0, 5.0];
        let d = from_columns(&[x.clone(), x]);
        let (out, log) = prune_correlated(&d, &[0.6, 0.4], 0.9).unwrap();
        assert_eq!(out.feature_names(), ["c0"]);
        assert_eq!(log.entries[0].removed, "c1");
        assert!(log.too_few_features);
    }

    #[test]
    fn greedy_trace() {
        // |r|: AB .95, BC .92, AC .10; importance A > B > C
        let corr = vec![
            vec![1.0, 0.95, 0.10],
            vec![0.95, 1.0, 0.92],
            vec![0.10, 0.92, 1.0],
        ];
        let (keep, log) = greedy_prune(&corr, &[0.5, 0.3, 0.2], 0.9);
        assert_eq!(keep, vec![0, 2]);
        assert_eq!(log, vec![(0, 1, 0.95)]);
    }

    #[test]
    fn importance_tie_removes_later_column() {
        let corr = vec![vec![1.0, 0.99], vec![0.99, 1.0]];
        let (keep, _) = greedy_prune(&corr, &[0.5, 0.5], 0.9);
        assert_eq!(keep, vec![0]);
    }

    proptest! {
        #[test]
        fn no_surviving_pair_exceeds_cut(
            rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 5), 8..30),
            cut in 0.2f64..1.0,
            mix in 0.0f64..1.0,
        ) {
            // inject a correlated copy to make pruning happen
            let rows: Vec<Vec<f64>> = rows
                .into_iter()
                .map(|mut r| { let c = r[0] * mix + r[1] * (1.0 - mix); r.push(c); r })
                .collect();
            let n = rows.len();
            let labels = (0..n).map(|i| (i % 2) as u8).collect();
            let names = (0..6).map(|i| format!("c{i}")).collect();
            let d = Dataset::new(FeatureMatrix::from_rows(&rows).unwrap(), labels, names, "p").unwrap();
            let Ok(full) = correlation_matrix(&d) else { return Ok(()); };
            for i in 0..6 {
                prop_assert_eq!(full.get(i, i), 1.0);
                for j in 0..6 { prop_assert_eq!(full.get(i, j), full.get(j, i)); }
            }
            let importance = [0.3, 0.1, 0.2, 0.15, 0.05, 0.2];
            let (out, log) = prune_correlated(&d, &importance, cut).unwrap();
            let m = correlation_matrix(&out).unwrap();
            for i in 0..m.len() {
                for j in i + 1..m.len() {
                    prop_assert!(m.get(i, j).abs() <= cut);
                }
            }
            let mut removed: Vec<_> = log.entries.iter().map(|e| e.removed.clone()).collect();
            removed.sort();
            removed.dedup();
            prop_assert_eq!(removed.len(), log.entries.len());
            prop_assert!(log.entries.iter().all(|e| e.correlation >= cut));
        }
    }
}
