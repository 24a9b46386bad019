//! ROC-AUC, importance rankings and ranking-stability indexes.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mann-Whitney AUC: the probability that a random positive outscores a
/// random negative, ties counting one half.
pub fn auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based midrank of the tie block i..=j
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_block = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum_pos += midrank * pos_in_block as f64;
        i = j + 1;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    let u = rank_sum_pos - np * (np + 1.0) / 2.0;
    Ok(u / (np * nn))
}

/// Ranks with 1 for the largest value; equal values are ordered by index.
pub fn rank_from_importance(importance: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..importance.len()).collect();
    // stable sort keeps lower index first among equal values
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]));
    let mut ranks = vec![0; importance.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

/// A ranking of named features, `1` being most important.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVector {
    pub names: Vec<String>,
    pub ranks: Vec<usize>,
    pub source: String,
}

impl RankVector {
    pub fn new(names: Vec<String>, ranks: Vec<usize>, source: impl Into<String>) -> Result<Self> {
        if names.len() != ranks.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: ranks.len(),
            });
        }
        let mut seen = vec![false; ranks.len()];
        for &r in &ranks {
            if r == 0 || r > ranks.len() || std::mem::replace(&mut seen[r - 1], true) {
                return Err(Error::invalid(format!(
                    "ranks are not a permutation of 1..={}",
                    ranks.len()
                )));
            }
        }
        let mut names_seen = std::collections::HashSet::new();
        if !names.iter().all(|n| names_seen.insert(n)) {
            return Err(Error::invalid("duplicate feature names in rank vector"));
        }
        Ok(RankVector {
            names,
            ranks,
            source: source.into(),
        })
    }

    pub fn from_importance(
        names: &[String],
        importance: &[f64],
        source: impl Into<String>,
    ) -> Result<Self> {
        if importance.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite importance"));
        }
        RankVector::new(names.to_vec(), rank_from_importance(importance), source)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.ranks[i])
    }

    /// Names ordered from rank 1 downwards.
    pub fn ordered_names(&self) -> Vec<&str> {
        let mut pairs: Vec<(usize, &str)> = self
            .ranks
            .iter()
            .zip(&self.names)
            .map(|(&r, n)| (r, n.as_str()))
            .collect();
        pairs.sort_unstable();
        pairs.into_iter().map(|(_, n)| n).collect()
    }
}

/// Restricts a ranking to `surviving` names and recompresses ranks to
/// `1..=surviving.len()`. Names keep the reference's order.
pub fn project_reference_rank(reference: &RankVector, surviving: &[String]) -> Result<RankVector> {
    if surviving.is_empty() {
        return Err(Error::invalid("no surviving features to project onto"));
    }
    for name in surviving {
        if reference.rank_of(name).is_none() {
            return Err(Error::UnknownFeature(name.clone()));
        }
    }
    let keep: Vec<usize> = (0..reference.len())
        .filter(|&i| surviving.contains(&reference.names[i]))
        .collect();
    let mut by_rank = keep.clone();
    by_rank.sort_unstable_by_key(|&i| reference.ranks[i]);
    let mut new_rank = HashMap::with_capacity(keep.len());
    for (pos, &i) in by_rank.iter().enumerate() {
        new_rank.insert(i, pos + 1);
    }
    RankVector::new(
        keep.iter().map(|&i| reference.names[i].clone()).collect(),
        keep.iter().map(|i| new_rank[i]).collect(),
        format!("{}|projected", reference.source),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityIndex {
    RankDifference,
    Srcc,
    Canberra,
    BrayCurtis,
}

impl StabilityIndex {
    pub const ALL: [StabilityIndex; 4] = [
        StabilityIndex::RankDifference,
        StabilityIndex::Srcc,
        StabilityIndex::Canberra,
        StabilityIndex::BrayCurtis,
    ];

    /// `true` for SRCC; the three distances are more stable when lower.
    pub fn higher_is_stable(self) -> bool {
        matches!(self, StabilityIndex::Srcc)
    }

    pub fn name(self) -> &'static str {
        match self {
            StabilityIndex::RankDifference => "rank_difference",
            StabilityIndex::Srcc => "srcc",
            StabilityIndex::Canberra => "canberra",
            StabilityIndex::BrayCurtis => "bray_curtis",
        }
    }
}

impl fmt::Display for StabilityIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityIndexes {
    pub rank_difference: f64,
    pub srcc: f64,
    pub canberra: f64,
    pub bray_curtis: f64,
}

impl StabilityIndexes {
    pub const IDENTITY: StabilityIndexes = StabilityIndexes {
        rank_difference: 0.0,
        srcc: 1.0,
        canberra: 0.0,
        bray_curtis: 0.0,
    };

    pub fn get(&self, index: StabilityIndex) -> f64 {
        match index {
            StabilityIndex::RankDifference => self.rank_difference,
            StabilityIndex::Srcc => self.srcc,
            StabilityIndex::Canberra => self.canberra,
            StabilityIndex::BrayCurtis => self.bray_curtis,
        }
    }
}

/// Compares two rankings over the same names (matched by name, not position).
///
/// With `r` the reference and `s` the new ranks over `n` features:
/// rank difference `mean |r - s|`, SRCC `1 - 6 sum (r - s)^2 / (n (n^2 - 1))`
/// (1 when `n = 1`), Canberra `sum |r - s| / (r + s)` and Bray-Curtis
/// `sum |r - s| / sum (r + s)`.
pub fn stability_indexes(reference: &RankVector, new: &RankVector) -> Result<StabilityIndexes> {
    if reference.len() != new.len() {
        return Err(Error::invalid(format!(
            "rank vectors cover {} and {} features",
            reference.len(),
            new.len()
        )));
    }
    let lookup: HashMap<&str, usize> = new
        .names
        .iter()
        .map(String::as_str)
        .zip(new.ranks.iter().copied())
        .collect();
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut canberra = 0.0;
    let mut total = 0.0;
    for (name, &r) in reference.names.iter().zip(&reference.ranks) {
        let s = *lookup
            .get(name.as_str())
            .ok_or_else(|| Error::UnknownFeature(name.clone()))?;
        let (r, s) = (r as f64, s as f64);
        let d = (r - s).abs();
        abs_sum += d;
        sq_sum += d * d;
        canberra += d / (r + s);
        total += r + s;
    }
    let n = reference.len() as f64;
    let srcc = if reference.len() < 2 {
        1.0
    } else {
        1.0 - 6.0 * sq_sum / (n * (n * n - 1.0))
    };
    Ok(StabilityIndexes {
        rank_difference: abs_sum / n,
        srcc,
        canberra,
        bray_curtis: abs_sum / total,
    })
}

/// Spearman correlation between two rank permutations of equal length.
pub fn spearman_of_ranks(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    if a.len() < 2 {
        return 1.0;
    }
    let sq: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum();
    1.0 - 6.0 * sq / (n * (n * n - 1.0))
}
