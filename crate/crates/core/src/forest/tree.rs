use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// `(w_node * gini_node - w_left * gini_left - w_right * gini_right) / w_total`
        impurity_decrease: f64,
        n_samples: u32,
        left: u32,
        right: u32,
    },
    Leaf {
        negatives: u32,
        positives: u32,
    },
}

/// One CART tree. Sample counts are bootstrap multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub n_bootstrap: u32,
    /// Training rows that the tree's bootstrap never drew.
    pub oob_rows: Vec<u32>,
}

impl Tree {
    pub fn leaf_fraction(&self, row: &[f64]) -> f64 {
        let mut id = 0usize;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if row[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                Node::Leaf {
                    negatives,
                    positives,
                } => {
                    return f64::from(*positives) / f64::from(positives + negatives);
                }
            }
        }
    }
}

/// `w * gini` for a two-class node with `pos` positives out of weight `w`.
#[inline]
fn weighted_gini(w: f64, pos: f64) -> f64 {
    if w <= 0.0 {
        0.0
    } else {
        2.0 * pos * (w - pos) / w
    }
}

pub(crate) struct TreeGrower<'a> {
    pub columns: &'a [Vec<f64>],
    pub labels: &'a [u8],
    pub mtry: usize,
    pub min_samples_leaf: u32,
    pub max_depth: Option<usize>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl TreeGrower<'_> {
    pub fn grow<R: Rng>(&self, rng: &mut R) -> Tree {
        let n = self.labels.len();
        let mut weights = vec![0u32; n];
        for _ in 0..n {
            weights[rng.random_range(0..n)] += 1;
        }
        let oob_rows = (0..n as u32)
            .filter(|&r| weights[r as usize] == 0)
            .collect();
        let mut rows: Vec<usize> = (0..n).filter(|&r| weights[r] > 0).collect();
        let total = n as f64;
        let n_features = self.columns.len();

        let mut nodes: Vec<Node> = vec![Node::Leaf {
            negatives: 0,
            positives: 0,
        }];
        let mut scratch: Vec<(f64, u32, u32)> = Vec::with_capacity(rows.len());
        // (node id, start, end, depth)
        let mut stack = vec![(0usize, 0usize, rows.len(), 0usize)];
        while let Some((id, start, end, depth)) = stack.pop() {
            let slice = &rows[start..end];
            let (w, pos) = slice.iter().fold((0u32, 0u32), |(w, p), &r| {
                (w + weights[r], p + weights[r] * u32::from(self.labels[r]))
            });
            let leaf = Node::Leaf {
                negatives: w - pos,
                positives: pos,
            };
            let depth_capped = self.max_depth.is_some_and(|d| depth >= d);
            if pos == 0 || pos == w || w < 2 * self.min_samples_leaf || depth_capped {
                nodes[id] = leaf;
                continue;
            }

            // scan order is a fresh random permutation per node
            let mut features = index::sample(rng, n_features, self.mtry.min(n_features)).into_vec();
            features.shuffle(rng);
            let parent = weighted_gini(f64::from(w), f64::from(pos));
            let mut best: Option<Candidate> = None;
            for &f in &features {
                let col = &self.columns[f];
                scratch.clear();
                scratch.extend(
                    slice
                        .iter()
                        .map(|&r| (col[r], weights[r], weights[r] * u32::from(self.labels[r]))),
                );
                scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                let (mut wl, mut pl) = (0u32, 0u32);
                for i in 0..scratch.len() - 1 {
                    wl += scratch[i].1;
                    pl += scratch[i].2;
                    let (v, next) = (scratch[i].0, scratch[i + 1].0);
                    if v == next {
                        continue;
                    }
                    let wr = w - wl;
                    if wl < self.min_samples_leaf || wr < self.min_samples_leaf {
                        continue;
                    }
                    let children = weighted_gini(f64::from(wl), f64::from(pl))
                        + weighted_gini(f64::from(wr), f64::from(pos - pl));
                    let gain = parent - children;
                    // strict comparison keeps the first scanned feature, then lowest threshold, on ties
                    if best.as_ref().is_none_or(|b| gain > b.gain) {
                        let mut threshold = 0.5 * (v + next);
                        if threshold >= next {
                            threshold = v;
                        }
                        best = Some(Candidate {
                            feature: f,
                            threshold,
                            gain,
                        });
                    }
                }
            }

            let Some(split) = best else {
                nodes[id] = leaf;
                continue;
            };
            let col = &self.columns[split.feature];
            let mut mid = start;
            for i in start..end {
                if col[rows[i]] <= split.threshold {
                    rows.swap(i, mid);
                    mid += 1;
                }
            }
            let left = nodes.len();
            nodes.push(Node::Leaf {
                negatives: 0,
                positives: 0,
            });
            nodes.push(Node::Leaf {
                negatives: 0,
                positives: 0,
            });
            nodes[id] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                impurity_decrease: split.gain.max(0.0) / total,
                n_samples: w,
                left: left as u32,
                right: left as u32 + 1,
            };
            stack.push((left + 1, mid, end, depth + 1));
            stack.push((left, start, mid, depth + 1));
        }
        Tree {
            nodes,
            n_bootstrap: n as u32,
            oob_rows,
        }
    }
}
