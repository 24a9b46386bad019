//! Binary-feature population model: when does a sample of `k` rows contain the
//! evidence needed to order two features' importance?
//!
//! Each of `M` rows has `N` Bernoulli(1/2) features and `y = sum a_n x_n` with
//! `a_n` proportional to `n`. Rows whose remaining sum lies in the window
//! `(mu - a_j, mu - a_i)` decide the label through `x_i` and `x_j` alone; the
//! pair is distinguishable once the sample holds window rows showing both the
//! `(1, 0)` and `(0, 1)` patterns.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::dataset::{linear_coefficients, FeatureMatrix};
use crate::seed::rng_for;
use crate::{Dataset, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    /// Population size `M`.
    pub population: u64,
    /// Feature count `N`.
    pub n_features: usize,
    /// Training-sample budget `k`.
    pub k: u64,
    pub mu: f64,
    /// 1-based index of the less important feature of the pair.
    pub i: usize,
    /// 1-based index of the more important feature.
    pub j: usize,
    /// Keep the `1 - a_i - a_j` denominator when sizing the window.
    #[serde(default)]
    pub exact_denominator: bool,
}

impl TheoryParams {
    pub fn new(
        population: u64,
        n_features: usize,
        k: u64,
        mu: f64,
        i: usize,
        j: usize,
    ) -> Result<Self> {
        let t = TheoryParams {
            population,
            n_features,
            k,
            mu,
            i,
            j,
            exact_denominator: false,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features < 2 {
            return Err(Error::invalid("need at least two features"));
        }
        if !(2 <= self.k && self.k <= self.population) {
            return Err(Error::invalid(format!(
                "k = {} outside [2, M = {}]",
                self.k, self.population
            )));
        }
        if !(1 <= self.i && self.i < self.j && self.j <= self.n_features) {
            return Err(Error::invalid(format!(
                "feature pair ({}, {}) must satisfy 1 <= i < j <= {}",
                self.i, self.j, self.n_features
            )));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::invalid(format!("mu {} outside (0, 1)", self.mu)));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Vec<f64> {
        linear_coefficients(self.n_features)
    }

    pub fn a_i(&self) -> f64 {
        self.coefficients()[self.i - 1]
    }

    pub fn a_j(&self) -> f64 {
        self.coefficients()[self.j - 1]
    }

    /// `a_j - a_i`.
    pub fn gap(&self) -> f64 {
        let a = self.coefficients();
        a[self.j - 1] - a[self.i - 1]
    }

    /// Number of population rows in the window, `W = round(M * gap)`, or
    /// `round(M * gap / (1 - a_i - a_j))` in exact-denominator mode.
    pub fn window_count(&self) -> Result<u64> {
        let a = self.coefficients();
        let (ai, aj) = (a[self.i - 1], a[self.j - 1]);
        let mut share = aj - ai;
        if self.exact_denominator {
            share /= 1.0 - ai - aj;
        }
        window_rows(self.population, share)
    }
}

fn window_rows(population: u64, share: f64) -> Result<u64> {
    if !share.is_finite() || share < 0.0 {
        return Err(Error::invalid(format!(
            "window share {share} is not a nonnegative number"
        )));
    }
    let w = (population as f64 * share).round();
    if w > population as f64 {
        return Err(Error::GapInconsistent {
            window: w as u64,
            population,
        });
    }
    Ok(w as u64)
}

/// Probability that `d` window rows, each showing one of the four `(x_i, x_j)`
/// patterns uniformly, include both `(1, 0)` and `(0, 1)`:
/// `1 - (2 (3/4)^d - (1/2)^d)`.
pub fn g_d(d: u64) -> f64 {
    let d = d.min(i32::MAX as u64) as i32;
    (1.0 - (2.0 * 0.75f64.powi(d) - 0.5f64.powi(d))).clamp(0.0, 1.0)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn hypergeometric_weighted(m: u64, w: u64, k: u64, upper: u64) -> Result<f64> {
    if w > m {
        return Err(Error::GapInconsistent {
            window: w,
            population: m,
        });
    }
    if k > m {
        return Err(Error::invalid(format!("k = {k} exceeds population {m}")));
    }
    let denom = ln_choose(m, k);
    // C(M - W, k - d) vanishes unless k - d <= M - W
    let lower = 2.max(k.saturating_sub(m - w));
    let mut terms = Vec::new();
    for d in lower..=upper {
        if d > w || d > k {
            continue;
        }
        let g = g_d(d);
        if g == 0.0 {
            continue;
        }
        terms.push(g.ln() + ln_choose(m - w, k - d) + ln_choose(w, d) - denom);
    }
    if terms.is_empty() {
        return Ok(0.0);
    }
    Ok(log_sum_exp(&terms).exp().clamp(0.0, 1.0))
}

/// `p = sum_{d=2}^{min(W,k)} g_d C(M-W, k-d) C(W, d) / C(M, k)`, evaluated in
/// log space.
pub fn essential_probability(population: u64, window: u64, k: u64) -> Result<f64> {
    hypergeometric_weighted(population, window, k, window.min(k))
}

/// The same sum with the upper limit fixed at `k`, the large-population form.
/// Terms with `d > W` vanish, so it coincides with [`essential_probability`].
pub fn essential_probability_upper_k(population: u64, window: u64, k: u64) -> Result<f64> {
    hypergeometric_weighted(population, window, k, k)
}

pub fn essential_sample_probability(t: &TheoryParams) -> Result<f64> {
    t.validate()?;
    essential_probability(t.population, t.window_count()?, t.k)
}

/// `p` over a grid; `values[g][c]` belongs to `gaps[g]` and `k_values[c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitySurface {
    pub population: u64,
    pub k_values: Vec<u64>,
    pub gaps: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl ProbabilitySurface {
    /// Long-form `(k, gap, p)` rows.
    pub fn rows(&self) -> Vec<(u64, f64, f64)> {
        let mut out = Vec::with_capacity(self.k_values.len() * self.gaps.len());
        for (g, gap) in self.gaps.iter().enumerate() {
            for (c, &k) in self.k_values.iter().enumerate() {
                out.push((k, *gap, self.values[g][c]));
            }
        }
        out
    }
}

pub fn probability_surface(
    population: u64,
    k_values: &[u64],
    gaps: &[f64],
) -> Result<ProbabilitySurface> {
    if k_values.is_empty() || gaps.is_empty() {
        return Err(Error::invalid(
            "probability surface needs k values and gaps",
        ));
    }
    if !k_values.windows(2).all(|w| w[0] < w[1]) || !gaps.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid(
            "k values and gaps must be strictly ascending",
        ));
    }
    let values = gaps
        .par_iter()
        .map(|&gap| {
            let w = window_rows(population, gap)?;
            k_values
                .iter()
                .map(|&k| essential_probability(population, w, k))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbabilitySurface {
        population,
        k_values: k_values.to_vec(),
        gaps: gaps.to_vec(),
        values,
    })
}

/// Gaussian approximation of `Y`: mean `1/2`, variance `1 / (3N)`.
pub fn y_distribution_params(n_features: usize) -> (f64, f64) {
    (0.5, 1.0 / (3.0 * n_features.max(1) as f64))
}

/// Approximate probability that `Y` falls in `(mu - a_j, mu - a_i)`.
pub fn window_probability(mu: f64, a_i: f64, a_j: f64, n_features: usize) -> f64 {
    let (mean, var) = y_distribution_params(n_features);
    let normal = Normal::new(mean, var.sqrt()).expect("positive variance");
    let (lo, hi) = (mu - a_i.max(a_j), mu - a_i.min(a_j));
    (normal.cdf(hi) - normal.cdf(lo)).clamp(0.0, 1.0)
}

/// Window probability for each adjacent pair `(n, n + 1)` of the linear
/// coefficients; entry `n - 1` belongs to the pair starting at feature `n`.
pub fn adjacent_window_probabilities(mu: f64, n_features: usize) -> Vec<f64> {
    let a = linear_coefficients(n_features);
    a.windows(2)
        .map(|w| window_probability(mu, w[0], w[1], n_features))
        .collect()
}

/// Draws the `M x N` binary population with labels `y > mu`.
pub fn generate_population(t: &TheoryParams, seed: u64) -> Result<Dataset> {
    population_dataset(t.population as usize, t.n_features, t.mu, seed)
}

pub(crate) fn population_dataset(m: usize, n: usize, mu: f64, seed: u64) -> Result<Dataset> {
    let a = linear_coefficients(n);
    let mut rng = rng_for(seed, "population", 0);
    let mut data = Vec::with_capacity(m * n);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let mut y = 0.0;
        for coef in &a {
            let x = f64::from(u8::from(rng.random::<bool>()));
            y += coef * x;
            data.push(x);
        }
        labels.push(u8::from(y > mu));
    }
    Dataset::new(
        FeatureMatrix::new(m, n, data)?,
        labels,
        (1..=n).map(|i| format!("x{i}")).collect(),
        format!("population(M={m},N={n},mu={mu},seed={seed})"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub successes: u64,
}

pub const MIN_TRIALS: u64 = 1000;
const TRIAL_CHUNK: u64 = 1000;

/// Simulates the window-and-pattern model directly.
///
/// Each trial labels `W` rows as window rows, gives every window row one of
/// the four `(x_i, x_j)` patterns uniformly, draws `k` rows without
/// replacement and succeeds when the drawn window rows show both `(1, 0)` and
/// `(0, 1)`.
pub fn monte_carlo_pattern(t: &TheoryParams, trials: u64, seed: u64) -> Result<MonteCarloEstimate> {
    t.validate()?;
    monte_carlo_window(t.population, t.window_count()?, t.k, trials, seed)
}

pub fn monte_carlo_window(
    population: u64,
    window: u64,
    k: u64,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if trials < MIN_TRIALS {
        return Err(Error::InsufficientData {
            needed: MIN_TRIALS as usize,
            got: trials as usize,
        });
    }
    if window > population {
        return Err(Error::GapInconsistent { window, population });
    }
    if k > population {
        return Err(Error::invalid(format!(
            "k = {k} exceeds population {population}"
        )));
    }
    let (m, w, k) = (population as usize, window as usize, k as usize);
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_for(seed, "monte-carlo-pattern", c);
            let n = TRIAL_CHUNK.min(trials - c * TRIAL_CHUNK);
            let mut patterns = vec![0u8; w];
            let mut hits = 0u64;
            for _ in 0..n {
                if w < 2 {
                    continue;
                }
                for p in patterns.iter_mut() {
                    *p = rng.random_range(0..4);
                }
                let (mut one_zero, mut zero_one) = (false, false);
                for row in index::sample(&mut rng, m, k) {
                    if row < w {
                        // pattern bits: (x_i, x_j) = (p >> 1, p & 1)
                        match patterns[row] {
                            0b10 => one_zero = true,
                            0b01 => zero_one = true,
                            _ => {}
                        }
                    }
                }
                hits += u64::from(one_zero && zero_one);
            }
            hits
        })
        .sum();
    let estimate = successes as f64 / trials as f64;
    Ok(MonteCarloEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        trials,
        successes,
    })
}
