use serde::{Deserialize, Serialize};

use super::schedule::run_data_cutting_from;
use super::{
    bootstrap_experiment, run_feature_cutting, Algorithm, DegradationTrace, ExperimentConfig,
    TraceStep,
};
use crate::dataset::{prune_correlated, stratified_subsample, Dataset, PruneLog};
use crate::metrics::{StabilityIndex, StabilityIndexes};
use crate::seed::derive_seed;
use crate::stats::{
    algorithm_comparison, correlation_effect, ComparisonPoint, RegressionResult, ALGORITHM_TERM,
};
use crate::{Error, Result};

fn trim_against(t: &DegradationTrace, lo: f64, hi: f64) -> DegradationTrace {
    let auc = |s: &TraceStep| s.result.mean_auc;
    // closest step outside each end of the other trace's span
    let below = t
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| auc(s) < lo)
        .max_by(|a, b| auc(a.1).total_cmp(&auc(b.1)).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i);
    let above = t
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| auc(s) > hi)
        .min_by(|a, b| auc(a.1).total_cmp(&auc(b.1)).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    let steps = t
        .steps
        .iter()
        .enumerate()
        .filter(|(i, s)| (lo..=hi).contains(&auc(s)) || Some(*i) == below || Some(*i) == above)
        .map(|(_, s)| s.clone())
        .collect();
    DegradationTrace { steps, ..t.clone() }
}

/// Restricts each trace to the other's AUC span plus at most one step beyond
/// each end.
pub fn trim_traces(
    a: &DegradationTrace,
    b: &DegradationTrace,
) -> Result<(DegradationTrace, DegradationTrace)> {
    let (Some((a_lo, a_hi)), Some((b_lo, b_hi))) = (a.auc_range(), b.auc_range()) else {
        return Err(Error::invalid("cannot trim an empty trace"));
    };
    if a_hi < b_lo || b_hi < a_lo {
        return Err(Error::NoOverlap);
    }
    Ok((trim_against(a, b_lo, b_hi), trim_against(b, a_lo, a_hi)))
}

/// Sorted `(auc, value)` knots, averaging values that share an AUC.
fn knots(t: &DegradationTrace, index: StabilityIndex) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = t
        .steps
        .iter()
        .map(|s| (s.result.mean_auc, s.indexes.get(index)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for (x, y) in pts {
        match out.last_mut() {
            Some(last) if last.0 == x => {
                last.1 += y;
                last.2 += 1;
            }
            _ => out.push((x, y, 1)),
        }
    }
    out.into_iter().map(|(x, y, n)| (x, y / n as f64)).collect()
}

fn interpolate(knots: &[(f64, f64)], x: f64) -> Option<f64> {
    let (first, last) = (knots.first()?, knots.last()?);
    if x < first.0 || x > last.0 {
        return None;
    }
    if knots.len() == 1 {
        return Some(first.1);
    }
    let k = knots.partition_point(|p| p.0 < x).clamp(1, knots.len() - 1);
    let (x0, y0) = knots[k - 1];
    let (x1, y1) = knots[k];
    if x1 == x0 {
        return Some(y0);
    }
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferencePoint {
    pub auc: f64,
    /// Feature-cut value minus data-cut value, per index.
    pub difference: StabilityIndexes,
}

fn split_algorithms<'a>(
    a: &'a DegradationTrace,
    b: &'a DegradationTrace,
) -> Result<(&'a DegradationTrace, &'a DegradationTrace)> {
    match (a.algorithm, b.algorithm) {
        (Algorithm::DataCut, Algorithm::FeatureCut) => Ok((a, b)),
        (Algorithm::FeatureCut, Algorithm::DataCut) => Ok((b, a)),
        _ => Err(Error::invalid(
            "expected one data-cut and one feature-cut trace",
        )),
    }
}

/// Piecewise-linear interpolation of every stability index over mean AUC,
/// differenced as feature cutting minus data cutting at each grid point.
pub fn interpolated_difference(
    a: &DegradationTrace,
    b: &DegradationTrace,
    grid: &[f64],
) -> Result<Vec<DifferencePoint>> {
    let (data, feature) = split_algorithms(a, b)?;
    grid.iter()
        .map(|&x| {
            let mut vals = [0.0; 4];
            for (slot, index) in vals.iter_mut().zip(StabilityIndex::ALL) {
                let f = interpolate(&knots(feature, index), x);
                let d = interpolate(&knots(data, index), x);
                match (f, d) {
                    (Some(f), Some(d)) => *slot = f - d,
                    _ => {
                        return Err(Error::invalid(format!(
                            "AUC {x} lies outside the overlap of the two traces"
                        )))
                    }
                }
            }
            Ok(DifferencePoint {
                auc: x,
                difference: StabilityIndexes {
                    rank_difference: vals[0],
                    srcc: vals[1],
                    canberra: vals[2],
                    bray_curtis: vals[3],
                },
            })
        })
        .collect()
}

/// `points` evenly spaced AUC values spanning the overlap of two traces.
pub fn overlap_grid(a: &DegradationTrace, b: &DegradationTrace, points: usize) -> Result<Vec<f64>> {
    let ((a_lo, a_hi), (b_lo, b_hi)) = a
        .auc_range()
        .zip(b.auc_range())
        .ok_or_else(|| Error::invalid("empty trace"))?;
    let (lo, hi) = (a_lo.max(b_lo), a_hi.min(b_hi));
    if lo > hi {
        return Err(Error::NoOverlap);
    }
    if points < 2 || lo == hi {
        return Ok(vec![lo]);
    }
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            }
        })
        .collect())
}

/// Trims the pair and regresses each stability index on AUC and algorithm.
pub fn compare_traces(
    a: &DegradationTrace,
    b: &DegradationTrace,
) -> Result<Vec<(StabilityIndex, RegressionResult)>> {
    let (ta, tb) = trim_traces(a, b)?;
    StabilityIndex::ALL
        .iter()
        .map(|&index| {
            let points: Vec<ComparisonPoint> = [&ta, &tb]
                .iter()
                .flat_map(|t| {
                    t.steps.iter().map(move |s| ComparisonPoint {
                        auc: s.result.mean_auc,
                        value: s.indexes.get(index),
                        algorithm: t.algorithm,
                    })
                })
                .collect();
            Ok((index, algorithm_comparison(&points)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub cut_standard: f64,
    pub n_features: usize,
    pub prune_log: PruneLog,
    pub data_cut: DegradationTrace,
    pub feature_cut: DegradationTrace,
    pub comparisons: Vec<(StabilityIndex, RegressionResult)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    pub skipped: Vec<f64>,
    /// Algorithm coefficient regressed on cut standard, per index.
    pub effects: Vec<(StabilityIndex, RegressionResult)>,
    pub warnings: Vec<String>,
}

/// Prunes correlated features at each standard, reruns both algorithms on the
/// pruned data and compares them.
pub fn correlation_sweep(
    d: &Dataset,
    reference_importance: &[f64],
    standards: &[f64],
    c: &ExperimentConfig,
) -> Result<SweepResult> {
    if standards.is_empty() {
        return Err(Error::invalid("no correlation cut standards given"));
    }
    if !standards.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::invalid("cut standards must be strictly decreasing"));
    }
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let mut warnings = Vec::new();
    for (s_idx, &standard) in standards.iter().enumerate() {
        let (pruned, log) = prune_correlated(d, reference_importance, standard)?;
        if pruned.n_features() < 2 {
            warnings.push(format!(
                "cut standard {standard} leaves {} feature(s); skipped",
                pruned.n_features()
            ));
            skipped.push(standard);
            continue;
        }
        let sc = c.derived("correlation-sweep", s_idx as u64);
        let reference = bootstrap_experiment(&pruned, &sc)?;
        let data_cut = run_data_cutting_from(&pruned, &reference, &sc)?;
        let feature_cut = run_feature_cutting(&pruned, &reference, &sc)?;
        let comparisons = match compare_traces(&data_cut, &feature_cut) {
            Ok(cmp) => cmp,
            Err(e) => {
                warnings.push(format!("cut standard {standard}: comparison failed: {e}"));
                Vec::new()
            }
        };
        entries.push(SweepEntry {
            cut_standard: standard,
            n_features: pruned.n_features(),
            prune_log: log,
            data_cut,
            feature_cut,
            comparisons,
        });
    }
    let mut effects = Vec::new();
    for index in StabilityIndex::ALL {
        let points: Vec<(f64, f64)> = entries
            .iter()
            .filter_map(|e| {
                let (_, reg) = e.comparisons.iter().find(|(i, _)| *i == index)?;
                Some((e.cut_standard, reg.term(ALGORITHM_TERM)?.0))
            })
            .collect();
        match correlation_effect(&points) {
            Ok(r) => effects.push((index, r)),
            Err(e) => warnings.push(format!("{index}: correlation effect not fitted: {e}")),
        }
    }
    Ok(SweepResult {
        entries,
        skipped,
        effects,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyPoint {
    pub fraction: f64,
    pub size: usize,
    pub mean_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyReport {
    pub points: Vec<SufficiencyPoint>,
    /// AUC at the full data minus AUC at the smallest fraction of at least 1/2.
    pub auc_change: Option<f64>,
    pub tolerance: f64,
    pub data_sufficient: bool,
    pub warnings: Vec<String>,
}

/// Mean AUC at stratified fractions of the data.
pub fn sufficiency_probe(
    d: &Dataset,
    fractions: &[f64],
    c: &ExperimentConfig,
    tolerance: f64,
) -> Result<SufficiencyReport> {
    if fractions.first() != Some(&1.0) {
        return Err(Error::invalid("fractions must start at 1.0"));
    }
    if !fractions.windows(2).all(|w| w[0] > w[1])
        || fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0))
    {
        return Err(Error::invalid(
            "fractions must be strictly decreasing within (0, 1]",
        ));
    }
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for &fraction in fractions {
        let size = (d.n_samples() as f64 * fraction).round() as usize;
        let subset = if fraction == 1.0 {
            Ok(d.clone())
        } else {
            stratified_subsample(d, size, derive_seed(c.seed, "sufficiency", size as u64))
        };
        let result = subset.and_then(|s| {
            bootstrap_experiment(&s, &c.derived("sufficiency-experiment", size as u64))
        });
        match result {
            Ok(r) => points.push(SufficiencyPoint {
                fraction,
                size,
                mean_auc: r.mean_auc,
            }),
            Err(e @ (Error::ClassExhaustion(_) | Error::InvalidInput(_))) if fraction < 1.0 => {
                warnings.push(format!("fraction {fraction} skipped: {e}"));
            }
            Err(e) => return Err(e),
        }
    }
    let full = points[0].mean_auc;
    let auc_change = points
        .iter()
        .rev()
        .find(|p| p.fraction >= 0.5)
        .filter(|p| p.fraction < 1.0)
        .map(|p| full - p.mean_auc);
    Ok(SufficiencyReport {
        data_sufficient: auc_change.is_some_and(|x| x.abs() < tolerance),
        points,
        auc_change,
        tolerance,
        warnings,
    })
}
