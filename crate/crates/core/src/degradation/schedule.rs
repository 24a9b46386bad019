use std::collections::BTreeMap;

use super::{
    bootstrap_experiment, Algorithm, DegradationTrace, ExperimentConfig, ExperimentResult,
    FeatureSchedule, TerminationReason, TraceStep,
};
use crate::dataset::{stratified_subsample, Dataset};
use crate::metrics::{project_reference_rank, stability_indexes};
use crate::seed::derive_seed;
use crate::{Error, Result};

pub(crate) struct Probe<T> {
    pub size: usize,
    pub refinement: bool,
    pub auc: f64,
    pub payload: T,
}

pub(crate) struct ScheduleOutcome<T> {
    /// Sorted by strictly decreasing size; excludes the starting size.
    pub probes: Vec<Probe<T>>,
    pub termination: TerminationReason,
}

/// Walks sizes down from `start`.
///
/// Each round probes `next(current)`. When the AUC falls by more than
/// `tolerance` relative to `current`, the midpoint `(current + half) / 2` is
/// probed too and halving resumes from it; otherwise it resumes from the half.
/// Stops once a probe's AUC is below `floor`, when `eval` reports class
/// exhaustion, or when `next` has no further size.
pub(crate) fn drive<T>(
    start: usize,
    start_auc: f64,
    floor: f64,
    tolerance: f64,
    next: impl Fn(usize) -> Option<usize>,
    exhausted: TerminationReason,
    mut eval: impl FnMut(usize) -> Result<(f64, T)>,
) -> Result<ScheduleOutcome<T>> {
    let mut done: BTreeMap<usize, Probe<T>> = BTreeMap::new();
    let finish = |done: BTreeMap<usize, Probe<T>>, termination| ScheduleOutcome {
        probes: done.into_values().rev().collect(),
        termination,
    };
    if start_auc < floor {
        return Ok(finish(done, TerminationReason::AucFloor));
    }
    // Ok(None) signals class exhaustion
    let mut probe = |done: &mut BTreeMap<usize, Probe<T>>,
                     size: usize,
                     refinement: bool|
     -> Result<Option<f64>> {
        if let Some(p) = done.get(&size) {
            return Ok(Some(p.auc));
        }
        match eval(size) {
            Ok((auc, payload)) => {
                done.insert(
                    size,
                    Probe {
                        size,
                        refinement,
                        auc,
                        payload,
                    },
                );
                Ok(Some(auc))
            }
            Err(Error::ClassExhaustion(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let (mut current, mut current_auc) = (start, start_auc);
    loop {
        let Some(half) = next(current).filter(|&h| h < current) else {
            return Ok(finish(done, exhausted));
        };
        let Some(half_auc) = probe(&mut done, half, false)? else {
            return Ok(finish(done, TerminationReason::ClassExhaustion));
        };
        let (mut resume, mut resume_auc) = (half, half_auc);
        let mid = (current + half) / 2;
        if current_auc - half_auc > tolerance && mid != current && mid != half {
            let Some(mid_auc) = probe(&mut done, mid, true)? else {
                return Ok(finish(done, TerminationReason::ClassExhaustion));
            };
            (resume, resume_auc) = (mid, mid_auc);
        }
        if half_auc < floor || resume_auc < floor {
            return Ok(finish(done, TerminationReason::AucFloor));
        }
        (current, current_auc) = (resume, resume_auc);
    }
}

fn reference_step(reference: &ExperimentResult, size: usize) -> Result<TraceStep> {
    Ok(TraceStep {
        size,
        refinement: false,
        result: reference.clone(),
        indexes: stability_indexes(&reference.rank, &reference.rank)?,
    })
}

fn floor_warning(reference: &ExperimentResult, c: &ExperimentConfig) -> Vec<String> {
    if reference.mean_auc < c.auc_floor {
        vec![format!(
            "full-data AUC {:.4} is already below the floor {}",
            reference.mean_auc, c.auc_floor
        )]
    } else {
        Vec::new()
    }
}

/// Data cutting: shrinks the sample count with one stratified subsample per
/// step, comparing every step's ranking to the full-data reference.
pub fn run_data_cutting(d: &Dataset, c: &ExperimentConfig) -> Result<DegradationTrace> {
    let reference = bootstrap_experiment(d, c)?;
    run_data_cutting_from(d, &reference, c)
}

/// [`run_data_cutting`] with a precomputed full-data reference.
pub fn run_data_cutting_from(
    d: &Dataset,
    reference: &ExperimentResult,
    c: &ExperimentConfig,
) -> Result<DegradationTrace> {
    c.validate()?;
    check_reference(d, reference)?;
    let outcome = drive(
        d.n_samples(),
        reference.mean_auc,
        c.auc_floor,
        c.auc_step_tolerance,
        |n| Some(n / 2).filter(|&h| h >= 2),
        TerminationReason::ClassExhaustion,
        |size| {
            log::debug!("data cut: {size} samples");
            let sub =
                stratified_subsample(d, size, derive_seed(c.seed, "data-cut-step", size as u64))?;
            let result =
                bootstrap_experiment(&sub, &c.derived("data-cut-experiment", size as u64))?;
            Ok((result.mean_auc, result))
        },
    )?;
    let mut steps = vec![reference_step(reference, d.n_samples())?];
    for p in outcome.probes {
        steps.push(TraceStep {
            size: p.size,
            refinement: p.refinement,
            indexes: stability_indexes(&reference.rank, &p.payload.rank)?,
            result: p.payload,
        });
    }
    Ok(DegradationTrace {
        algorithm: Algorithm::DataCut,
        steps,
        reference: reference.clone(),
        termination: outcome.termination,
        warnings: floor_warning(reference, c),
    })
}

fn check_reference(d: &Dataset, reference: &ExperimentResult) -> Result<()> {
    if reference.feature_set != d.feature_names() {
        return Err(Error::invalid(
            "reference experiment was run on a different feature set",
        ));
    }
    Ok(())
}

/// Names of the `count` least important reference features, in column order.
pub(crate) fn surviving_features(reference: &ExperimentResult, count: usize) -> Vec<String> {
    let p = reference.feature_set.len();
    reference
        .feature_set
        .iter()
        .zip(&reference.rank.ranks)
        .filter(|(_, &r)| r > p - count.min(p))
        .map(|(n, _)| n.clone())
        .collect()
}

/// Feature cutting: removes the most important reference features first and
/// compares each step's ranking with the reference ranking restricted to the
/// surviving features.
pub fn run_feature_cutting(
    d: &Dataset,
    reference: &ExperimentResult,
    c: &ExperimentConfig,
) -> Result<DegradationTrace> {
    c.validate()?;
    check_reference(d, reference)?;
    let next = |f: usize| -> Option<usize> {
        let n = match c.feature_schedule {
            FeatureSchedule::Halving => f / 2,
            FeatureSchedule::OneAtATime => f - 1,
        };
        Some(n).filter(|&n| n >= 2)
    };
    let outcome = drive(
        d.n_features(),
        reference.mean_auc,
        c.auc_floor,
        c.auc_step_tolerance,
        next,
        TerminationReason::FeatureExhaustion,
        |count| {
            log::debug!("feature cut: {count} features");
            let names = surviving_features(reference, count);
            let cols: Vec<usize> = names.iter().filter_map(|n| d.feature_index(n)).collect();
            let sub = d.select_features(&cols);
            let result =
                bootstrap_experiment(&sub, &c.derived("feature-cut-experiment", count as u64))?;
            Ok((result.mean_auc, (names, result)))
        },
    )?;
    let mut steps = vec![reference_step(reference, d.n_features())?];
    for p in outcome.probes {
        let (names, result) = p.payload;
        let projected = project_reference_rank(&reference.rank, &names)?;
        steps.push(TraceStep {
            size: p.size,
            refinement: p.refinement,
            indexes: stability_indexes(&projected, &result.rank)?,
            result,
        });
    }
    Ok(DegradationTrace {
        algorithm: Algorithm::FeatureCut,
        steps,
        reference: reference.clone(),
        termination: outcome.termination,
        warnings: floor_warning(reference, c),
    })
}
