//! Orchestration of the experiments behind each subcommand.

use anyhow::{bail, Context};
use fistab_core::dataset::linear_coefficients;
use fistab_core::degradation::{
    bootstrap_experiment, compare_traces, correlation_sweep, interpolated_difference, overlap_grid,
    run_data_cutting_from, run_feature_cutting, sufficiency_probe, trim_traces, DifferencePoint,
    SufficiencyReport, SweepResult,
};
use fistab_core::seed::derive_seed;
use fistab_core::stats::adjacent_rank_significance;
use fistab_core::theory::{
    adjacent_window_probabilities, essential_sample_probability, monte_carlo_pattern,
    probability_surface, MonteCarloEstimate, ProbabilitySurface,
};
use fistab_core::{
    AdjacencyReport, Algorithm, Dataset, DegradationTrace, ExperimentConfig, ExperimentResult,
    RegressionResult, StabilityIndex, TheoryParams,
};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, TheoryConfig};

/// Grid resolution for the interpolated difference curves.
pub const DIFFERENCE_POINTS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Generate,
    Run,
    SweepCorrelation,
    Theory,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Run => "run",
            Command::SweepCorrelation => "sweep-correlation",
            Command::Theory => "theory",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub provenance: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_positive: usize,
    pub feature_names: Vec<String>,
}

impl DatasetSummary {
    fn of(d: &Dataset) -> Self {
        DatasetSummary {
            provenance: d.provenance().to_string(),
            n_samples: d.n_samples(),
            n_features: d.n_features(),
            n_positive: d.n_positive(),
            feature_names: d.feature_names().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAdjacency {
    pub algorithm: Algorithm,
    pub step: usize,
    pub size: usize,
    pub mean_auc: f64,
    pub report: AdjacencyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub mu: f64,
    /// The pair compares features `pair_start` and `pair_start + 1` (1-based).
    pub pair_start: usize,
    pub a_i: f64,
    pub a_j: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCheckResult {
    pub params: TheoryParams,
    pub window: u64,
    pub closed_form: f64,
    pub monte_carlo: MonteCarloEstimate,
    /// `(monte_carlo - closed_form) / se`, with the binomial SE of the closed form.
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryResults {
    pub surface: ProbabilitySurface,
    pub windows: Vec<WindowRow>,
    pub checks: Vec<PatternCheckResult>,
}

/// Everything a subcommand computed; serialized as `results.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunResults {
    pub dataset: Option<DatasetSummary>,
    pub reference: Option<ExperimentResult>,
    pub traces: Vec<DegradationTrace>,
    /// Step sizes kept by trimming, per algorithm.
    pub compared_sizes: Vec<(Algorithm, Vec<usize>)>,
    pub comparisons: Vec<(StabilityIndex, RegressionResult)>,
    pub differences: Vec<DifferencePoint>,
    pub adjacency: Vec<StepAdjacency>,
    pub sweep: Option<SweepResult>,
    pub sufficiency: Option<SufficiencyReport>,
    pub theory: Option<TheoryResults>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

impl RunResults {
    pub fn trace(&self, algorithm: Algorithm) -> Option<&DegradationTrace> {
        self.traces.iter().find(|t| t.algorithm == algorithm)
    }

    pub fn compared(&self, algorithm: Algorithm, size: usize) -> bool {
        self.compared_sizes
            .iter()
            .any(|(a, sizes)| *a == algorithm && sizes.contains(&size))
    }
}

/// Runs the analyses of `command`. Failures of optional stages are recorded
/// in `errors` or `warnings`; failures that leave nothing to report are returned.
pub fn run_pipeline(config: &RunConfig, command: Command) -> anyhow::Result<RunResults> {
    let mut out = RunResults::default();
    match command {
        Command::Run => {
            let (d, reference) = reference_stage(config, &mut out)?;
            let c = config.experiment_config();
            degradation_stage(&d, &reference, &c, config.adjacency_alpha, &mut out);
            if !config.correlation_standards.is_empty() {
                sweep_stage(&d, &reference, config, &c, &mut out);
            }
            if !config.sufficiency_fractions.is_empty() {
                match sufficiency_probe(
                    &d,
                    &config.sufficiency_fractions,
                    &c,
                    config.sufficiency_tolerance,
                ) {
                    Ok(r) => {
                        out.warnings.extend(r.warnings.iter().cloned());
                        out.sufficiency = Some(r);
                    }
                    Err(e) => out.errors.push(format!("sufficiency probe: {e}")),
                }
            }
            if let Some(t) = &config.theory {
                theory_stage(t, config.seed, &mut out);
            }
        }
        Command::SweepCorrelation => {
            if config.correlation_standards.is_empty() {
                bail!(
                    "field `correlation_standards`: sweep-correlation needs at least one standard"
                );
            }
            let (d, reference) = reference_stage(config, &mut out)?;
            let c = config.experiment_config();
            sweep_stage(&d, &reference, config, &c, &mut out);
        }
        Command::Theory => {
            let t = config.theory.clone().unwrap_or_default();
            if config.theory.is_none() {
                out.warnings
                    .push("no `theory` block in config; default grid used".into());
            }
            theory_stage(&t, config.seed, &mut out);
        }
        Command::Generate | Command::Report => {
            bail!("`{}` does not run experiments", command.name())
        }
    }
    Ok(out)
}

fn reference_stage(
    config: &RunConfig,
    out: &mut RunResults,
) -> anyhow::Result<(Dataset, ExperimentResult)> {
    let d = config.load_dataset()?;
    out.dataset = Some(DatasetSummary::of(&d));
    let reference =
        bootstrap_experiment(&d, &config.experiment_config()).context("reference experiment")?;
    log::info!(
        "reference: n={} p={} mean AUC {:.4}",
        d.n_samples(),
        d.n_features(),
        reference.mean_auc
    );
    out.reference = Some(reference.clone());
    Ok((d, reference))
}

fn degradation_stage(
    d: &Dataset,
    reference: &ExperimentResult,
    c: &ExperimentConfig,
    alpha: f64,
    out: &mut RunResults,
) {
    let (data, feature) = rayon::join(
        || run_data_cutting_from(d, reference, c),
        || run_feature_cutting(d, reference, c),
    );
    for (algorithm, trace) in [(Algorithm::DataCut, data), (Algorithm::FeatureCut, feature)] {
        match trace {
            Ok(t) => {
                log::info!(
                    "{}: {} steps, stopped by {}",
                    algorithm.name(),
                    t.steps.len(),
                    t.termination.name()
                );
                out.warnings.extend(
                    t.warnings
                        .iter()
                        .map(|w| format!("{}: {w}", algorithm.name())),
                );
                out.traces.push(t);
            }
            Err(e) => out.errors.push(format!("{}: {e}", algorithm.name())),
        }
    }
    if let (Some(a), Some(b)) = (
        out.trace(Algorithm::DataCut),
        out.trace(Algorithm::FeatureCut),
    ) {
        let comparison = trim_traces(a, b).and_then(|(ta, tb)| Ok((ta, tb, compare_traces(a, b)?)));
        let differences =
            overlap_grid(a, b, DIFFERENCE_POINTS).and_then(|g| interpolated_difference(a, b, &g));
        match comparison {
            Ok((ta, tb, cmp)) => {
                out.compared_sizes = [&ta, &tb]
                    .iter()
                    .map(|t| (t.algorithm, t.steps.iter().map(|s| s.size).collect()))
                    .collect();
                out.comparisons = cmp;
            }
            Err(e) => out.errors.push(format!("algorithm comparison: {e}")),
        }
        match differences {
            Ok(diff) => out.differences = diff,
            Err(e) => out.warnings.push(format!("difference curves: {e}")),
        }
    }
    let mut adjacency = Vec::new();
    for t in &out.traces {
        for (step, s) in t.steps.iter().enumerate() {
            match adjacent_rank_significance(&s.result.rank_aligned_importance(), alpha) {
                Ok(report) => adjacency.push(StepAdjacency {
                    algorithm: t.algorithm,
                    step,
                    size: s.size,
                    mean_auc: s.result.mean_auc,
                    report,
                }),
                Err(e) => out.warnings.push(format!(
                    "{} step {step}: adjacency analysis skipped: {e}",
                    t.algorithm.name()
                )),
            }
        }
    }
    out.adjacency = adjacency;
}

fn sweep_stage(
    d: &Dataset,
    reference: &ExperimentResult,
    config: &RunConfig,
    c: &ExperimentConfig,
    out: &mut RunResults,
) {
    match correlation_sweep(
        d,
        &reference.mean_importance,
        &config.correlation_standards,
        c,
    ) {
        Ok(s) => {
            out.warnings.extend(s.warnings.iter().cloned());
            out.sweep = Some(s);
        }
        Err(e) => out.errors.push(format!("correlation sweep: {e}")),
    }
}

fn theory_stage(t: &TheoryConfig, seed: u64, out: &mut RunResults) {
    let surface = match probability_surface(t.population, &t.k_values, &t.gaps) {
        Ok(s) => s,
        Err(e) => {
            out.errors.push(format!("theory surface: {e}"));
            return;
        }
    };
    let a = linear_coefficients(t.n_features);
    let windows = t
        .mu_values
        .iter()
        .flat_map(|&mu| {
            let a = &a;
            adjacent_window_probabilities(mu, t.n_features)
                .into_iter()
                .enumerate()
                .map(move |(n, probability)| WindowRow {
                    mu,
                    pair_start: n + 1,
                    a_i: a[n],
                    a_j: a[n + 1],
                    probability,
                })
        })
        .collect();
    let mut checks = Vec::new();
    for (idx, pc) in t.pattern_checks.iter().enumerate() {
        let result = TheoryParams::new(t.population, t.n_features, pc.k, pc.mu, pc.i, pc.j)
            .and_then(|params| {
                let window = params.window_count()?;
                let closed_form = essential_sample_probability(&params)?;
                let monte_carlo = monte_carlo_pattern(
                    &params,
                    t.monte_carlo_trials,
                    derive_seed(seed, "theory-check", idx as u64),
                )?;
                let se = (closed_form * (1.0 - closed_form) / t.monte_carlo_trials as f64).sqrt();
                let diff = monte_carlo.estimate - closed_form;
                let z_score = if se > 0.0 {
                    diff / se
                } else if diff == 0.0 {
                    0.0
                } else {
                    diff.signum() * f64::INFINITY
                };
                Ok(PatternCheckResult {
                    params,
                    window,
                    closed_form,
                    monte_carlo,
                    z_score,
                })
            });
        match result {
            Ok(r) => {
                if r.z_score.abs() > 3.0 {
                    out.warnings.push(format!(
                        "theory check {idx}: Monte-Carlo estimate {} is {:.2} SE from closed form {}",
                        r.monte_carlo.estimate, r.z_score, r.closed_form
                    ));
                }
                checks.push(r);
            }
            Err(e) => out.errors.push(format!("theory check {idx}: {e}")),
        }
    }
    out.theory = Some(TheoryResults {
        surface,
        windows,
        checks,
    });
}
