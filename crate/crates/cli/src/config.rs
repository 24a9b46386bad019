//! Run configuration: one JSON document plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fistab_core::dataset::{generate_synthetic, load_csv, CsvOptions, SyntheticSpec};
use fistab_core::degradation::ExperimentConfig;
use fistab_core::seed::derive_seed;
use fistab_core::Dataset;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn parse_list(s: &str) -> anyhow::Result<Vec<Format>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let f = match part {
                "csv" => Format::Csv,
                "json" => Format::Json,
                "svg" => Format::Svg,
                other => bail!("unknown format `{other}` (expected csv, json or svg)"),
            };
            if !out.contains(&f) {
                out.push(f);
            }
        }
        if out.is_empty() {
            bail!("no report format given");
        }
        out.sort();
        Ok(out)
    }
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json, Format::Svg]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticInput {
    pub n_samples: usize,
    #[serde(default = "default_synthetic_features")]
    pub n_features: usize,
    #[serde(default = "default_positive_fraction")]
    pub positive_fraction: f64,
}

fn default_synthetic_features() -> usize {
    20
}

fn default_positive_fraction() -> f64 {
    0.5085
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvInput {
    pub path: PathBuf,
    pub label_column: String,
    #[serde(default)]
    pub options: CsvOptions,
}

/// Exactly one data source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSource {
    Synthetic(SyntheticInput),
    Csv(CsvInput),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternCheck {
    pub k: u64,
    pub mu: f64,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub population: u64,
    pub n_features: usize,
    pub k_values: Vec<u64>,
    pub gaps: Vec<f64>,
    /// Thresholds for the adjacent-pair window probabilities.
    pub mu_values: Vec<f64>,
    pub pattern_checks: Vec<PatternCheck>,
    pub monte_carlo_trials: u64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            population: 1000,
            n_features: 20,
            k_values: vec![10, 20, 50, 100, 200, 500],
            gaps: vec![0.005, 0.01, 0.02, 0.05],
            mu_values: vec![0.4, 0.5, 0.6],
            pattern_checks: vec![PatternCheck {
                k: 50,
                mu: 0.5,
                i: 3,
                j: 7,
            }],
            monte_carlo_trials: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub input: InputSource,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    /// Strictly decreasing correlation cut standards; empty skips the sweep.
    #[serde(default)]
    pub correlation_standards: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub adjacency_alpha: f64,
    /// Stratified fractions for the data-sufficiency probe, starting at 1.0.
    #[serde(default)]
    pub sufficiency_fractions: Vec<f64>,
    #[serde(default = "default_sufficiency_tolerance")]
    pub sufficiency_tolerance: f64,
    #[serde(default)]
    pub theory: Option<TheoryConfig>,
    pub output_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_sufficiency_tolerance() -> f64 {
    0.01
}

/// Command-line values that replace fields of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub label_column: Option<String>,
    pub bootstraps: Option<usize>,
}

impl Overrides {
    fn apply(&self, doc: &mut Value) -> anyhow::Result<()> {
        let Some(obj) = doc.as_object_mut() else {
            bail!("config must be a JSON object");
        };
        if let Some(seed) = self.seed {
            obj.insert("seed".into(), seed.into());
        }
        if let Some(out) = &self.out {
            obj.insert("output_dir".into(), out.display().to_string().into());
        }
        if let Some(formats) = &self.formats {
            obj.insert("formats".into(), serde_json::to_value(formats)?);
        }
        if let Some(b) = self.bootstraps {
            let exp = obj
                .entry("experiment")
                .or_insert_with(|| Value::Object(Default::default()));
            match exp.as_object_mut() {
                Some(e) => {
                    e.insert("n_bootstraps".into(), b.into());
                }
                None => bail!("field `experiment` must be an object"),
            }
        }
        if let Some(label) = &self.label_column {
            match obj.get_mut("input").and_then(|i| i.get_mut("csv")) {
                Some(Value::Object(csv)) => {
                    csv.insert("label_column".into(), label.clone().into());
                }
                _ => bail!("--label-column needs a csv input in the config"),
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn from_json(text: &str, overrides: &Overrides) -> anyhow::Result<Self> {
        let mut doc: Value = serde_json::from_str(text).context("config is not valid JSON")?;
        overrides.apply(&mut doc)?;
        let config: RunConfig = serde_json::from_value(doc).context("invalid config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &Overrides) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        RunConfig::from_json(&text, overrides).with_context(|| format!("config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.experiment_config()
            .validate()
            .context("field `experiment`")?;
        if self.formats.is_empty() {
            bail!("field `formats`: at least one format is required");
        }
        if !(self.adjacency_alpha > 0.0 && self.adjacency_alpha < 1.0) {
            bail!(
                "field `adjacency_alpha`: {} outside (0, 1)",
                self.adjacency_alpha
            );
        }
        if !self.correlation_standards.windows(2).all(|w| w[0] > w[1])
            || self
                .correlation_standards
                .iter()
                .any(|&s| !(s > 0.0 && s <= 1.0))
        {
            bail!("field `correlation_standards`: must be strictly decreasing within (0, 1]");
        }
        if !self.sufficiency_fractions.is_empty() && self.sufficiency_fractions[0] != 1.0 {
            bail!("field `sufficiency_fractions`: must start at 1.0");
        }
        if let InputSource::Synthetic(s) = &self.input {
            if s.n_samples < 4 {
                bail!("field `input.synthetic.n_samples`: need at least 4 samples");
            }
            if s.n_features == 0 {
                bail!("field `input.synthetic.n_features`: must be positive");
            }
            if !(s.positive_fraction > 0.0 && s.positive_fraction < 1.0) {
                bail!("field `input.synthetic.positive_fraction`: outside (0, 1)");
            }
        }
        if let Some(t) = &self.theory {
            if t.k_values.is_empty() || t.gaps.is_empty() {
                bail!("field `theory`: k_values and gaps must be non-empty");
            }
            if t.monte_carlo_trials < fistab_core::theory::MIN_TRIALS
                && !t.pattern_checks.is_empty()
            {
                bail!(
                    "field `theory.monte_carlo_trials`: need at least {}",
                    fistab_core::theory::MIN_TRIALS
                );
            }
        }
        Ok(())
    }

    /// The experiment block with its seed derived from the global seed.
    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            seed: derive_seed(self.seed, "experiment", 0),
            ..self.experiment.clone()
        }
    }

    pub fn synthetic_spec(&self) -> anyhow::Result<Option<SyntheticSpec>> {
        match &self.input {
            InputSource::Synthetic(s) => Ok(Some(SyntheticSpec::calibrated(
                s.n_features,
                s.n_samples,
                s.positive_fraction,
                derive_seed(self.seed, "synthetic-data", 0),
            )?)),
            InputSource::Csv(_) => Ok(None),
        }
    }

    pub fn load_dataset(&self) -> anyhow::Result<Dataset> {
        match &self.input {
            InputSource::Synthetic(_) => {
                let spec = self.synthetic_spec()?.expect("synthetic input");
                Ok(generate_synthetic(&spec)?)
            }
            InputSource::Csv(c) => load_csv(&c.path, &c.label_column, &c.options)
                .with_context(|| format!("loading {}", c.path.display())),
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}
