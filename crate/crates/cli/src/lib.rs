//! Command-line front end for the feature-importance stability lab.
//!
//! Every subcommand reads one JSON [`RunConfig`], applies flag overrides,
//! runs its analyses and writes a report bundle: tables, charts and a
//! `manifest.json` carrying the config echo and a SHA-256 per file.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod svg;

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

pub use config::{Format, InputSource, Overrides, RunConfig};
pub use pipeline::{run_pipeline, Command, RunResults};
pub use report::{render_report, write_bundle, Manifest, ReportBundle};

#[derive(Debug, Parser)]
#[command(
    name = "fistab",
    version,
    about = "Feature-importance stability under data and feature cutting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,

    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Comma-separated subset of csv,json,svg.
    #[arg(long, global = true)]
    pub format: Option<String>,

    #[arg(long, global = true)]
    pub label_column: Option<String>,

    #[arg(long, global = true)]
    pub bootstraps: Option<usize>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Sub {
    /// Write the configured synthetic dataset as CSV.
    Generate,
    /// Reference experiment, both degradation traces and every analysis.
    Run,
    /// Reference experiment followed by the correlation sweep.
    SweepCorrelation,
    /// Essential-sample probability surface and window analysis.
    Theory,
    /// Re-render tables and charts from an existing results.json.
    Report,
}

impl Sub {
    fn command(self) -> Command {
        match self {
            Sub::Generate => Command::Generate,
            Sub::Run => Command::Run,
            Sub::SweepCorrelation => Command::SweepCorrelation,
            Sub::Theory => Command::Theory,
            Sub::Report => Command::Report,
        }
    }
}

impl Cli {
    pub fn overrides(&self) -> anyhow::Result<Overrides> {
        Ok(Overrides {
            seed: self.seed,
            out: self.out.clone(),
            formats: self.format.as_deref().map(Format::parse_list).transpose()?,
            label_column: self.label_column.clone(),
            bootstraps: self.bootstraps,
        })
    }

    pub fn load_config(&self) -> anyhow::Result<RunConfig> {
        let Some(path) = &self.config else {
            bail!("--config <path> is required");
        };
        RunConfig::load(path, &self.overrides()?)
    }
}

/// Parses the config, runs the subcommand on a dedicated thread pool and
/// writes the bundle.
pub fn execute(cli: &Cli) -> anyhow::Result<ReportBundle> {
    let config = cli.load_config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .context("building thread pool")?;
    pool.install(|| execute_with(&config, cli.command.command()))
}

pub fn execute_with(config: &RunConfig, command: Command) -> anyhow::Result<ReportBundle> {
    let dir = &config.output_dir;
    match command {
        Command::Generate => {
            let Some(spec) = config.synthetic_spec()? else {
                bail!("field `input`: generate needs a synthetic input");
            };
            let d = fistab_core::dataset::generate_synthetic(&spec)?;
            let mut files = report::Files::new();
            files.insert("synthetic.csv".into(), dataset_csv(&d)?);
            files.insert(
                "synthetic_spec.json".into(),
                serde_json::to_vec_pretty(&spec)?,
            );
            write_bundle(dir, command, config, &files, Vec::new(), Vec::new())
        }
        Command::Report => {
            let path = dir.join(report::RESULTS);
            let text = std::fs::read_to_string(&path).with_context(|| {
                format!("reading {} (run with json output first)", path.display())
            })?;
            let results: RunResults = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            finish(config, command, &results)
        }
        _ => {
            let results = run_pipeline(config, command)?;
            finish(config, command, &results)
        }
    }
}

fn finish(
    config: &RunConfig,
    command: Command,
    results: &RunResults,
) -> anyhow::Result<ReportBundle> {
    let (files, chart_warnings) = render_report(results, &config.formats)?;
    let mut warnings = results.warnings.clone();
    warnings.extend(chart_warnings);
    write_bundle(
        &config.output_dir,
        command,
        config,
        &files,
        warnings,
        results.errors.clone(),
    )
}

/// The dataset as CSV with a trailing `label` column.
pub fn dataset_csv(d: &fistab_core::Dataset) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = d.feature_names().iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header)?;
    for (row, &label) in d.features().rows().zip(d.labels()) {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(label.to_string());
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))
}
