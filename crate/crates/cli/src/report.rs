//! Tables, charts and the hashed manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fistab_core::degradation::traces_csv;
use fistab_core::{Algorithm, DegradationTrace, ExperimentResult, StabilityIndex};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::pipeline::{Command, RunResults};
use crate::svg::{extent, fmt_num, heat_color, padded, Chart, PALETTE, REFERENCE_RED};

pub const MANIFEST: &str = "manifest.json";
pub const RESULTS: &str = "results.json";
/// AUC marked on every scatter chart.
pub const AUC_REFERENCE_LINE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub files: Vec<ManifestEntry>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl ReportBundle {
    pub fn has_errors(&self) -> bool {
        !self.manifest.errors.is_empty()
    }

    pub fn file(&self, name: &str) -> Option<&ManifestEntry> {
        self.manifest.files.iter().find(|f| f.path == name)
    }
}

/// File name to contents, in name order.
pub type Files = BTreeMap<String, Vec<u8>>;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

pub fn stability_table_name(index: StabilityIndex) -> String {
    format!("stability_{}.csv", index.name())
}

/// Every tabular view of `r`.
pub fn render_tables(r: &RunResults) -> anyhow::Result<Files> {
    let mut files = Files::new();
    if let Some(d) = &r.dataset {
        files.insert(
            "dataset.csv".into(),
            table(
                &["provenance", "n_samples", "n_features", "n_positive"],
                [vec![
                    d.provenance.clone(),
                    s(d.n_samples),
                    s(d.n_features),
                    s(d.n_positive),
                ]],
            )?,
        );
    }
    if let Some(reference) = &r.reference {
        files.insert(
            "reference.csv".into(),
            table(
                &["feature", "mean_importance", "rank"],
                reference
                    .feature_set
                    .iter()
                    .zip(&reference.mean_importance)
                    .zip(&reference.rank.ranks)
                    .map(|((f, imp), rank)| vec![f.clone(), s(imp), s(rank)]),
            )?,
        );
    }
    if !r.traces.is_empty() {
        for index in StabilityIndex::ALL {
            let rows = r.traces.iter().flat_map(|t| {
                t.steps.iter().enumerate().map(move |(i, st)| {
                    vec![
                        s(t.algorithm.name()),
                        s(i),
                        s(st.size),
                        s(st.refinement),
                        s(st.result.mean_auc),
                        s(st.result.auc_sd),
                        s(st.indexes.get(index)),
                        s(r.compared(t.algorithm, st.size)),
                    ]
                })
            });
            files.insert(
                stability_table_name(index),
                table(
                    &[
                        "algorithm",
                        "step",
                        "size",
                        "refinement",
                        "mean_auc",
                        "auc_sd",
                        "value",
                        "in_comparison",
                    ],
                    rows,
                )?,
            );
        }
        files.insert("traces.csv".into(), traces_csv(&r.traces)?.into_bytes());
        files.insert(
            "trace_summary.csv".into(),
            table(
                &["algorithm", "steps", "termination", "auc_min", "auc_max"],
                r.traces.iter().map(|t| {
                    let (lo, hi) = t.auc_range().unwrap_or((f64::NAN, f64::NAN));
                    vec![
                        s(t.algorithm.name()),
                        s(t.steps.len()),
                        s(t.termination.name()),
                        s(lo),
                        s(hi),
                    ]
                }),
            )?,
        );
        files.insert("importance.csv".into(), importance_table(r)?);
    }
    if !r.traces.is_empty() || !r.comparisons.is_empty() {
        let rows = r.comparisons.iter().flat_map(|(index, reg)| {
            (0..reg.names.len()).map(move |k| {
                vec![
                    s(index.name()),
                    reg.names[k].clone(),
                    s(reg.coefficients[k]),
                    s(reg.std_errors[k]),
                    s(reg.t_values[k]),
                    s(reg.p_values[k]),
                    s(reg.r_squared),
                    s(reg.n),
                ]
            })
        });
        files.insert(
            "comparison.csv".into(),
            table(
                &[
                    "index",
                    "term",
                    "coefficient",
                    "std_error",
                    "t_value",
                    "p_value",
                    "r_squared",
                    "n",
                ],
                rows,
            )?,
        );
        files.insert(
            "differences.csv".into(),
            table(
                &["auc", "rank_difference", "srcc", "canberra", "bray_curtis"],
                r.differences.iter().map(|p| {
                    let mut row = vec![s(p.auc)];
                    row.extend(StabilityIndex::ALL.iter().map(|&i| s(p.difference.get(i))));
                    row
                }),
            )?,
        );
        files.insert(
            "adjacency.csv".into(),
            table(
                &[
                    "algorithm",
                    "step",
                    "size",
                    "mean_auc",
                    "alpha",
                    "pairs",
                    "significant_pairs",
                    "significant_ratio",
                ],
                r.adjacency.iter().map(|a| {
                    vec![
                        s(a.algorithm.name()),
                        s(a.step),
                        s(a.size),
                        s(a.mean_auc),
                        s(a.report.alpha),
                        s(a.report.pairs.len()),
                        s(a.report.pairs.iter().filter(|p| p.significant).count()),
                        s(a.report.significant_ratio),
                    ]
                }),
            )?,
        );
        files.insert(
            "adjacency_pairs.csv".into(),
            table(
                &[
                    "algorithm",
                    "step",
                    "size",
                    "rank",
                    "method",
                    "statistic",
                    "p_value",
                    "significant",
                ],
                r.adjacency.iter().flat_map(|a| {
                    a.report.pairs.iter().map(move |p| {
                        vec![
                            s(a.algorithm.name()),
                            s(a.step),
                            s(a.size),
                            s(p.rank),
                            s(p.test.method.name()),
                            s(p.test.statistic),
                            s(p.test.p_value),
                            s(p.significant),
                        ]
                    })
                }),
            )?,
        );
    }
    if let Some(sw) = &r.sweep {
        files.insert(
            "sweep.csv".into(),
            table(
                &[
                    "cut_standard",
                    "n_features",
                    "removed",
                    "index",
                    "feature_cut_coefficient",
                    "p_value",
                ],
                sw.entries.iter().flat_map(|e| {
                    e.comparisons.iter().map(move |(index, reg)| {
                        let (coef, p) = reg
                            .term(fistab_core::stats::ALGORITHM_TERM)
                            .unwrap_or((f64::NAN, f64::NAN));
                        vec![
                            s(e.cut_standard),
                            s(e.n_features),
                            s(e.prune_log.entries.len()),
                            s(index.name()),
                            s(coef),
                            s(p),
                        ]
                    })
                }),
            )?,
        );
        files.insert(
            "sweep_pruned.csv".into(),
            table(
                &["cut_standard", "kept", "removed", "correlation"],
                sw.entries.iter().flat_map(|e| {
                    e.prune_log.entries.iter().map(move |p| {
                        vec![
                            s(e.cut_standard),
                            p.kept.clone(),
                            p.removed.clone(),
                            s(p.correlation),
                        ]
                    })
                }),
            )?,
        );
        files.insert(
            "sweep_effects.csv".into(),
            table(
                &[
                    "index",
                    "term",
                    "coefficient",
                    "std_error",
                    "p_value",
                    "r_squared",
                    "n",
                ],
                sw.effects.iter().flat_map(|(index, reg)| {
                    (0..reg.names.len()).map(move |k| {
                        vec![
                            s(index.name()),
                            reg.names[k].clone(),
                            s(reg.coefficients[k]),
                            s(reg.std_errors[k]),
                            s(reg.p_values[k]),
                            s(reg.r_squared),
                            s(reg.n),
                        ]
                    })
                }),
            )?,
        );
    }
    if let Some(suff) = &r.sufficiency {
        files.insert(
            "sufficiency.csv".into(),
            table(
                &["fraction", "size", "mean_auc"],
                suff.points
                    .iter()
                    .map(|p| vec![s(p.fraction), s(p.size), s(p.mean_auc)]),
            )?,
        );
        files.insert(
            "sufficiency_summary.csv".into(),
            table(
                &["auc_change", "tolerance", "data_sufficient"],
                [vec![
                    suff.auc_change.map(s).unwrap_or_default(),
                    s(suff.tolerance),
                    s(suff.data_sufficient),
                ]],
            )?,
        );
    }
    if let Some(th) = &r.theory {
        files.insert(
            "theory_surface.csv".into(),
            table(
                &["population", "k", "gap", "probability"],
                th.surface
                    .rows()
                    .into_iter()
                    .map(|(k, gap, p)| vec![s(th.surface.population), s(k), s(gap), s(p)]),
            )?,
        );
        files.insert(
            "theory_windows.csv".into(),
            table(
                &["mu", "pair_start", "a_i", "a_j", "probability"],
                th.windows.iter().map(|w| {
                    vec![
                        s(w.mu),
                        s(w.pair_start),
                        s(w.a_i),
                        s(w.a_j),
                        s(w.probability),
                    ]
                }),
            )?,
        );
        files.insert(
            "theory_checks.csv".into(),
            table(
                &[
                    "population",
                    "k",
                    "mu",
                    "i",
                    "j",
                    "window",
                    "closed_form",
                    "monte_carlo",
                    "std_error",
                    "trials",
                    "z_score",
                ],
                th.checks.iter().map(|c| {
                    vec![
                        s(c.params.population),
                        s(c.params.k),
                        s(c.params.mu),
                        s(c.params.i),
                        s(c.params.j),
                        s(c.window),
                        s(c.closed_form),
                        s(c.monte_carlo.estimate),
                        s(c.monte_carlo.std_error),
                        s(c.monte_carlo.trials),
                        s(c.z_score),
                    ]
                }),
            )?,
        );
    }
    Ok(files)
}

fn importance_table(r: &RunResults) -> anyhow::Result<Vec<u8>> {
    let mut rows = Vec::new();
    let mut push = |label: &str, step: usize, result: &ExperimentResult| {
        let order = rank_order(result);
        for (b, row) in result.importance_matrix.iter().enumerate() {
            for (pos, &j) in order.iter().enumerate() {
                rows.push(vec![
                    label.to_string(),
                    s(step),
                    s(result.sample_count),
                    s(result.feature_set.len()),
                    s(b),
                    s(pos + 1),
                    result.feature_set[j].clone(),
                    s(row[j]),
                ]);
            }
        }
    };
    if let Some(reference) = &r.reference {
        push("reference", 0, reference);
    }
    for t in &r.traces {
        for (i, st) in t.steps.iter().enumerate().skip(1) {
            push(t.algorithm.name(), i, &st.result);
        }
    }
    table(
        &[
            "algorithm",
            "step",
            "n_samples",
            "n_features",
            "bootstrap",
            "rank",
            "feature",
            "importance",
        ],
        rows,
    )
}

fn rank_order(result: &ExperimentResult) -> Vec<usize> {
    let mut order: Vec<usize> = (0..result.feature_set.len()).collect();
    order.sort_unstable_by_key(|&j| result.rank.ranks[j]);
    order
}

fn algorithm_color(a: Algorithm) -> &'static str {
    match a {
        Algorithm::DataCut => PALETTE[0],
        Algorithm::FeatureCut => PALETTE[1],
    }
}

fn nonempty(traces: &[DegradationTrace]) -> Vec<&DegradationTrace> {
    traces.iter().filter(|t| !t.steps.is_empty()).collect()
}

/// Observed AUC span, widened to include the reference line.
pub fn scatter_auc_range(traces: &[&DegradationTrace]) -> Option<(f64, f64)> {
    let (lo, hi) = extent(traces.iter().flat_map(|t| t.aucs()))?;
    Some(padded(
        (lo.min(AUC_REFERENCE_LINE), hi.max(AUC_REFERENCE_LINE)),
        0.04,
    ))
}

/// SVG charts; charts without data are skipped with a warning.
pub fn render_charts(r: &RunResults, warnings: &mut Vec<String>) -> Files {
    let mut files = Files::new();
    let traces = nonempty(&r.traces);
    if traces.is_empty() {
        if r.reference.is_some() {
            warnings.push("no degradation trace with steps; trace charts skipped".into());
        }
    } else if let Some(x) = scatter_auc_range(&traces) {
        for index in StabilityIndex::ALL {
            let y = extent(
                traces
                    .iter()
                    .flat_map(|t| t.steps.iter().map(|s| s.indexes.get(index))),
            )
            .map(|e| padded(e, 0.06))
            .unwrap_or((0.0, 1.0));
            let mut c = Chart::new(
                &format!("Stability ({}) versus AUC", index.name()),
                "mean AUC",
                index.name(),
                x,
                y,
            );
            c.x_ticks(5);
            c.y_ticks(5);
            c.vline(AUC_REFERENCE_LINE, REFERENCE_RED, Some("AUC 0.8"));
            for t in &traces {
                let color = algorithm_color(t.algorithm);
                for st in &t.steps {
                    c.point(st.result.mean_auc, st.indexes.get(index), color);
                }
                c.legend(t.algorithm.name(), color);
            }
            files.insert(
                format!("scatter_{}.svg", index.name()),
                c.finish().into_bytes(),
            );
        }
    }

    if r.differences.is_empty() {
        if !r.traces.is_empty() {
            warnings.push("no difference curve; differences chart skipped".into());
        }
    } else {
        let x = extent(r.differences.iter().map(|p| p.auc)).unwrap();
        let y = extent(
            r.differences
                .iter()
                .flat_map(|p| StabilityIndex::ALL.map(|i| p.difference.get(i)))
                .chain([0.0]),
        )
        .map(|e| padded(e, 0.06))
        .unwrap_or((-1.0, 1.0));
        let mut c = Chart::new("Feature cut minus data cut", "mean AUC", "difference", x, y);
        c.x_ticks(5);
        c.y_ticks(5);
        c.hline(0.0, "#777");
        for (k, index) in StabilityIndex::ALL.iter().enumerate() {
            let pts: Vec<(f64, f64)> = r
                .differences
                .iter()
                .map(|p| (p.auc, p.difference.get(*index)))
                .collect();
            c.polyline(&pts, PALETTE[k + 2]);
            c.legend(index.name(), PALETTE[k + 2]);
        }
        files.insert("differences.svg".into(), c.finish().into_bytes());
    }

    if let Some(reference) = &r.reference {
        if let Some(svg) = box_plot("Importance by rank: full data", reference) {
            files.insert("importance_reference.svg".into(), svg.into_bytes());
        }
    }
    for t in &traces {
        if let Some(last) = t.steps.last().filter(|_| t.steps.len() > 1) {
            let step = t.steps.len() - 1;
            let title = format!(
                "Importance by rank: {} step {step} (AUC {})",
                t.algorithm.name(),
                fmt_num(last.result.mean_auc)
            );
            if let Some(svg) = box_plot(&title, &last.result) {
                files.insert(
                    format!("importance_{}_last.svg", t.algorithm.name()),
                    svg.into_bytes(),
                );
            }
        }
    }

    if !r.adjacency.is_empty() {
        let x = extent(r.adjacency.iter().map(|a| a.mean_auc))
            .map(|e| padded(e, 0.04))
            .unwrap();
        let mut c = Chart::new(
            "Share of adjacent ranks distinguished",
            "mean AUC",
            "significant ratio",
            x,
            (0.0, 1.0),
        );
        c.x_ticks(5);
        c.y_ticks(5);
        for algorithm in [Algorithm::DataCut, Algorithm::FeatureCut] {
            let mut pts: Vec<(f64, f64)> = r
                .adjacency
                .iter()
                .filter(|a| a.algorithm == algorithm)
                .map(|a| (a.mean_auc, a.report.significant_ratio))
                .collect();
            if pts.is_empty() {
                continue;
            }
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let color = algorithm_color(algorithm);
            c.polyline(&pts, color);
            for (x, y) in &pts {
                c.point(*x, *y, color);
            }
            c.legend(algorithm.name(), color);
        }
        files.insert("adjacency_ratio.svg".into(), c.finish().into_bytes());
    }

    if let Some(th) = &r.theory {
        let surf = &th.surface;
        let (nk, ng) = (surf.k_values.len() as f64, surf.gaps.len() as f64);
        let mut c = Chart::new(
            &format!("Essential-sample probability, M = {}", surf.population),
            "training samples k",
            "importance gap",
            (0.0, nk),
            (0.0, ng),
        );
        for (g, row) in surf.values.iter().enumerate() {
            for (k, &p) in row.iter().enumerate() {
                let (x0, y0) = (k as f64, g as f64);
                c.rect(x0, y0, x0 + 1.0, y0 + 1.0, &heat_color(p), "white");
                let ink = if p > 0.6 { "black" } else { "white" };
                c.label(x0 + 0.5, y0 + 0.5, &format!("{p:.2}"), ink);
            }
        }
        c.x_categories(
            &surf
                .k_values
                .iter()
                .enumerate()
                .map(|(i, k)| (i as f64 + 0.5, k.to_string()))
                .collect::<Vec<_>>(),
        );
        for (g, gap) in surf.gaps.iter().enumerate() {
            c.label(-0.25, g as f64 + 0.5, &fmt_num(*gap), "black");
        }
        c.legend("p = 0", &heat_color(0.0));
        c.legend("p = 0.5", &heat_color(0.5));
        c.legend("p = 1", &heat_color(1.0));
        files.insert("theory_surface.svg".into(), c.finish().into_bytes());
    }
    files
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn box_plot(title: &str, result: &ExperimentResult) -> Option<String> {
    if result.importance_matrix.is_empty() || result.feature_set.is_empty() {
        return None;
    }
    let columns: Vec<Vec<f64>> = rank_order(result)
        .into_iter()
        .map(|j| {
            let mut col: Vec<f64> = result.importance_matrix.iter().map(|r| r[j]).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    let y = extent(columns.iter().flatten().copied().chain([0.0])).map(|e| padded(e, 0.05))?;
    let p = columns.len() as f64;
    let mut c = Chart::new(title, "rank", "Gini importance", (0.0, p), y);
    c.y_ticks(5);
    for (i, col) in columns.iter().enumerate() {
        let x = i as f64 + 0.5;
        let (q1, med, q3) = (quantile(col, 0.25), quantile(col, 0.5), quantile(col, 0.75));
        c.segment(x, col[0], x, q1, "#333");
        c.segment(x, q3, x, col[col.len() - 1], "#333");
        c.rect(x - 0.3, q1, x + 0.3, q3, "#9ecae1", "#333");
        c.segment(x - 0.3, med, x + 0.3, med, REFERENCE_RED);
    }
    let step = (columns.len() / 10).max(1);
    c.x_categories(
        &(0..columns.len())
            .step_by(step)
            .map(|i| (i as f64 + 0.5, (i + 1).to_string()))
            .collect::<Vec<_>>(),
    );
    Some(c.finish())
}

/// All report files for the requested formats.
pub fn render_report(r: &RunResults, formats: &[Format]) -> anyhow::Result<(Files, Vec<String>)> {
    let mut files = Files::new();
    let mut warnings = Vec::new();
    if formats.contains(&Format::Csv) {
        files.extend(render_tables(r)?);
    }
    if formats.contains(&Format::Json) {
        files.insert(RESULTS.into(), serde_json::to_vec_pretty(r)?);
    }
    if formats.contains(&Format::Svg) {
        files.extend(render_charts(r, &mut warnings));
    }
    Ok((files, warnings))
}

/// Writes `files` plus a manifest hashing each of them.
pub fn write_bundle(
    dir: &Path,
    command: Command,
    config: &RunConfig,
    files: &Files,
    warnings: Vec<String>,
    errors: Vec<String>,
) -> anyhow::Result<ReportBundle> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut entries = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        entries.push(ManifestEntry {
            path: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        config: config.clone(),
        files: entries,
        warnings,
        errors,
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(ReportBundle {
        dir: dir.to_path_buf(),
        manifest,
    })
}

pub fn read_manifest(dir: &Path) -> anyhow::Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}
