//! Small end-to-end runs through the public API.

use fistab_core::dataset::{generate_synthetic, parse_csv, CsvOptions};
use fistab_core::degradation::{
    bootstrap_experiment, compare_traces, run_data_cutting, run_feature_cutting, traces_csv,
    TRACE_CSV_HEADER,
};
use fistab_core::forest::fit;
use fistab_core::metrics::auc;
use fistab_core::{
    Algorithm, ExperimentConfig, ForestHyperparams, StabilityIndex, StabilityIndexes,
    SyntheticSpec, TerminationReason,
};

fn small_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        n_bootstraps: 5,
        forest: ForestHyperparams {
            n_trees: 10,
            ..Default::default()
        },
        seed,
        ..Default::default()
    }
}

#[test]
fn synthetic_data_round_trips_through_csv() {
    let spec = SyntheticSpec::calibrated(4, 50, 0.5, 3).unwrap();
    let d = generate_synthetic(&spec).unwrap();
    let mut text = d.feature_names().join(",") + ",label\n";
    for (row, y) in d.features().rows().zip(d.labels()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        text += &format!("{},{y}\n", cells.join(","));
    }
    let back = parse_csv(text.as_bytes(), "label", &CsvOptions::default()).unwrap();
    assert_eq!(back.features(), d.features());
    assert_eq!(back.labels(), d.labels());
    assert_eq!(back.feature_names(), d.feature_names());
}

#[test]
fn forest_separates_a_linear_rule() {
    let spec = SyntheticSpec::calibrated(5, 600, 0.5, 9).unwrap();
    let d = generate_synthetic(&spec).unwrap();
    let model = fit(
        &d,
        &ForestHyperparams {
            n_trees: 30,
            ..Default::default()
        },
    )
    .unwrap();
    let scores = model.predict_proba(d.features()).unwrap();
    assert!(auc(d.labels(), &scores).unwrap() > 0.95);
    let imp = model.gini_importance();
    assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(imp[4] > imp[0]);
}

#[test]
fn both_traces_start_at_the_reference_and_compare() {
    let spec = SyntheticSpec::reference_dataset(1, 400, 17).unwrap();
    let d = generate_synthetic(&spec).unwrap();
    let c = small_config(17);
    let reference = bootstrap_experiment(&d, &c).unwrap();
    let data = run_data_cutting(&d, &c).unwrap();
    let feature = run_feature_cutting(&d, &reference, &c).unwrap();

    assert_eq!(data.algorithm, Algorithm::DataCut);
    assert_eq!(feature.algorithm, Algorithm::FeatureCut);
    assert_eq!(data.steps[0].size, 400);
    assert_eq!(feature.steps[0].size, 20);
    for t in [&data, &feature] {
        assert_eq!(t.steps[0].result, reference);
        assert_eq!(t.steps[0].indexes, StabilityIndexes::IDENTITY);
    }
    assert_ne!(data.termination, TerminationReason::FeatureExhaustion);
    assert!(feature.steps.windows(2).all(|w| w[1].size < w[0].size));

    let cmp = compare_traces(&data, &feature).unwrap();
    assert_eq!(
        cmp.iter().map(|(i, _)| *i).collect::<Vec<_>>(),
        StabilityIndex::ALL.to_vec()
    );
    let csv = traces_csv(&[data.clone(), feature.clone()]).unwrap();
    assert!(csv.starts_with(&TRACE_CSV_HEADER.join(",")));
    let rows = StabilityIndex::ALL.len() * (data.steps.len() + feature.steps.len());
    assert_eq!(csv.lines().count(), 1 + rows);
}

#[test]
fn reruns_with_the_same_seed_are_identical() {
    let spec = SyntheticSpec::calibrated(6, 200, 0.4, 1).unwrap();
    let d = generate_synthetic(&spec).unwrap();
    let a = run_data_cutting(&d, &small_config(4)).unwrap();
    let b = run_data_cutting(&d, &small_config(4)).unwrap();
    assert_eq!(a, b);
    let other = bootstrap_experiment(&d, &small_config(5)).unwrap();
    assert_ne!(other.aucs, a.steps[0].result.aucs);
}
