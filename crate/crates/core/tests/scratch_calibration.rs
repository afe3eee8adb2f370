//! Temporary calibration harness (not part of the suite).

use std::time::Instant;

use hivecast::evaluate::{compute_metrics, split_train_test_by_history};
use hivecast::ingest::{
    aggregate_cells, attach_weather, group_by_hive, parse_hive_csv, parse_weather_csv,
    resample_daily, JoinParams, LocatedSeries,
};
use hivecast::models::{
    fit_gradient_boosting, fit_linear_ols, fit_random_forest, ForestParams, GbtParams,
    SplitFeatures, TreeParams,
};
use hivecast::preprocess::{assemble_feature_matrix, preprocess_panel, CleaningConfig};
use hivecast::synthgen::{generate_panel, ScenarioConfig};
use hivecast::Matrix;

fn build_matrix(config: &ScenarioConfig) -> Option<Matrix> {
    let panel = generate_panel(config).unwrap();
    let parsed = parse_hive_csv(panel.hive_csv.as_bytes()).unwrap();
    let weather = parse_weather_csv(panel.weather_csv.as_bytes()).unwrap();
    let daily = aggregate_cells(&weather.cells);
    let params = JoinParams::default();
    let located: Vec<LocatedSeries> = group_by_hive(parsed.observations)
        .into_values()
        .map(|obs| {
            let located = resample_daily(&obs).unwrap();
            let series = attach_weather(&located, &daily, &params).unwrap();
            LocatedSeries { series, location: located.location }
        })
        .collect();
    let clean = CleaningConfig::default();
    let (prepared, report) = preprocess_panel(located, &clean);
    let removed: usize = report.hives.iter().map(|h| h.removed_rolling_z.len()).sum();
    let retained: usize = report.hives.iter().map(|h| h.retained_observations).sum();
    println!(
        "  kept {}/{} hives, rolling removed {removed}, retained d-obs {retained}",
        prepared.len(),
        report.hives.len()
    );
    assemble_feature_matrix(&prepared, &clean).ok()
}

fn r2(pred: &[f64], y: &[f64]) -> f64 {
    compute_metrics(y, pred).unwrap().r_squared.unwrap()
}

fn report(matrix: &Matrix) {
    let split = split_train_test_by_history(matrix, 0.8).unwrap();
    let train = matrix.subset(&split.train_rows);
    let test = matrix.subset(&split.test_rows);
    println!("  rows={} train={} test={}", matrix.n_rows(), train.n_rows(), test.n_rows());

    let ols = fit_linear_ols(&train).unwrap();
    let ols_test = r2(&ols.predict(&test).unwrap(), test.targets());
    println!("  ols: test R2 {ols_test:.4}");

    let t0 = Instant::now();
    let rf_params = ForestParams {
        n_trees: 60,
        tree: TreeParams {
            max_depth: Some(14),
            min_samples_split: 8,
            min_samples_leaf: 2,
            ccp_alpha: 0.0,
        },
        split_features: SplitFeatures::ThirdCeil,
        bootstrap: true,
    };
    let rf = fit_random_forest(&train, &rf_params, 1234).unwrap();
    let rf_test = r2(&rf.predict(&test).unwrap(), test.targets());
    println!("  rf : test R2 {rf_test:.4} gap {:+.4} (fit {:?})", rf_test - ols_test, t0.elapsed());

    let t0 = Instant::now();
    let gbt_params =
        GbtParams { eta: 0.08, max_depth: Some(6), min_child_weight: 7, n_rounds: 150 };
    let gbt = fit_gradient_boosting(&train, &gbt_params, 99).unwrap();
    let gbt_test = r2(&gbt.predict(&test).unwrap(), test.targets());
    println!(
        "  gbt: test R2 {gbt_test:.4} gap {:+.4} (fit {:?})",
        gbt_test - ols_test,
        t0.elapsed()
    );
}

#[test]
fn rankings() {
    use hivecast::explain::{
        impurity_importance, permutation_importance, sample_background, shap_global_summary,
        ShapConfig,
    };

    let mut ok_runs = 0;
    for seed in 0..10u64 {
        let config = ScenarioConfig::nonlinear(16, 300, 1000 + seed);
        let t0 = Instant::now();
        let Some(matrix) = build_matrix(&config) else {
            println!("seed {seed}: EMPTY");
            continue;
        };
        let split = split_train_test_by_history(&matrix, 0.8).unwrap();
        let train = matrix.subset(&split.train_rows);
        let test = matrix.subset(&split.test_rows);

        let rf_params = ForestParams {
            n_trees: 100,
            tree: TreeParams {
                max_depth: Some(20),
                min_samples_split: 8,
                min_samples_leaf: 2,
                ccp_alpha: 0.0,
            },
            split_features: SplitFeatures::ThirdCeil,
            bootstrap: true,
        };
        let rf = fit_random_forest(&train, &rf_params, 4242).unwrap();

        let imp = impurity_importance(&rf).unwrap();
        let perm = permutation_importance(&rf, &test, 5, 77).unwrap();
        let background = sample_background(&train, 50, 99);
        let probe_rows: Vec<usize> = (0..test.n_rows()).step_by(test.n_rows() / 40 + 1).collect();
        let probe = test.subset(&probe_rows);
        let shap_config = ShapConfig { mc_samples: 512, seed: 4100, ..ShapConfig::default() };
        let shap = shap_global_summary(&rf, &probe, &background, &shap_config)
            .unwrap()
            .to_explanation();

        let names = matrix.feature_names();
        let top5 = |ranking: &[usize]| -> Vec<&str> {
            ranking.iter().take(5).map(|&i| names[i].as_str()).collect()
        };
        let has = |top: &[&str]| {
            (top.contains(&"d_weight_lag1"), top.iter().any(|n| n.starts_with("d_temp_avg_lag")))
        };
        let ti = top5(&imp.ranking());
        let tp = top5(&perm.ranking());
        let ts = top5(&shap.ranking());
        let (wi, ci) = has(&ti);
        let (wp, cp) = has(&tp);
        let (ws, cs) = has(&ts);
        let pass = wi && ci && wp && cp && ws && cs;
        ok_runs += pass as u32;
        println!(
            "seed {seed}: pass={pass} ({:?})\n  imp : {ti:?}\n  perm: {tp:?}\n  shap: {ts:?}",
            t0.elapsed()
        );
    }
    println!("rankings pass {ok_runs}/10");
}

#[test]
fn calibrate() {
    for seed in [1, 7] {
        let config = ScenarioConfig::nonlinear(30, 500, seed);
        println!("nonlinear 30x500 seed {seed}");
        let t0 = Instant::now();
        match build_matrix(&config) {
            Some(m) => {
                println!("  build {:?}", t0.elapsed());
                report(&m);
            }
            None => println!("  EMPTY MATRIX"),
        }
    }

    for seed in [2, 8] {
        let config = ScenarioConfig::linear(30, 500, seed);
        println!("linear 30x500 seed {seed}");
        match build_matrix(&config) {
            Some(m) => report(&m),
            None => println!("  EMPTY MATRIX"),
        }
    }
}
