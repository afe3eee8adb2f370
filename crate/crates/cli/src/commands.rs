//! The pipeline subcommands. Each one opens the run directory, refuses to
//! run twice, reads its inputs (files from earlier stages or the config),
//! writes its artifacts, and closes with a checksummed manifest.

use std::path::PathBuf;

use log::info;
use serde::{Deserialize, Serialize};

use hivecast::evaluate::{
    compute_metrics, histogram, kfold_indices, per_hive_metric_distribution, random_search_cv,
    split_train_test_by_history, HiveMetrics, MetricReport, MetricScope, Metrics, ParamSpace,
    PeriodScope, SearchResult, SearchSpace, SplitScope, TrainTestSplit,
};
use hivecast::explain::{
    impurity_importance, permutation_importance, sample_background, shap_global_summary,
    Explanation, ImportanceMethod, ShapConfig, ShapSummary,
};
use hivecast::ingest::{
    aggregate_cells, attach_weather, group_by_hive, parse_hive_csv, parse_weather_csv,
    resample_daily, LocatedSeries,
};
use hivecast::models::{fit_model, EnsembleModel, ModelParams};
use hivecast::preprocess::{assemble_feature_matrix, preprocess_panel, CleaningReport, PreparedHive};
use hivecast::synthgen::generate_panel;
use hivecast::Matrix;

use crate::config::{ModelFamily, Period, PipelineConfig, SCHEMA_VERSION};
use crate::errors::CliError;
use crate::matrix_csv::{matrix_from_csv, matrix_to_csv};
use crate::rundir::{manifest_rel, sha256_hex, Manifest, RunDir};

const HIVES_CSV: &str = "data/hives.csv";
const WEATHER_CSV: &str = "data/weather.csv";
const GROUND_TRUTH: &str = "data/ground-truth.json";
const INGEST_PANEL: &str = "ingest/panel.json";
const INGEST_SUMMARY: &str = "ingest/summary.json";
const CLEAN_PANEL: &str = "clean/panel.json";
const CLEAN_REPORT: &str = "clean/report.json";
const MATRIX_CSV: &str = "features/matrix.csv";
const METRICS_JSON: &str = "metrics/metrics.json";
const PER_HIVE_CSV: &str = "metrics/per-hive.csv";
const HISTOGRAMS_CSV: &str = "metrics/histograms.csv";
const IMPORTANCE_CSV: &str = "explain/importance.csv";
const SHAP_CSV: &str = "explain/shap.csv";
const REPORT_JSON: &str = "report/report.json";

fn model_rel(family: ModelFamily) -> String {
    format!("models/{}.json", family.short())
}

fn tuned_rel(family: ModelFamily) -> String {
    format!("tune/{}-best.json", family.short())
}

fn trials_rel(family: ModelFamily) -> String {
    format!("tune/{}-trials.csv", family.short())
}

/// Generates the configured synthetic scenario into the run directory.
pub fn synth(config: &PipelineConfig) -> Result<Manifest, CliError> {
    let mut run = RunDir::open(&config.out_dir)?;
    run.ensure_not_ran("synth")?;
    let scenario = config.synth.scenario(config.seed);
    let panel = generate_panel(&scenario)?;
    info!(
        "synth: {} hives x {} days -> {} defects",
        scenario.n_hives,
        scenario.n_days,
        panel.manifest.defects.len()
    );
    run.write_bytes(HIVES_CSV, panel.hive_csv.as_bytes())?;
    run.write_bytes(WEATHER_CSV, panel.weather_csv.as_bytes())?;
    run.write_json(GROUND_TRUTH, &panel.manifest)?;
    run.finish("synth", config.seed, config)
}

#[derive(Debug, Serialize, Deserialize)]
struct IngestSummary {
    schema_version: u32,
    n_hives: usize,
    n_weather_cells: usize,
    malformed_hive_rows: usize,
    malformed_weather_rows: usize,
}

/// Where an input CSV comes from: the config, or a `synth` artifact.
fn input_path(
    run: &RunDir,
    configured: &Option<PathBuf>,
    artifact: &str,
    what: &str,
) -> Result<PathBuf, CliError> {
    if let Some(path) = configured {
        return Ok(path.clone());
    }
    let fallback = run.path(artifact);
    if fallback.exists() {
        return Ok(fallback);
    }
    Err(CliError::MissingArtifact {
        what: what.to_owned(),
        path: fallback,
        producer: "synth".to_owned(),
    })
}

/// Parses both CSVs, resamples hives to days, and joins weather onto them.
pub fn ingest(config: &PipelineConfig) -> Result<Manifest, CliError> {
    let mut run = RunDir::open(&config.out_dir)?;
    run.ensure_not_ran("ingest")?;

    let hive_path = input_path(&run, &config.inputs.hive_csv, HIVES_CSV, "hive telemetry CSV")?;
    let weather_path =
        input_path(&run, &config.inputs.weather_csv, WEATHER_CSV, "weather grid CSV")?;
    let hive_bytes = std::fs::read(&hive_path)
        .map_err(|source| CliError::ReadFile { path: hive_path, source })?;
    let weather_bytes = std::fs::read(&weather_path)
        .map_err(|source| CliError::ReadFile { path: weather_path, source })?;

    let hives = parse_hive_csv(hive_bytes.as_slice())?;
    let weather = parse_weather_csv(weather_bytes.as_slice())?;
    let daily_cells = aggregate_cells(&weather.cells);

    let mut panel: Vec<LocatedSeries> = Vec::new();
    for (_, observations) in group_by_hive(hives.observations) {
        let located = resample_daily(&observations)?;
        let series = attach_weather(&located, &daily_cells, &config.join)?;
        panel.push(LocatedSeries { series, location: located.location });
    }
    info!("ingest: {} hives, {} weather cells", panel.len(), weather.cells.len());

    run.write_json(INGEST_PANEL, &panel)?;
    run.write_json(
        INGEST_SUMMARY,
        &IngestSummary {
            schema_version: SCHEMA_VERSION,
            n_hives: panel.len(),
            n_weather_cells: weather.cells.len(),
            malformed_hive_rows: hives.malformed_rows,
            malformed_weather_rows: weather.malformed_rows,
        },
    )?;
    run.finish("ingest", config.seed, config)
}

/// Runs the cleaning chain and writes the survivors plus a filter report.
pub fn clean(config: &PipelineConfig) -> Result<Manifest, CliError> {
    let mut run = RunDir::open(&config.out_dir)?;
    run.ensure_not_ran("clean")?;
    let panel: Vec<LocatedSeries> = run.read_json(INGEST_PANEL, "ingested panel", "ingest")?;
    let (prepared, report) = preprocess_panel(panel, &config.cleaning);
    info!(
        "clean: kept {}/{} hives",
        prepared.len(),
        report.hives.len()
    );
    run.write_json(CLEAN_PANEL, &prepared)?;
    run.write_json(CLEAN_REPORT, &report)?;
    run.finish("clean", config.seed, config)
}

/// Builds the supervised lag matrix and writes it as CSV.
pub fn featurize(config: &PipelineConfig) -> Result<Manifest, CliError> {
    let mut run = RunDir::open(&config.out_dir)?;
    run.ensure_not_ran("featurize")?;
    let prepared: Vec<PreparedHive> = run.read_json(CLEAN_PANEL, "cleaned panel", "clean")?;
    let matrix = assemble_feature_matrix(&prepared, &config.cleaning)?;
    info!("featurize: {} rows x {} features", matrix.n_rows(), matrix.n_features());
    run.write_bytes(MATRIX_CSV, &matrix_to_csv(&matrix))?;
    run.finish("featurize", config.seed, config)
}

fn load_matrix(run: &RunDir) -> Result<Matrix, CliError> {
    let bytes = run.read_bytes(MATRIX_CSV, "feature matrix", "featurize")?;
    matrix_from_csv(&bytes, &run.path(MATRIX_CSV))
}

fn load_split(matrix: &Matrix, config: &PipelineConfig) -> Result<TrainTestSplit, CliError> {
    Ok(split_train_test_by_history(matrix, config.split.train_fraction)?)
}

/// The parameters `train` fits a family with: tuned ones if `tune` ran.
fn train_params(
    run: &RunDir,
    config: &PipelineConfig,
    family: ModelFamily,
) -> Result<(ModelParams, bool), CliError> {
    if family.is_tunable() && run.path(&tuned_rel(family)).exists() {
        let params: ModelParams = run.read_json(&tuned_rel(family), "tuned parameters", "tune")?;
        return Ok((params, true));
    }
    let params = match family {
        ModelFamily::Ols => ModelParams::Linear,
        ModelFamily::Rf => ModelParams::RandomForest(config.train.rf.clone()),
        ModelFamily::Gbt => ModelParams::GradientBoosting(config.train.gbt.clone()),
    };
    Ok((params, false))
}

/// Fits the selected families on the training split and serializes them.
pub fn train(config: &PipelineConfig) -> Result<Manifest, CliError> {
    let mut run = RunDir::open(&config.out_dir)?;
    run.ensure_not_ran("train")?;
    let matrix = load_matrix(&run)?;
    let split = load_split(&matrix, config)?;
    let train_matrix = matrix.subset(&split.train_rows);
    for family in config.models.families() {
        let (params, tuned) = train_params(&run, config, family)?;
        let model = fit_model(&train_matrix, &params, config.seed)?;
        info!(
            "train: {} on {} rows ({} parameters)",
            family.short(),
            train_matrix.n_rows(),
            if tuned { "tuned" } else { "configured" }
        );
        run.write_json(&model_rel(family), &model)?;
    }
    run.finish("train", config.seed, config)
}

/// Random-search cross-validation over the training split.
pub fn tune(config: &PipelineConfig) -> Result<Manifest, CliError> {
    let mut run = RunDir::open(&config.out_dir)?;
    run.ensure_not_ran("tune")?;
    let families: Vec<ModelFamily> =
        config.models.families().into_iter().filter(ModelFamily::is_tunable).collect();
    if families.is_empty() {
        return Err(CliError::NoModelSelected(
            "tune searches rf or gbt parameters; ols has none".to_owned(),
        ));
    }
    let matrix = load_matrix(&run)?;
    let split = load_split(&matrix, config)?;
    // Folds depend only on the seed and rows, but log them once for the record.
    let folds = kfold_indices(&matrix, &split.train_rows, config.tune.k_folds, config.seed)?;
    info!(
        "tune: {} folds of ~{} rows",
        folds.len(),
        folds.first().map_or(0, Vec::len)
    );
    for family in families {
        let space = match family {
            ModelFamily::Rf => ParamSpace::RandomForest(config.tune.rf_grid.clone()),
            ModelFamily::Gbt => ParamSpace::GradientBoosting(config.tune.gbt_grid.clone()),
            ModelFamily::Ols => unreachable!("filtered above"),
        };
        let search = SearchSpace::new(space, config.tune.n_trials, config.seed);
        let result = random_search_cv(&matrix, &split.train_rows, &search, config.tune.k_folds)?;
        info!(
            "tune: {} best trial {} mean CV MSE {:.6}",
            family.short(),
            result.best_trial,
            result.trials[result.best_trial].mean_cv_mse
        );
        run.write_bytes(&trials_rel(family), &trials_to_csv(&result))?;
        run.write_json(&tuned_rel(family), &result.best_params)?;
    }
    run.finish("tune", config.seed, config)
}

fn trials_to_csv(result: &SearchResult) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["trial", "params_json", "mean_cv_mse", "std_cv_mse", "best"])
        .expect("csv write to memory");
    for record in &result.trials {
        writer
            .write_record([
                record.trial.to_string(),
                serde_json::to_string(&record.params).expect("serializable params"),
                record.mean_cv_mse.to_string(),
                record.std_cv_mse.to_string(),
                (record.trial == result.best_trial).to_string(),
            ])
            .expect("csv write to memory");
    }
    writer.into_inner().expect("csv write to memory")
}

fn load_model(
    run: &RunDir,
    family: ModelFamily,
) -> Result<EnsembleModel<f64>, CliError> {
    run.read_json(&model_rel(family), "model", "train")
}

/// Metrics for one family over one split, in both period scopes.
fn scoped_reports(
    model: &EnsembleModel<f64>,
    rows: &Matrix,
    split: SplitScope,
) -> Result<Vec<MetricReport>, CliError> {
    let mut out = Vec::new();
    for (period, scoped) in
        [(PeriodScope::Complete, rows.clone()), (PeriodScope::Production, rows.production_period())]
    {
        if scoped.n_rows() == 0 {
            continue;
        }
        let predictions = model.predict(&scoped)?;
        let metrics: Metrics<f64> = compute_metrics(scoped.targets(), &predictions)?;
        out.push(MetricReport {
            scope: MetricScope { split, period, hive_id: None },
            metrics,
        });
    }
    Ok(out)
}

/// The metrics document `evaluate` writes.
#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub schema_version: u32,
    pub seed: u64,
    pub models: Vec<ModelMetrics>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model: String,
    pub reports: Vec<MetricReport>,
}

fn optional_field(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Scores every trained model on train/test x complete/production, plus
/// per-hive test metrics and their histograms.
pub fn evaluate(config: &PipelineConfig) -> Result<Manifest, CliError> {
    let mut run = RunDir::open(&config.out_dir)?;
    run.ensure_not_ran("evaluate")?;
    let matrix = load_matrix(&run)?;
    let split = load_split(&matrix, config)?;
    let train_matrix = matrix.subset(&split.train_rows);
    let test_matrix = matrix.subset(&split.test_rows);

    let mut documents = Vec::new();
    let mut per_hive = csv::Writer::from_writer(Vec::new());
    per_hive
        .write_record(["model", "hive_id", "n_rows", "r_squared", "mse", "mape"])
        .expect("csv write to memory");
    let mut bins = csv::Writer::from_writer(Vec::new());
    bins.write_record(["model", "metric", "lo", "hi", "count"]).expect("csv write to memory");

    for family in config.models.families() {
        let model = load_model(&run, family)?;
        let mut reports = scoped_reports(&model, &train_matrix, SplitScope::Train)?;
        reports.extend(scoped_reports(&model, &test_matrix, SplitScope::Test)?);

        // Per-hive distribution over the test split (the plot-ready export).
        let predictions = model.predict(&test_matrix)?;
        let hive_metrics: Vec<HiveMetrics<f64>> =
            per_hive_metric_distribution(&test_matrix, &predictions)?;
        for hive in &hive_metrics {
            per_hive
                .write_record([
                    family.short().to_owned(),
                    hive.hive_id.to_string(),
                    hive.metrics.n_rows.to_string(),
                    optional_field(hive.metrics.r_squared),
                    hive.metrics.mse.to_string(),
                    optional_field(hive.metrics.mape),
                ])
                .expect("csv write to memory");
        }
        for (metric, values) in [
            ("r_squared", hive_metrics.iter().filter_map(|h| h.metrics.r_squared).collect::<Vec<f64>>()),
            ("mse", hive_metrics.iter().map(|h| h.metrics.mse).collect()),
            ("mape", hive_metrics.iter().filter_map(|h| h.metrics.mape).collect()),
        ] {
            for bin in histogram(&values, config.evaluate.histogram_bins) {
                bins.write_record([
                    family.short().to_owned(),
                    metric.to_owned(),
                    bin.lo.to_string(),
                    bin.hi.to_string(),
                    bin.count.to_string(),
                ])
                .expect("csv write to memory");
            }
        }
        info!("evaluate: {} scored {} scopes", family.short(), reports.len());
        documents.push(ModelMetrics { model: family.short().to_owned(), reports });
    }

    run.write_json(
        METRICS_JSON,
        &MetricsDocument { schema_version: SCHEMA_VERSION, seed: config.seed, models: documents },
    )?;
    run.write_bytes(PER_HIVE_CSV, &per_hive.into_inner().expect("csv write to memory"))?;
    run.write_bytes(HISTOGRAMS_CSV, &bins.into_inner().expect("csv write to memory"))?;
    run.finish("evaluate", config.seed, config)
}

/// Rows explanations are computed over: the test split, optionally narrowed
/// to the production period.
fn explain_rows(test_matrix: &Matrix, period: Period) -> Matrix {
    match period {
        Period::Complete => test_matrix.clone(),
        Period::Production => test_matrix.production_period(),
    }
}

fn write_importance(
    writer: &mut csv::Writer<Vec<u8>>,
    family: ModelFamily,
    explanation: &Explanation<f64>,
) {
    let method = match explanation.method {
        ImportanceMethod::Impurity => "impurity",
        ImportanceMethod::Permutation => "permutation",
        ImportanceMethod::ShapMeanAbs => "shap_mean_abs",
    };
    for (j, name) in explanation.feature_names.iter().enumerate() {
        writer
            .write_record([
                family.short().to_owned(),
                method.to_owned(),
                name.clone(),
                explanation.scores[j].to_string(),
                explanation.std.as_ref().map(|s| s[j].to_string()).unwrap_or_default(),
            ])
            .expect("csv write to memory");
    }
}

/// Impurity, permutation, and Shapley explanations for the trained models.
pub fn explain(config: &PipelineConfig) -> Result<Manifest, CliError> {
    let mut run = RunDir::open(&config.out_dir)?;
    run.ensure_not_ran("explain")?;
    let matrix = load_matrix(&run)?;
    let split = load_split(&matrix, config)?;
    let train_matrix = matrix.subset(&split.train_rows);
    let test_matrix = matrix.subset(&split.test_rows);
    let rows = explain_rows(&test_matrix, config.period);
    if rows.n_rows() == 0 {
        return Err(CliError::NoModelSelected(format!(
            "no test rows fall in the {:?} period",
            config.period
        )));
    }

    let background = sample_background(&train_matrix, config.explain.shap_background, config.seed);
    let shap_config = ShapConfig {
        background_size: config.explain.shap_background,
        exact_max_features: config.explain.shap_exact_max_features,
        mc_samples: config.explain.shap_mc_samples,
        seed: config.seed,
    };
    // Spread the explained rows across the whole test period.
    let stride = (rows.n_rows() / config.explain.shap_rows.max(1)).max(1);
    let probe_rows: Vec<usize> =
        (0..rows.n_rows()).step_by(stride).take(config.explain.shap_rows.max(1)).collect();
    let probe = rows.subset(&probe_rows);

    let mut importance = csv::Writer::from_writer(Vec::new());
    importance
        .write_record(["model", "method", "feature", "score", "std"])
        .expect("csv write to memory");
    let mut shap_csv = csv::Writer::from_writer(Vec::new());
    shap_csv
        .write_record(["model", "hive_id", "date", "feature", "phi", "feature_value", "baseline"])
        .expect("csv write to memory");

    for family in config.models.families() {
        let model = load_model(&run, family)?;
        if model.is_tree_based() {
            write_importance(&mut importance, family, &impurity_importance(&model)?);
        }
        let permutation = permutation_importance(
            &model,
            &rows,
            config.explain.permutation_repeats,
            config.seed,
        )?;
        write_importance(&mut importance, family, &permutation);

        let summary: ShapSummary<f64> =
            shap_global_summary(&model, &probe, &background, &shap_config)?;
        write_importance(&mut importance, family, &summary.to_explanation());
        for (i, row) in summary.rows.iter().enumerate() {
            let meta = &probe.meta()[i];
            for (j, name) in model.feature_names.iter().enumerate() {
                shap_csv
                    .write_record([
                        family.short().to_owned(),
                        meta.hive_id.to_string(),
                        meta.date.to_string(),
                        name.clone(),
                        row.phi[j].to_string(),
                        probe.value(i, j).to_string(),
                        row.baseline.to_string(),
                    ])
                    .expect("csv write to memory");
            }
        }
        info!("explain: {} done ({} shap rows)", family.short(), probe.n_rows());
    }

    run.write_bytes(IMPORTANCE_CSV, &importance.into_inner().expect("csv write to memory"))?;
    run.write_bytes(SHAP_CSV, &shap_csv.into_inner().expect("csv write to memory"))?;
    run.finish("explain", config.seed, config)
}

/// One stage's entry in the bundled report.
#[derive(Debug, Serialize, Deserialize)]
pub struct StageSummary {
    pub command: String,
    pub config_sha256: String,
    pub artifacts: Vec<String>,
    /// Whether every artifact still matches its manifest checksum.
    pub verified: bool,
}

/// The bundle `report` writes: pipeline provenance plus the key result
/// documents inlined for one-file consumption.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub seed: u64,
    pub stages: Vec<StageSummary>,
    pub cleaning: Option<CleaningReport>,
    pub metrics: Option<MetricsDocument>,
    pub tuned_params: Vec<(String, ModelParams)>,
}

const STAGE_ORDER: [&str; 8] =
    ["synth", "ingest", "clean", "featurize", "tune", "train", "evaluate", "explain"];

/// Bundles manifests and key artifacts into one audit document, verifying
/// every checksum on the way.
pub fn report(config: &PipelineConfig) -> Result<Manifest, CliError> {
    let mut run = RunDir::open(&config.out_dir)?;
    run.ensure_not_ran("report")?;

    let mut stages = Vec::new();
    for command in STAGE_ORDER {
        let rel = manifest_rel(command);
        if !run.path(&rel).exists() {
            continue;
        }
        let manifest: Manifest = run.read_json(&rel, "stage manifest", command)?;
        let mut verified = true;
        for artifact in &manifest.artifacts {
            let bytes = run.read_bytes(&artifact.path, "manifest-listed artifact", command)?;
            if sha256_hex(&bytes) != artifact.sha256 {
                verified = false;
            }
        }
        stages.push(StageSummary {
            command: command.to_owned(),
            config_sha256: manifest.config_sha256,
            artifacts: manifest.artifacts.iter().map(|a| a.path.clone()).collect(),
            verified,
        });
    }

    let cleaning: Option<CleaningReport> = if run.path(CLEAN_REPORT).exists() {
        Some(run.read_json(CLEAN_REPORT, "cleaning report", "clean")?)
    } else {
        None
    };
    let metrics: Option<MetricsDocument> = if run.path(METRICS_JSON).exists() {
        Some(run.read_json(METRICS_JSON, "metrics", "evaluate")?)
    } else {
        None
    };
    let mut tuned_params = Vec::new();
    for family in [ModelFamily::Rf, ModelFamily::Gbt] {
        let rel = tuned_rel(family);
        if run.path(&rel).exists() {
            let params: ModelParams = run.read_json(&rel, "tuned parameters", "tune")?;
            tuned_params.push((family.short().to_owned(), params));
        }
    }

    info!("report: bundled {} stages", stages.len());
    run.write_json(
        REPORT_JSON,
        &ReportDocument {
            schema_version: SCHEMA_VERSION,
            seed: config.seed,
            stages,
            cleaning,
            metrics,
            tuned_params,
        },
    )?;
    run.finish("report", config.seed, config)
}
