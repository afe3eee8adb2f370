//! One JSON document drives every subcommand.
//!
//! Unknown keys are rejected, every field has a default, and the merged
//! ("effective") config is echoed into the run directory so a run can always
//! be reproduced from its artifacts alone.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hivecast::evaluate::{GbtGrid, RfGrid};
use hivecast::ingest::JoinParams;
use hivecast::models::{ForestParams, GbtParams, SplitFeatures, TreeParams};
use hivecast::preprocess::CleaningConfig;
use hivecast::synthgen::ScenarioConfig;

use crate::errors::CliError;

/// Version stamp written into every JSON artifact this binary emits.
pub const SCHEMA_VERSION: u32 = 1;

/// Which rows metrics and explanations are computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    /// Every cleaned row.
    Complete,
    /// Rows dated March through September.
    Production,
}

/// Which model families a command trains, tunes, evaluates, or explains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelSelection {
    All,
    Rf,
    Gbt,
    Ols,
}

impl ModelSelection {
    /// Short names of the selected families, in fixed emission order.
    pub fn families(&self) -> Vec<ModelFamily> {
        match self {
            ModelSelection::All => {
                vec![ModelFamily::Ols, ModelFamily::Rf, ModelFamily::Gbt]
            }
            ModelSelection::Rf => vec![ModelFamily::Rf],
            ModelSelection::Gbt => vec![ModelFamily::Gbt],
            ModelSelection::Ols => vec![ModelFamily::Ols],
        }
    }
}

/// One concrete model family and its artifact naming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Ols,
    Rf,
    Gbt,
}

impl ModelFamily {
    pub fn short(&self) -> &'static str {
        match self {
            ModelFamily::Ols => "ols",
            ModelFamily::Rf => "rf",
            ModelFamily::Gbt => "gbt",
        }
    }

    pub fn is_tunable(&self) -> bool {
        !matches!(self, ModelFamily::Ols)
    }
}

/// Explicit input files for `ingest`; when absent, the files written by
/// `synth` into the same run directory are used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputPaths {
    pub hive_csv: Option<PathBuf>,
    pub weather_csv: Option<PathBuf>,
}

/// Scenario presets for `synth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthPreset {
    /// Clean panel with injected defects; exercises the cleaning chain.
    Default,
    /// Threshold/interaction ground truth that rewards tree ensembles.
    Nonlinear,
    /// Purely linear ground truth with the same noise profile.
    Linear,
}

/// Controls for the `synth` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub preset: SynthPreset,
    pub n_hives: usize,
    pub n_days: usize,
    /// Full scenario override. When set, it wins over `preset`/`n_hives`/
    /// `n_days`; only its seed is still replaced by the pipeline seed.
    pub scenario: Option<ScenarioConfig>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { preset: SynthPreset::Default, n_hives: 40, n_days: 160, scenario: None }
    }
}

impl SynthConfig {
    /// The scenario this config describes, with the pipeline seed applied.
    pub fn scenario(&self, seed: u64) -> ScenarioConfig {
        let mut scenario = match &self.scenario {
            Some(full) => full.clone(),
            None => match self.preset {
                SynthPreset::Default => ScenarioConfig::default_scenario(seed),
                SynthPreset::Nonlinear => ScenarioConfig::nonlinear(self.n_hives, self.n_days, seed),
                SynthPreset::Linear => ScenarioConfig::linear(self.n_hives, self.n_days, seed),
            },
        };
        if self.scenario.is_none() && self.preset == SynthPreset::Default {
            scenario.n_hives = self.n_hives;
            scenario.n_days = self.n_days;
        }
        scenario.seed = seed;
        scenario
    }
}

/// Train/test split controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    /// Leading fraction of each hive's history used for training.
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.8 }
    }
}

/// Fixed parameters used by `train` when no tuned parameters are present in
/// the run directory. Defaults are the reference experiment's tuned values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub rf: ForestParams,
    pub gbt: GbtParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            rf: ForestParams {
                n_trees: 50,
                tree: TreeParams {
                    max_depth: Some(30),
                    min_samples_split: 200,
                    min_samples_leaf: 200,
                    ccp_alpha: 0.0,
                },
                split_features: SplitFeatures::All,
                bootstrap: true,
            },
            gbt: GbtParams { eta: 0.08, max_depth: Some(6), min_child_weight: 7, n_rounds: 200 },
        }
    }
}

/// Random-search controls for `tune`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneConfig {
    pub k_folds: usize,
    pub n_trials: usize,
    pub rf_grid: RfGrid,
    pub gbt_grid: GbtGrid,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            k_folds: 5,
            n_trials: 2500,
            rf_grid: RfGrid::default(),
            gbt_grid: GbtGrid::default(),
        }
    }
}

/// Controls for `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    /// Bin count of the per-hive metric histograms.
    pub histogram_bins: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig { histogram_bins: 20 }
    }
}

/// Controls for `explain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainConfig {
    /// Shuffles per feature for permutation importance.
    pub permutation_repeats: usize,
    /// How many test rows receive per-row Shapley attributions.
    pub shap_rows: usize,
    /// Training rows sampled as the Shapley reference background.
    pub shap_background: usize,
    /// Feature-count ceiling for the exact Shapley enumeration.
    pub shap_exact_max_features: usize,
    /// Permutation draws per row for the sampled Shapley estimator.
    pub shap_mc_samples: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            permutation_repeats: 5,
            shap_rows: 100,
            shap_background: 100,
            shap_exact_max_features: 15,
            shap_mc_samples: 2048,
        }
    }
}

/// Everything a run needs. Flags override the file; the merged result is
/// echoed to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub schema_version: u32,
    /// Master seed; every stochastic stage derives its own stream from it.
    pub seed: u64,
    /// Run directory all artifacts are written to.
    pub out_dir: PathBuf,
    pub period: Period,
    pub models: ModelSelection,
    pub inputs: InputPaths,
    pub synth: SynthConfig,
    pub join: JoinParams,
    pub cleaning: CleaningConfig,
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub tune: TuneConfig,
    pub evaluate: EvaluateConfig,
    pub explain: ExplainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            seed: 42,
            out_dir: PathBuf::from("hivecast-run"),
            period: Period::Complete,
            models: ModelSelection::All,
            inputs: InputPaths::default(),
            synth: SynthConfig::default(),
            join: JoinParams::default(),
            cleaning: CleaningConfig::default(),
            split: SplitConfig::default(),
            train: TrainConfig::default(),
            tune: TuneConfig::default(),
            evaluate: EvaluateConfig::default(),
            explain: ExplainConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Loads a config file, or the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let bytes = std::fs::read(path)
            .map_err(|source| CliError::ReadFile { path: path.to_owned(), source })?;
        let config: PipelineConfig = serde_json::from_slice(&bytes).map_err(|err| {
            CliError::InvalidConfig { path: path.to_owned(), message: err.to_string() }
        })?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::InvalidConfig {
                path: path.to_owned(),
                message: format!(
                    "unsupported schema_version {} (this binary writes {})",
                    config.schema_version, SCHEMA_VERSION
                ),
            });
        }
        config.validate(path)?;
        Ok(config)
    }

    fn validate(&self, path: &Path) -> Result<(), CliError> {
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(CliError::InvalidConfig {
                path: path.to_owned(),
                message: format!("split.train_fraction must be in (0, 1), got {f}"),
            });
        }
        if self.tune.k_folds < 2 {
            return Err(CliError::InvalidConfig {
                path: path.to_owned(),
                message: format!("tune.k_folds must be at least 2, got {}", self.tune.k_folds),
            });
        }
        Ok(())
    }
}
