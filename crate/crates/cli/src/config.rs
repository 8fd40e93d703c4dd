//! Run configuration: a JSON document that mirrors every CLI flag.
//!
//! Precedence is flags, then the config file, then defaults. The fully
//! resolved form is written next to every run's outputs and can be fed back
//! with `--config` to reproduce it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tensorhar::eval::Grouping;
use tensorhar::federated::FedConfig;
use tensorhar::models::{ModelFamily, ModelSpec};
use tensorhar::signal::{FilterConfig, WindowConfig};

pub const DATA_ENV: &str = "TENSORHAR_DATA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    UciHar,
    CustomCsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum RepresentationChoice {
    /// Raw tensors for tensor models, feature vectors otherwise.
    #[default]
    Auto,
    FeatureVectors,
    RawTensors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default)]
    pub source: SourceKind,
    /// UCI HAR root, or a directory of CSV files.
    #[serde(default)]
    pub root: Option<PathBuf>,
    /// Explicit CSV files; when empty every `*.csv` under `root` is read.
    #[serde(default)]
    pub paths: Vec<PathBuf>,
    #[serde(default)]
    pub representation: RepresentationChoice,
    /// Class names in id order. Defaults to the six UCI HAR activities.
    #[serde(default)]
    pub classes: Option<Vec<String>>,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    /// Per-channel standardization fitted on the training split. Defaults
    /// to on for raw tensors and off for feature vectors.
    #[serde(default)]
    pub standardize: Option<bool>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            source: SourceKind::UciHar,
            root: None,
            paths: Vec::new(),
            representation: RepresentationChoice::Auto,
            classes: None,
            window: WindowConfig::default(),
            filter: FilterConfig::default(),
            standardize: None,
        }
    }
}

fn default_folds() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub grouping: Grouping,
    /// Custom CSV only: which subject-grouped fold is held out for testing.
    #[serde(default)]
    pub holdout_fold: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { folds: default_folds(), grouping: Grouping::None, holdout_fold: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: ModelFamily,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    /// Candidate values per hyperparameter; defaults to the family's grid.
    #[serde(default)]
    pub params: Option<BTreeMap<String, Vec<Value>>>,
    #[serde(default)]
    pub n_candidates: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub search: Option<SearchConfig>,
    #[serde(default)]
    pub fed: Option<FedConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// A configuration problem, reported with kind `config`.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Flags shared by every data-consuming subcommand.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: runs/<command>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs sequentially. Never changes the outputs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Dataset root [env: TENSORHAR_DATA].
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub source: Option<SourceKind>,
    #[arg(long, value_enum)]
    pub representation: Option<RepresentationChoice>,
    #[arg(long, value_enum)]
    pub grouping: Option<GroupingArg>,
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum GroupingArg {
    None,
    BySubject,
}

impl From<GroupingArg> for Grouping {
    fn from(g: GroupingArg) -> Self {
        match g {
            GroupingArg::None => Grouping::None,
            GroupingArg::BySubject => Grouping::BySubject,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct ModelArgs {
    /// svm, stm, logreg, knn or forest.
    #[arg(long)]
    pub model: Option<ModelFamily>,
    /// Inverse regularization strength.
    #[arg(long = "C", value_name = "C")]
    pub c: Option<f64>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// RBF width: a number or `scale`.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Neighbours for k-NN.
    #[arg(long)]
    pub k: Option<usize>,
    /// Any other hyperparameter as KEY=JSON, e.g. `--param max_depth=10`.
    #[arg(long = "param", value_name = "KEY=JSON")]
    pub params: Vec<String>,
}

impl ModelArgs {
    fn is_empty(&self) -> bool {
        self.c.is_none() && self.kernel.is_none() && self.gamma.is_none() && self.k.is_none() && self.params.is_empty()
    }

    /// Overlay the flags onto a hyperparameter object.
    fn apply(&self, params: &mut Map<String, Value>) -> Result<()> {
        if let Some(c) = self.c {
            params.insert("C".into(), c.into());
        }
        let gamma = match self.gamma.as_deref() {
            None => None,
            Some("scale") => Some(Value::from("scale")),
            Some(g) => Some(Value::from(g.parse::<f64>().map_err(|_| config_error(format!("invalid --gamma `{g}`")))?)),
        };
        match (self.kernel, gamma) {
            (Some(KernelArg::Linear), _) => {
                params.insert("kernel".into(), serde_json::json!({"type": "linear"}));
            }
            (Some(KernelArg::Rbf), g) => {
                let g = g.unwrap_or_else(|| Value::from("scale"));
                params.insert("kernel".into(), serde_json::json!({"type": "rbf", "gamma": g}));
            }
            (None, Some(g)) => match params.get_mut("kernel").and_then(Value::as_object_mut) {
                Some(k) if k.get("type").and_then(Value::as_str) == Some("rbf") => {
                    k.insert("gamma".into(), g);
                }
                _ => log::warn!("--gamma has no effect without an RBF kernel"),
            },
            (None, None) => {}
        }
        if let Some(k) = self.k {
            params.insert("k".into(), k.into());
        }
        for kv in &self.params {
            let (key, raw) =
                kv.split_once('=').ok_or_else(|| config_error(format!("--param `{kv}` is not KEY=JSON")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::from(raw));
            params.insert(key.trim().to_string(), value);
        }
        Ok(())
    }
}

/// Apply the common flags and fill every default the run depends on.
pub fn overlay_common(cfg: &mut RunConfig, command: &str, args: &CommonArgs) {
    cfg.command = Some(command.to_string());
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from("runs").join(command));
    }
    if let Some(source) = args.source {
        cfg.dataset.source = source;
    }
    if let Some(root) = &args.data {
        cfg.dataset.root = Some(root.clone());
    }
    if cfg.dataset.root.is_none() && cfg.dataset.paths.is_empty() {
        cfg.dataset.root = std::env::var_os(DATA_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    }
    if let Some(r) = args.representation {
        cfg.dataset.representation = r;
    }
    if let Some(g) = args.grouping {
        cfg.eval.grouping = g.into();
    }
    if let Some(f) = args.folds {
        cfg.eval.folds = f;
    }
}

/// Resolve the model section: family from the flag, the file or `default`,
/// hyperparameters merged and checked against the family's schema.
pub fn resolve_model(cfg: &mut RunConfig, args: &ModelArgs, default: ModelFamily) -> Result<ModelSpec> {
    let family = args.model.or(cfg.model.as_ref().map(|m| m.family)).unwrap_or(default);
    let mut params = match &cfg.model {
        Some(m) if m.family == family => match &m.params {
            Value::Null => Map::new(),
            Value::Object(o) => o.clone(),
            other => bail!(config_error(format!("model.params must be an object, got {other}"))),
        },
        Some(m) if !m.params.is_null() && args.model.is_some() => {
            log::warn!("ignoring {} parameters from the config file for --model {family}", m.family);
            Map::new()
        }
        _ => Map::new(),
    };
    if !args.is_empty() {
        args.apply(&mut params)?;
    }
    // Keys left unspecified take the family defaults.
    if let Value::Object(defaults) = ModelSpec::default_for(family).params() {
        for (key, value) in defaults {
            params.entry(key).or_insert(value);
        }
    }
    if family == ModelFamily::Forest {
        // One top-level seed drives every random component.
        params.insert("seed".into(), tensorhar::rng::substream_seed(cfg.seed, "forest").into());
    }
    let spec = ModelSpec::from_params(family, Value::Object(params)).map_err(|e| config_error(e.to_string()))?;
    spec.validate()?;
    cfg.model = Some(ModelConfig { family, params: spec.params() });
    Ok(spec)
}

/// Start from the config file, if any.
pub fn base_config(args: &CommonArgs) -> Result<RunConfig> {
    match &args.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}
