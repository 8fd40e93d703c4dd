//! Turn a dataset section into train/test splits plus a description of the
//! protocol that every artifact records.

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tensorhar::eval::{stratified_kfold, Grouping};
use tensorhar::io::{load_custom_csv_files, load_uci_har, CsvOptions, Representation, Split};
use tensorhar::signal::{StandardizeMode, Standardizer};
use tensorhar::{Dataset, Exec, LabelMap};

use crate::config::{config_error, DatasetConfig, EvalConfig, RepresentationChoice, SourceKind, DATA_ENV};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub source: SourceKind,
    pub representation: RepresentationChoice,
    pub sample_shape: Vec<usize>,
    pub classes: Vec<String>,
    pub n_train: usize,
    pub n_test: Option<usize>,
    pub standardized: bool,
}

pub struct Splits {
    pub train: Dataset,
    pub test: Option<Dataset>,
    /// Human-readable statement of how train and test were formed.
    pub protocol: String,
    pub standardizer: Option<Standardizer>,
    pub summary: DataSummary,
}

/// Settle `auto` representation and the standardization default, in place.
pub fn resolve_representation(cfg: &mut DatasetConfig, prefers_tensors: bool) {
    if cfg.representation == RepresentationChoice::Auto {
        cfg.representation =
            if prefers_tensors { RepresentationChoice::RawTensors } else { RepresentationChoice::FeatureVectors };
    }
    if cfg.standardize.is_none() {
        cfg.standardize = Some(cfg.representation == RepresentationChoice::RawTensors);
    }
}

fn root(cfg: &DatasetConfig) -> Result<PathBuf> {
    cfg.root.clone().ok_or_else(|| {
        config_error(format!("no dataset root: pass --data, set dataset.root in the config, or set {DATA_ENV}"))
    })
}

fn csv_paths(cfg: &DatasetConfig) -> Result<Vec<PathBuf>> {
    if !cfg.paths.is_empty() {
        return Ok(cfg.paths.clone());
    }
    let dir = root(cfg)?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(config_error(format!("no .csv files in {}", dir.display())));
    }
    Ok(paths)
}

fn classes(cfg: &DatasetConfig) -> Result<LabelMap> {
    Ok(match &cfg.classes {
        Some(names) => LabelMap::new(names.iter().cloned())?,
        None => LabelMap::har6(),
    })
}

/// Drop classes with no samples so that every model sees only real labels.
fn compact(data: Dataset) -> Result<Dataset> {
    let counts = data.class_counts();
    if counts.iter().all(|&c| c > 0) {
        return Ok(data);
    }
    let keep: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    Ok(data.restrict_classes(&keep)?)
}

/// Load the configured source. `need_test` asks custom CSV data for a
/// subject-grouped holdout split; otherwise all of it is training data.
pub fn load(cfg: &DatasetConfig, eval: &EvalConfig, seed: u64, need_test: bool, exec: Exec) -> Result<Splits> {
    let repr = match cfg.representation {
        RepresentationChoice::RawTensors => Representation::RawTensors,
        _ => Representation::FeatureVectors,
    };
    let (mut train, mut test, protocol) = match cfg.source {
        SourceKind::UciHar => {
            let root = root(cfg)?;
            let mut train = load_uci_har(&root, Split::Train, repr)?;
            let mut test = load_uci_har(&root, Split::Test, repr)?;
            if let Some(names) = &cfg.classes {
                let keep = names
                    .iter()
                    .map(|n| train.classes.id(n).ok_or_else(|| config_error(format!("unknown UCI HAR class `{n}`"))))
                    .collect::<Result<Vec<_>>>()?;
                train = train.restrict_classes(&keep)?;
                test = test.restrict_classes(&keep)?;
            }
            let protocol = format!(
                "UCI HAR standard split: train subjects {:?} ({} windows), test subjects {:?} ({} windows)",
                train.distinct_subjects(),
                train.len(),
                test.distinct_subjects(),
                test.len()
            );
            (train, Some(test), protocol)
        }
        SourceKind::CustomCsv => {
            let opts =
                CsvOptions { window: cfg.window, filter: cfg.filter, classes: classes(cfg)?, default_subject: 0 };
            let all = compact(load_custom_csv_files(&csv_paths(cfg)?, &opts)?.dataset)?;
            if need_test {
                let folds = stratified_kfold(&all, eval.folds, seed, Grouping::BySubject)?;
                let fold = folds.get(eval.holdout_fold).ok_or_else(|| {
                    config_error(format!(
                        "eval.holdout_fold {} is out of range for {} folds",
                        eval.holdout_fold,
                        folds.len()
                    ))
                })?;
                let (train, test) = (all.subset(&fold.train), all.subset(&fold.test));
                let protocol = format!(
                    "custom CSV subject-grouped holdout: fold {} of {}, test subjects {:?} ({} windows), train {} windows",
                    eval.holdout_fold + 1,
                    folds.len(),
                    test.distinct_subjects(),
                    test.len(),
                    train.len()
                );
                (train, Some(test), protocol)
            } else {
                let protocol =
                    format!("custom CSV, all {} windows from {} subjects", all.len(), all.distinct_subjects().len());
                (all, None, protocol)
            }
        }
    };

    let standardizer = if cfg.standardize.unwrap_or(false) {
        let mode = if train.sample_shape().is_some_and(|s| s.len() > 1) {
            StandardizeMode::PerLastMode
        } else {
            StandardizeMode::PerElement
        };
        let s = Standardizer::fit_dataset(&train, mode, exec)?;
        train = s.transform_dataset(&train)?;
        test = test.map(|t| s.transform_dataset(&t)).transpose()?;
        Some(s)
    } else {
        None
    };
    // Custom windows are always (T, C); vector models get them flattened
    // after per-channel standardization.
    if cfg.source == SourceKind::CustomCsv && cfg.representation == RepresentationChoice::FeatureVectors {
        train = train.flattened();
        test = test.map(|t| t.flattened());
    }

    let summary = DataSummary {
        source: cfg.source,
        representation: cfg.representation,
        sample_shape: train.sample_shape().map(<[usize]>::to_vec).unwrap_or_default(),
        classes: train.classes.names().to_vec(),
        n_train: train.len(),
        n_test: test.as_ref().map(Dataset::len),
        standardized: standardizer.is_some(),
    };
    Ok(Splits { train, test, protocol, standardizer, summary })
}
