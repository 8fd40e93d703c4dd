//! Model families behind one configuration type and one trained-model type,
//! so the harness and the command line can treat them uniformly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::baselines::{ForestConfig, ForestLearner, ForestModel, KnnConfig, KnnLearner, KnnModel};
use crate::baselines::{LogRegConfig, LogRegLearner, LogRegModel};
use crate::classifier::{Classifier, Learner};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::Candidate;
use crate::exec::Exec;
use crate::stm::{StmConfig, StmEnsemble, StmLearner};
use crate::svm::{SvmConfig, SvmEnsemble, SvmLearner};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Svm,
    Stm,
    Logreg,
    Knn,
    Forest,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] =
        [ModelFamily::Svm, ModelFamily::Stm, ModelFamily::Logreg, ModelFamily::Knn, ModelFamily::Forest];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Svm => "svm",
            ModelFamily::Stm => "stm",
            ModelFamily::Logreg => "logreg",
            ModelFamily::Knn => "knn",
            ModelFamily::Forest => "forest",
        }
    }

    /// Readable name used in comparison tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelFamily::Svm => "Support Vector Machine",
            ModelFamily::Stm => "Support Tensor Machine",
            ModelFamily::Logreg => "Logistic Regression",
            ModelFamily::Knn => "k-Nearest Neighbors",
            ModelFamily::Forest => "Random Forest",
        }
    }

    /// Whether the family consumes raw `(T, C)` windows rather than feature
    /// vectors by default.
    pub fn prefers_tensors(self) -> bool {
        self == ModelFamily::Stm
    }

    /// Default hyperparameter grid for randomized search.
    pub fn default_search_params(self) -> BTreeMap<String, Vec<Value>> {
        let c_grid = || vec![json!(0.01), json!(0.1), json!(1.0), json!(10.0), json!(100.0)];
        let grid: Vec<(&str, Vec<Value>)> = match self {
            ModelFamily::Svm | ModelFamily::Stm | ModelFamily::Logreg => vec![("C", c_grid())],
            ModelFamily::Knn => vec![("k", vec![json!(1), json!(3), json!(5), json!(7), json!(9)])],
            ModelFamily::Forest => vec![
                ("n_estimators", vec![json!(50), json!(100), json!(200)]),
                ("max_depth", vec![Value::Null, json!(10), json!(20), json!(30)]),
                ("min_samples_leaf", vec![json!(1), json!(2), json!(4)]),
                ("min_samples_split", vec![json!(2), json!(5), json!(10)]),
                ("bootstrap", vec![json!(true), json!(false)]),
            ],
        };
        grid.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// A family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum ModelSpec {
    Svm(SvmConfig),
    Stm(StmConfig),
    Logreg(LogRegConfig),
    Knn(KnnConfig),
    Forest(ForestConfig),
}

impl ModelSpec {
    pub fn default_for(family: ModelFamily) -> Self {
        match family {
            ModelFamily::Svm => ModelSpec::Svm(SvmConfig::default()),
            ModelFamily::Stm => ModelSpec::Stm(StmConfig::default()),
            ModelFamily::Logreg => ModelSpec::Logreg(LogRegConfig::default()),
            ModelFamily::Knn => ModelSpec::Knn(KnnConfig::default()),
            ModelFamily::Forest => ModelSpec::Forest(ForestConfig::default()),
        }
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            ModelSpec::Svm(_) => ModelFamily::Svm,
            ModelSpec::Stm(_) => ModelFamily::Stm,
            ModelSpec::Logreg(_) => ModelFamily::Logreg,
            ModelSpec::Knn(_) => ModelFamily::Knn,
            ModelSpec::Forest(_) => ModelFamily::Forest,
        }
    }

    /// Hyperparameters as a JSON object.
    pub fn params(&self) -> Value {
        match serde_json::to_value(self) {
            Ok(Value::Object(mut m)) => m.remove("params").unwrap_or(Value::Null),
            _ => Value::Null,
        }
    }

    /// Build a spec of `family` from a JSON object of hyperparameters;
    /// unknown keys are rejected.
    pub fn from_params(family: ModelFamily, params: Value) -> Result<Self> {
        serde_json::from_value(json!({ "family": family, "params": params }))
            .map_err(|e| Error::Document(format!("{family} parameters: {e}")))
    }

    pub fn with_candidate(&self, candidate: &Candidate) -> Result<Self> {
        let merged = crate::eval::apply_candidate(&self.params(), candidate)?;
        ModelSpec::from_params(self.family(), merged)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Svm(c) => c.validate(),
            ModelSpec::Stm(c) => c.validate(),
            ModelSpec::Logreg(c) => c.validate(),
            ModelSpec::Knn(c) if c.k == 0 => Err(Error::param("k", "must be at least 1")),
            ModelSpec::Knn(_) => Ok(()),
            ModelSpec::Forest(c) => c.validate(),
        }
    }

    pub fn fit(&self, data: &Dataset, exec: Exec) -> Result<TrainedModel> {
        Ok(match self {
            ModelSpec::Svm(config) => TrainedModel::Svm(SvmLearner { config: *config }.fit(data, exec)?),
            ModelSpec::Stm(config) => TrainedModel::Stm(StmLearner { config: *config }.fit(data, exec)?),
            ModelSpec::Logreg(config) => TrainedModel::Logreg(LogRegLearner { config: *config }.fit(data, exec)?),
            ModelSpec::Knn(config) => TrainedModel::Knn(KnnLearner { config: *config }.fit(data, exec)?),
            ModelSpec::Forest(config) => TrainedModel::Forest(ForestLearner { config: *config }.fit(data, exec)?),
        })
    }
}

impl Learner for ModelSpec {
    type Model = TrainedModel;

    fn fit(&self, data: &Dataset, exec: Exec) -> Result<TrainedModel> {
        ModelSpec::fit(self, data, exec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Svm(SvmEnsemble),
    Stm(StmEnsemble),
    Logreg(LogRegModel),
    Knn(KnnModel),
    Forest(ForestModel),
}

impl TrainedModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            TrainedModel::Svm(_) => ModelFamily::Svm,
            TrainedModel::Stm(_) => ModelFamily::Stm,
            TrainedModel::Logreg(_) => ModelFamily::Logreg,
            TrainedModel::Knn(_) => ModelFamily::Knn,
            TrainedModel::Forest(_) => ModelFamily::Forest,
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            TrainedModel::Svm(m) => m,
            TrainedModel::Stm(m) => m,
            TrainedModel::Logreg(m) => m,
            TrainedModel::Knn(m) => m,
            TrainedModel::Forest(m) => m,
        }
    }
}

impl Classifier for TrainedModel {
    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn predict_scores(&self, x: &Tensor) -> Result<Vec<f64>> {
        self.inner().predict_scores(x)
    }

    fn predict(&self, x: &Tensor) -> Result<usize> {
        self.inner().predict(x)
    }
}
