//! Comparison models: multinomial logistic regression, k-nearest neighbours
//! and a random forest. All implement [`crate::Classifier`].

pub mod forest;
pub mod knn;
pub mod logreg;

pub use forest::{train_forest, ForestConfig, ForestLearner, ForestModel, MaxFeatures};
pub use knn::{KnnConfig, KnnLearner, KnnMetric, KnnModel};
pub use logreg::{softmax, train_logreg, LogRegConfig, LogRegLearner, LogRegModel, SoftmaxObjective};
