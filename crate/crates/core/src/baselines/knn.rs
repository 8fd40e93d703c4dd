use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, Learner};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::tensor::{Tensor, TensorDistance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KnnMetric {
    #[default]
    Euclidean,
    TensorDistance {
        sigma2: f64,
    },
}

fn default_k() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub metric: KnnMetric,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: default_k(), metric: KnnMetric::Euclidean }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub metric: KnnMetric,
    pub n_classes: usize,
    pub samples: Vec<Tensor>,
    pub labels: Vec<usize>,
    #[serde(skip)]
    distance: OnceLock<TensorDistance>,
}

impl PartialEq for KnnModel {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k
            && self.metric == other.metric
            && self.n_classes == other.n_classes
            && self.samples == other.samples
            && self.labels == other.labels
    }
}

/// A neighbour found by [`KnnModel::neighbours`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbour {
    pub index: usize,
    pub label: usize,
    pub distance: f64,
}

impl KnnModel {
    pub fn new(samples: Vec<Tensor>, labels: Vec<usize>, n_classes: usize, cfg: &KnnConfig) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyInput("training set"))?;
        if labels.len() != samples.len() {
            return Err(Error::DimensionMismatch { expected: samples.len(), got: labels.len() });
        }
        if cfg.k == 0 || cfg.k > samples.len() {
            return Err(Error::param("k", format!("must be in 1..={}, got {}", samples.len(), cfg.k)));
        }
        for s in &samples {
            if s.shape() != first.shape() {
                return Err(Error::ShapeMismatch { expected: first.shape().to_vec(), got: s.shape().to_vec() });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::UnknownLabel(bad.to_string()));
        }
        if let KnnMetric::TensorDistance { sigma2 } = cfg.metric {
            TensorDistance::new(first.shape(), sigma2)?;
        }
        Ok(KnnModel { k: cfg.k, metric: cfg.metric, n_classes, samples, labels, distance: OnceLock::new() })
    }

    fn distance(&self, a: &Tensor, b: &Tensor) -> Result<f64> {
        match self.metric {
            KnnMetric::Euclidean => {
                Ok(a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            }
            KnnMetric::TensorDistance { sigma2 } => {
                if self.distance.get().is_none() {
                    let metric = TensorDistance::new(self.samples[0].shape(), sigma2)?;
                    let _ = self.distance.set(metric);
                }
                self.distance.get().expect("initialized above").distance_flat(a.data(), b.data())
            }
        }
    }

    /// The `k` nearest training samples, closest first; equal distances are
    /// ordered by training index.
    pub fn neighbours(&self, x: &Tensor) -> Result<Vec<Neighbour>> {
        let shape = self.samples[0].shape();
        if x.shape() != shape {
            return Err(Error::ShapeMismatch { expected: shape.to_vec(), got: x.shape().to_vec() });
        }
        let mut all = self
            .samples
            .iter()
            .zip(&self.labels)
            .enumerate()
            .map(|(index, (s, &label))| Ok(Neighbour { index, label, distance: self.distance(x, s)? }))
            .collect::<Result<Vec<_>>>()?;
        all.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index)));
        all.truncate(self.k);
        Ok(all)
    }
}

impl Classifier for KnnModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Fraction of the `k` neighbours carrying each label.
    fn predict_scores(&self, x: &Tensor) -> Result<Vec<f64>> {
        let mut scores = vec![0.0; self.n_classes];
        for n in self.neighbours(x)? {
            scores[n.label] += 1.0 / self.k as f64;
        }
        Ok(scores)
    }

    /// Majority label; ties go to the smallest mean neighbour distance, then
    /// to the lowest class id.
    fn predict(&self, x: &Tensor) -> Result<usize> {
        let mut votes = vec![0usize; self.n_classes];
        let mut dist = vec![0.0; self.n_classes];
        for n in self.neighbours(x)? {
            votes[n.label] += 1;
            dist[n.label] += n.distance;
        }
        let mut best = 0;
        for c in 1..self.n_classes {
            let better = votes[c] > votes[best]
                || (votes[c] == votes[best]
                    && votes[c] > 0
                    && dist[c] / (votes[c] as f64) < dist[best] / (votes[best] as f64));
            if better {
                best = c;
            }
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KnnLearner {
    pub config: KnnConfig,
}

impl Learner for KnnLearner {
    type Model = KnnModel;

    fn fit(&self, data: &Dataset, _exec: Exec) -> Result<KnnModel> {
        KnnModel::new(data.samples.clone(), data.labels.clone(), data.n_classes(), &self.config)
    }
}
