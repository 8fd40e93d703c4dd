//! The classifier contract shared by every model family, and the
//! one-vs-one reduction used by the SVM and the support tensor machine.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::tensor::Tensor;

pub trait Classifier: Send + Sync {
    fn n_classes(&self) -> usize;

    /// Per-class scores; larger means more likely.
    fn predict_scores(&self, x: &Tensor) -> Result<Vec<f64>>;

    fn predict(&self, x: &Tensor) -> Result<usize> {
        Ok(argmax(&self.predict_scores(x)?))
    }

    fn predict_batch(&self, xs: &[Tensor], exec: Exec) -> Result<Vec<usize>> {
        exec.try_map(xs.len(), |i| self.predict(&xs[i]))
    }
}

/// Fits a model from a dataset; hyperparameters live on `self`.
pub trait Learner: Sync {
    type Model: Classifier;

    fn fit(&self, data: &Dataset, exec: Exec) -> Result<Self::Model>;
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A binary model producing a signed decision value; positive favours the
/// first class of its pair.
pub trait BinaryDecision: Send + Sync {
    fn decision(&self, x: &Tensor) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel<M> {
    pub positive: usize,
    pub negative: usize,
    pub model: M,
}

/// `n(n−1)/2` pairwise models combined by voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsOne<M> {
    n_classes: usize,
    pairs: Vec<PairModel<M>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vote {
    pub label: usize,
    pub votes: Vec<usize>,
    /// Σ|decision| over the pairwise contests each class won.
    pub strength: Vec<f64>,
}

/// Binary training set for one class pair: `+1` for the lower class id.
pub struct PairData<'a> {
    pub positive: usize,
    pub negative: usize,
    pub samples: Vec<&'a Tensor>,
    pub targets: Vec<f64>,
    /// Positions of the samples in the source dataset.
    pub indices: Vec<usize>,
}

impl<M> OneVsOne<M> {
    pub fn from_pairs(n_classes: usize, pairs: Vec<PairModel<M>>) -> Result<Self> {
        if pairs.len() != n_classes * n_classes.saturating_sub(1) / 2 {
            return Err(Error::Document(format!(
                "{} pairwise models for {n_classes} classes, expected {}",
                pairs.len(),
                n_classes * n_classes.saturating_sub(1) / 2
            )));
        }
        Ok(OneVsOne { n_classes, pairs })
    }

    pub fn pairs(&self) -> &[PairModel<M>] {
        &self.pairs
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, a: usize, b: usize) -> Option<&M> {
        self.pairs.iter().find(|p| p.positive == a && p.negative == b).map(|p| &p.model)
    }
}

impl<M: BinaryDecision> OneVsOne<M> {
    /// Majority vote; ties broken by summed |decision| of the won contests,
    /// then by the lowest class id.
    pub fn vote(&self, x: &Tensor) -> Result<Vote> {
        let mut votes = vec![0usize; self.n_classes];
        let mut strength = vec![0.0; self.n_classes];
        for p in &self.pairs {
            let f = p.model.decision(x)?;
            let winner = if f > 0.0 { p.positive } else { p.negative };
            votes[winner] += 1;
            strength[winner] += f.abs();
        }
        let mut label = 0;
        for c in 1..self.n_classes {
            if votes[c] > votes[label] || (votes[c] == votes[label] && strength[c] > strength[label]) {
                label = c;
            }
        }
        Ok(Vote { label, votes, strength })
    }
}

impl<M: BinaryDecision> Classifier for OneVsOne<M> {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_scores(&self, x: &Tensor) -> Result<Vec<f64>> {
        Ok(self.vote(x)?.votes.iter().map(|&v| v as f64).collect())
    }

    fn predict(&self, x: &Tensor) -> Result<usize> {
        Ok(self.vote(x)?.label)
    }
}

/// Class pairs `(a, b)` with `a < b` in lexicographic order.
pub fn class_pairs(n_classes: usize) -> Vec<(usize, usize)> {
    (0..n_classes).flat_map(|a| (a + 1..n_classes).map(move |b| (a, b))).collect()
}

/// Train one binary model per class pair, each on that pair's samples only.
pub fn fit_one_vs_one<M, F>(data: &Dataset, exec: Exec, fit_pair: F) -> Result<OneVsOne<M>>
where
    M: Send,
    F: Fn(&PairData<'_>) -> Result<M> + Sync + Send,
{
    let n = data.n_classes();
    if n < 2 {
        return Err(Error::SingleClass);
    }
    let counts = data.class_counts();
    if let Some(c) = counts.iter().position(|&k| k == 0) {
        return Err(Error::EmptyClass(data.classes.class_name(c)));
    }
    let pairs = class_pairs(n);
    let models = exec.try_map(pairs.len(), |p| {
        let (a, b) = pairs[p];
        let mut pd =
            PairData { positive: a, negative: b, samples: Vec::new(), targets: Vec::new(), indices: Vec::new() };
        for (i, &l) in data.labels.iter().enumerate() {
            if l == a || l == b {
                pd.samples.push(&data.samples[i]);
                pd.targets.push(if l == a { 1.0 } else { -1.0 });
                pd.indices.push(i);
            }
        }
        fit_pair(&pd).map(|model| PairModel { positive: a, negative: b, model })
    })?;
    OneVsOne::from_pairs(n, models)
}
