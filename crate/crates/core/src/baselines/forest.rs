//! Random forest of axis-aligned Gini trees with bootstrap resampling.
//!
//! Tree `i` draws all of its randomness from the substream
//! `forest-tree-{i}` of the configured seed, so trees can be grown in any
//! order or in parallel and out-of-bag sets can be regenerated after the fact.

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::classifier::{argmax, Classifier, Learner};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::{substream, Rng};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    #[default]
    Sqrt,
    All,
    #[serde(untagged)]
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(n) => n.clamp(1, d),
        }
    }
}

fn default_estimators() -> usize {
    100
}
fn default_leaf() -> usize {
    4
}
fn default_split() -> usize {
    2
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    #[serde(default = "default_estimators")]
    pub n_estimators: usize,
    /// `None` grows until the leaf limits stop it.
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default = "default_leaf")]
    pub min_samples_leaf: usize,
    #[serde(default = "default_split")]
    pub min_samples_split: usize,
    #[serde(default = "default_true")]
    pub bootstrap: bool,
    #[serde(default)]
    pub max_features: MaxFeatures,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: default_estimators(),
            max_depth: None,
            min_samples_leaf: default_leaf(),
            min_samples_split: default_split(),
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::param("n_estimators", "must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::param("min_samples_leaf", "must be at least 1"));
        }
        if self.min_samples_split < 2 {
            return Err(Error::param("min_samples_split", "must be at least 2"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::param("max_depth", "must be at least 1 when set"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf { label: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { label } => return label,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_classes: usize,
    pub n_features: usize,
    pub n_train: usize,
    pub config: ForestConfig,
    pub trees: Vec<Tree>,
}

struct Grower<'a> {
    xs: &'a [&'a [f64]],
    labels: &'a [usize],
    n_classes: usize,
    cfg: &'a ForestConfig,
    max_features: usize,
}

fn gini_weighted(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    t - counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / t
}

impl Grower<'_> {
    fn majority(&self, idx: &[usize]) -> (usize, bool) {
        let mut counts = vec![0usize; self.n_classes];
        for &i in idx {
            counts[self.labels[i]] += 1;
        }
        let label = argmax(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
        (label, counts[label] == idx.len())
    }

    /// Best `(feature, threshold, weighted impurity)` among up to
    /// `max_features` non-constant features, drawn in random order.
    fn best_split(&self, idx: &mut [usize], rng: &mut Rng) -> Option<(usize, f64)> {
        let d = self.xs[0].len();
        let order = sample(rng, d, d);
        let min_leaf = self.cfg.min_samples_leaf;
        let n = idx.len();
        let mut total = vec![0usize; self.n_classes];
        for &i in idx.iter() {
            total[self.labels[i]] += 1;
        }
        let mut best: Option<(f64, usize, f64)> = None;
        let mut visited = 0;
        for feature in order.iter() {
            if visited >= self.max_features {
                break;
            }
            idx.sort_by(|&a, &b| self.xs[a][feature].total_cmp(&self.xs[b][feature]).then(a.cmp(&b)));
            let lo = self.xs[idx[0]][feature];
            let hi = self.xs[idx[n - 1]][feature];
            if lo == hi {
                continue;
            }
            visited += 1;
            let mut left = vec![0usize; self.n_classes];
            let mut right = total.clone();
            for pos in 0..n - 1 {
                let label = self.labels[idx[pos]];
                left[label] += 1;
                right[label] -= 1;
                let (a, b) = (self.xs[idx[pos]][feature], self.xs[idx[pos + 1]][feature]);
                let n_left = pos + 1;
                if a == b || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let score = gini_weighted(&left, n_left) + gini_weighted(&right, n - n_left);
                if best.is_none_or(|(s, _, _)| score < s) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&self, mut idx: Vec<usize>, rng: &mut Rng) -> Tree {
        let mut nodes = vec![Node::Leaf { label: 0 }];
        let mut stack = vec![(0usize, 0usize, std::mem::take(&mut idx))];
        while let Some((slot, depth, mut members)) = stack.pop() {
            let (label, pure) = self.majority(&members);
            let stop = pure
                || members.len() < self.cfg.min_samples_split
                || members.len() < 2 * self.cfg.min_samples_leaf
                || self.cfg.max_depth.is_some_and(|m| depth >= m);
            let split = if stop { None } else { self.best_split(&mut members, rng) };
            match split {
                None => nodes[slot] = Node::Leaf { label },
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        members.iter().partition(|&&i| self.xs[i][feature] <= threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { label });
                    nodes.push(Node::Leaf { label });
                    nodes[slot] = Node::Split { feature, threshold, left, right: left + 1 };
                    stack.push((left + 1, depth + 1, r));
                    stack.push((left, depth + 1, l));
                }
            }
        }
        Tree { nodes }
    }
}

fn tree_rng(seed: u64, tree: usize) -> Rng {
    substream(seed, &format!("forest-tree-{tree}"))
}

fn draw_bootstrap(rng: &mut Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

pub fn train_forest(
    xs: &[&[f64]],
    labels: &[usize],
    n_classes: usize,
    cfg: &ForestConfig,
    exec: Exec,
) -> Result<ForestModel> {
    cfg.validate()?;
    let first = xs.first().ok_or(Error::EmptyInput("training set"))?;
    if labels.len() != xs.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: labels.len() });
    }
    if first.is_empty() {
        return Err(Error::EmptyInput("features"));
    }
    for x in xs {
        if x.len() != first.len() {
            return Err(Error::DimensionMismatch { expected: first.len(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::UnknownLabel(bad.to_string()));
    }
    let grower = Grower { xs, labels, n_classes, cfg, max_features: cfg.max_features.resolve(first.len()) };
    let n = xs.len();
    let trees = exec.map(cfg.n_estimators, |t| {
        let mut rng = tree_rng(cfg.seed, t);
        let idx = if cfg.bootstrap { draw_bootstrap(&mut rng, n) } else { (0..n).collect() };
        grower.grow(idx, &mut rng)
    });
    Ok(ForestModel { n_classes, n_features: first.len(), n_train: n, config: *cfg, trees })
}

impl ForestModel {
    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        Ok(())
    }

    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        self.check(x)?;
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        Ok(votes)
    }

    /// Training indices left out of tree `t`'s bootstrap sample.
    pub fn out_of_bag(&self, t: usize) -> Vec<usize> {
        if !self.config.bootstrap {
            return Vec::new();
        }
        let mut in_bag = vec![false; self.n_train];
        for i in draw_bootstrap(&mut tree_rng(self.config.seed, t), self.n_train) {
            in_bag[i] = true;
        }
        (0..self.n_train).filter(|&i| !in_bag[i]).collect()
    }

    /// Majority vote over the trees that did not see each training sample;
    /// `None` where every tree saw it.
    pub fn oob_predictions(&self, xs: &[&[f64]]) -> Result<Vec<Option<usize>>> {
        if xs.len() != self.n_train {
            return Err(Error::DimensionMismatch { expected: self.n_train, got: xs.len() });
        }
        let mut votes = vec![vec![0usize; self.n_classes]; self.n_train];
        for (t, tree) in self.trees.iter().enumerate() {
            for i in self.out_of_bag(t) {
                self.check(xs[i])?;
                votes[i][tree.predict(xs[i])] += 1;
            }
        }
        Ok(votes
            .into_iter()
            .map(|v| (v.iter().sum::<usize>() > 0).then(|| argmax(&v.iter().map(|&c| c as f64).collect::<Vec<_>>())))
            .collect())
    }
}

impl Classifier for ForestModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Fraction of trees voting for each class.
    fn predict_scores(&self, x: &Tensor) -> Result<Vec<f64>> {
        let votes = self.votes(x.data())?;
        Ok(votes.iter().map(|&v| v as f64 / self.trees.len() as f64).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForestLearner {
    pub config: ForestConfig,
}

impl Learner for ForestLearner {
    type Model = ForestModel;

    fn fit(&self, data: &Dataset, exec: Exec) -> Result<ForestModel> {
        let xs: Vec<&[f64]> = data.samples.iter().map(Tensor::data).collect();
        train_forest(&xs, &data.labels, data.n_classes(), &self.config, exec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn blobs(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let c = i % 3;
            xs.push((0..5).map(|f| if f == c { 2.0 } else { 0.0 } + rng.random_range(-1.0..1.0)).collect());
            ys.push(c);
        }
        (xs, ys)
    }

    #[test]
    fn single_class_always_predicts_it() {
        let data = [vec![1.0, 2.0], vec![3.0, 1.0], vec![0.0, 0.0]];
        let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let m = train_forest(
            &xs,
            &[2, 2, 2],
            3,
            &ForestConfig { n_estimators: 5, ..ForestConfig::default() },
            Exec::Sequential,
        )
        .unwrap();
        for x in [[9.0, -9.0], [0.0, 0.0]] {
            assert_eq!(m.predict(&Tensor::vector(x.to_vec()).unwrap()).unwrap(), 2);
        }
    }

    #[test]
    fn depth_one_stump_separates_axis_aligned_data() {
        let data: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.0]).collect();
        let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let labels: Vec<usize> = (0..10).map(|i| usize::from(i >= 5)).collect();
        let cfg = ForestConfig {
            n_estimators: 1,
            max_depth: Some(1),
            min_samples_leaf: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            ..ForestConfig::default()
        };
        let m = train_forest(&xs, &labels, 2, &cfg, Exec::Sequential).unwrap();
        assert_eq!(m.trees[0].depth(), 1);
        assert_eq!(m.trees[0].nodes[0], Node::Split { feature: 0, threshold: 4.5, left: 1, right: 2 });
        for (x, &l) in xs.iter().zip(&labels) {
            assert_eq!(m.trees[0].predict(x), l);
        }
    }

    #[test]
    fn deterministic_and_thread_count_invariant() {
        let (data, labels) = blobs(1, 90);
        let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let cfg = ForestConfig { n_estimators: 12, seed: 7, ..ForestConfig::default() };
        let a = train_forest(&xs, &labels, 3, &cfg, Exec::Sequential).unwrap();
        let b = train_forest(&xs, &labels, 3, &cfg, Exec::Parallel { jobs: 4 }).unwrap();
        assert_eq!(a, b);
        let single = ForestConfig { n_estimators: 1, bootstrap: false, ..cfg };
        assert_eq!(
            train_forest(&xs, &labels, 3, &single, Exec::Sequential).unwrap(),
            train_forest(&xs, &labels, 3, &single, Exec::Sequential).unwrap()
        );
    }

    #[test]
    fn leaves_respect_min_samples_leaf() {
        let (data, labels) = blobs(3, 60);
        let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let cfg = ForestConfig { n_estimators: 1, bootstrap: false, min_samples_leaf: 4, ..ForestConfig::default() };
        let m = train_forest(&xs, &labels, 3, &cfg, Exec::Sequential).unwrap();
        let mut leaf_sizes = std::collections::HashMap::new();
        for x in &xs {
            let mut at = 0;
            while let Node::Split { feature, threshold, left, right } = m.trees[0].nodes[at] {
                at = if x[feature] <= threshold { left } else { right };
            }
            *leaf_sizes.entry(at).or_insert(0) += 1;
        }
        assert!(leaf_sizes.values().all(|&c| c >= 4), "{leaf_sizes:?}");
    }

    #[test]
    fn oob_is_reproducible_and_accurate() {
        let (data, labels) = blobs(5, 150);
        let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let cfg = ForestConfig { n_estimators: 25, seed: 11, ..ForestConfig::default() };
        let m = train_forest(&xs, &labels, 3, &cfg, Exec::Auto).unwrap();
        let oob = m.oob_predictions(&xs).unwrap();
        assert_eq!(oob, m.oob_predictions(&xs).unwrap());
        let scored: Vec<_> = oob.iter().zip(&labels).filter_map(|(p, &l)| p.map(|p| p == l)).collect();
        assert!(scored.len() > 140);
        assert!(scored.iter().filter(|&&ok| ok).count() as f64 / scored.len() as f64 > 0.8);
    }
}
