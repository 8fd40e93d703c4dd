//! Multinomial logistic regression.
//!
//! Training minimizes the mean cross-entropy plus `(l2/2)‖W‖²` with
//! `l2 = 1/(C·n)`. That is the usual `Σ CE + ‖W‖²/(2C)` objective divided
//! by `n`, so it has the same minimizer but stays well scaled for gradient steps.
//! Biases are not regularized.

use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, Learner};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::tensor::{dot, Tensor};

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `params` layout: the `K × d` weight matrix row-major, then `K` biases.
#[derive(Debug, Clone, Copy)]
pub struct SoftmaxObjective<'a> {
    xs: &'a [&'a [f64]],
    labels: &'a [usize],
    n_classes: usize,
    l2: f64,
}

impl<'a> SoftmaxObjective<'a> {
    pub fn new(xs: &'a [&'a [f64]], labels: &'a [usize], n_classes: usize, l2: f64) -> Result<Self> {
        let first = xs.first().ok_or(Error::EmptyInput("training set"))?;
        if labels.len() != xs.len() {
            return Err(Error::DimensionMismatch { expected: xs.len(), got: labels.len() });
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
        if !(l2 >= 0.0 && l2.is_finite()) {
            return Err(Error::param("l2", format!("must be non-negative, got {l2}")));
        }
        Ok(SoftmaxObjective { xs, labels, n_classes, l2 })
    }

    pub fn n_features(&self) -> usize {
        self.xs[0].len()
    }

    pub fn n_params(&self) -> usize {
        self.n_classes * (self.n_features() + 1)
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        self.evaluate(params, false).0
    }

    pub fn value_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        self.evaluate(params, true)
    }

    fn evaluate(&self, params: &[f64], with_grad: bool) -> (f64, Vec<f64>) {
        let (k, d) = (self.n_classes, self.n_features());
        let (w, b) = params.split_at(k * d);
        let n = self.xs.len() as f64;
        let mut grad = if with_grad { vec![0.0; params.len()] } else { Vec::new() };
        let mut loss = 0.0;
        let mut logits = vec![0.0; k];
        for (x, &label) in self.xs.iter().zip(self.labels) {
            for c in 0..k {
                logits[c] = dot(&w[c * d..(c + 1) * d], x) + b[c];
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            loss += lse - logits[label];
            if with_grad {
                for c in 0..k {
                    let r = (logits[c] - lse).exp() - f64::from(u8::from(c == label));
                    if r != 0.0 {
                        for (g, xv) in grad[c * d..(c + 1) * d].iter_mut().zip(x.iter()) {
                            *g += r * xv;
                        }
                        grad[k * d + c] += r;
                    }
                }
            }
        }
        let reg: f64 = 0.5 * self.l2 * dot(w, w);
        if with_grad {
            grad.iter_mut().for_each(|g| *g /= n);
            for (g, wv) in grad[..k * d].iter_mut().zip(w) {
                *g += self.l2 * wv;
            }
        }
        (loss / n + reg, grad)
    }
}

fn default_c() -> f64 {
    1.0
}
fn default_max_iters() -> usize {
    500
}
fn default_grad_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRegConfig {
    /// Inverse regularization strength.
    #[serde(rename = "C", default = "default_c")]
    pub c: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Stop when the Euclidean norm of the gradient falls below this.
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig { c: default_c(), max_iters: default_max_iters(), grad_tol: default_grad_tol() }
    }
}

impl LogRegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param("C", format!("must be positive, got {}", self.c)));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::param("grad_tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub n_classes: usize,
    pub n_features: usize,
    /// `n_classes × n_features`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub config: LogRegConfig,
    #[serde(default)]
    pub loss_trace: Vec<f64>,
    #[serde(default)]
    pub iterations: usize,
    #[serde(default)]
    pub converged: bool,
}

impl LogRegModel {
    pub fn zeros(n_classes: usize, n_features: usize, config: LogRegConfig) -> Self {
        LogRegModel {
            n_classes,
            n_features,
            weights: vec![0.0; n_classes * n_features],
            bias: vec![0.0; n_classes],
            config,
            loss_trace: Vec::new(),
            iterations: 0,
            converged: false,
        }
    }

    /// Flat parameter vector in [`SoftmaxObjective`] layout.
    pub fn params(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.bias).copied().collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        let expected = self.n_classes * (self.n_features + 1);
        if params.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: params.len() });
        }
        let (w, b) = params.split_at(self.n_classes * self.n_features);
        self.weights.copy_from_slice(w);
        self.bias.copy_from_slice(b);
        Ok(())
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        Ok((0..self.n_classes)
            .map(|c| dot(&self.weights[c * self.n_features..(c + 1) * self.n_features], x) + self.bias[c])
            .collect())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }
}

impl Classifier for LogRegModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_scores(&self, x: &Tensor) -> Result<Vec<f64>> {
        self.predict_proba(x.data())
    }
}

/// Minimizer output of [`lbfgs`].
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;

/// Limited-memory BFGS with backtracking under the Armijo condition, so the
/// objective decreases at every accepted step.
pub fn lbfgs(mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>), x0: Vec<f64>, max_iters: usize, grad_tol: f64) -> Minimum {
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut values = vec![fx];
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut iterations = 0;
    let mut converged = dot(&g, &g).sqrt() < grad_tol;

    while !converged && iterations < max_iters {
        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = if history.is_empty() { (1.0 / dot(&g, &g).sqrt()).min(1.0) } else { 1.0 };
        let accepted = loop {
            let candidate: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fc, gc) = f(&candidate);
            if fc.is_finite() && fc <= fx + ARMIJO * step * slope {
                break Some((candidate, fc, gc));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((nx, nf, ng)) = accepted else {
            log::debug!("line search failed after {iterations} iterations");
            break;
        };
        iterations += 1;
        let s: Vec<f64> = nx.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = ng.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == MEMORY {
                history.remove(0);
            }
            history.push((s, y, 1.0 / sy));
        }
        x = nx;
        fx = nf;
        g = ng;
        values.push(fx);
        converged = dot(&g, &g).sqrt() < grad_tol;
    }
    Minimum { x, values, iterations, converged }
}

fn two_loop(g: &[f64], history: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qv, yv)| *qv -= a * yv);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.last() {
        let scale = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= scale);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qv, sv)| *qv += (a - beta) * sv);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

pub fn train_logreg(xs: &[&[f64]], labels: &[usize], n_classes: usize, cfg: &LogRegConfig) -> Result<LogRegModel> {
    cfg.validate()?;
    if n_classes < 2 {
        return Err(Error::SingleClass);
    }
    let objective = SoftmaxObjective::new(xs, labels, n_classes, 1.0 / (cfg.c * xs.len() as f64))?;
    let mut model = LogRegModel::zeros(n_classes, objective.n_features(), *cfg);
    let min = lbfgs(|p| objective.value_and_gradient(p), model.params(), cfg.max_iters, cfg.grad_tol);
    if !min.converged {
        log::warn!("logistic regression stopped after {} iterations without reaching grad_tol", min.iterations);
    }
    model.set_params(&min.x)?;
    model.loss_trace = min.values;
    model.iterations = min.iterations;
    model.converged = min.converged;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogRegLearner {
    pub config: LogRegConfig,
}

impl Learner for LogRegLearner {
    type Model = LogRegModel;

    fn fit(&self, data: &Dataset, _exec: Exec) -> Result<LogRegModel> {
        let xs: Vec<&[f64]> = data.samples.iter().map(Tensor::data).collect();
        train_logreg(&xs, &data.labels, data.n_classes(), &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_model_is_uniform() {
        let m = LogRegModel::zeros(4, 3, LogRegConfig::default());
        assert_eq!(m.predict_proba(&[1.0, -2.0, 3.0]).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn softmax_sums_to_one_for_extreme_logits() {
        for logits in [vec![1000.0, -1000.0, 0.0], vec![-745.0, -744.0], vec![1e-300, 0.0, 5.0]] {
            let p = softmax(&logits);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data: Vec<Vec<f64>> = (0..20).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let labels: Vec<usize> = (0..20).map(|i| i % 3).collect();
        let obj = SoftmaxObjective::new(&xs, &labels, 3, 0.3).unwrap();
        let params: Vec<f64> = (0..obj.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grad) = obj.value_and_gradient(&params);
        let h = 1e-6;
        for i in 0..params.len() {
            let mut up = params.clone();
            let mut down = params.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (obj.value(&up) - obj.value(&down)) / (2.0 * h);
            assert!((fd - grad[i]).abs() <= 1e-5 * grad[i].abs().max(1e-3), "param {i}: fd {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn separable_1d_is_fit_perfectly_and_loss_decreases() {
        let data: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 - 9.5]).collect();
        let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let m = train_logreg(&xs, &labels, 2, &LogRegConfig::default()).unwrap();
        for (x, &l) in xs.iter().zip(&labels) {
            assert_eq!(crate::classifier::argmax(&m.predict_proba(x).unwrap()), l);
        }
        assert!(m.converged);
        for w in m.loss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn lbfgs_minimizes_a_quadratic() {
        let min = lbfgs(
            |x| {
                let f = (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2);
                (f, vec![2.0 * (x[0] - 3.0), 20.0 * (x[1] + 1.0)])
            },
            vec![0.0, 0.0],
            100,
            1e-10,
        );
        assert!(min.converged);
        assert!((min.x[0] - 3.0).abs() < 1e-8 && (min.x[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_non_finite_features() {
        let data = [vec![f64::NAN], vec![1.0]];
        let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        assert!(matches!(train_logreg(&xs, &[0, 1], 2, &LogRegConfig::default()), Err(Error::NonFinite(_))));
    }
}
