//! Soft-margin SVM trained in the dual, with one-vs-one multiclass reduction.
//!
//! The primal problem is `min ½‖w‖² + C Σ ζ_i` subject to
//! `y_i (w·x_i + b) ≥ 1 − ζ_i`, `ζ_i ≥ 0`; the decision function is
//! `f(x) = Σ α_i y_i k(x_i, x) + b`.

mod kernel;
mod solver;

use serde::{Deserialize, Serialize};

pub use kernel::{Gamma, GammaRule, Kernel, KernelSpec};

use crate::classifier::{fit_one_vs_one, BinaryDecision, Learner, OneVsOne};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::tensor::{dot, Tensor};

fn default_tolerance() -> f64 {
    1e-3
}

/// Floor on the SMO iteration budget. Small rank-deficient problems can need
/// tens of thousands of steps to cross a flat face of the dual, far more than
/// a budget proportional to `n` allows.
pub const MIN_ITERATIONS: usize = 10_000_000;

fn default_max_passes() -> usize {
    1000
}

fn default_cache_mb() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmConfig {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(default)]
    pub kernel: KernelSpec,
    /// Stop when the maximal KKT violation falls below this.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Iteration cap, in multiples of the training-set size, but never below
    /// [`MIN_ITERATIONS`].
    #[serde(default = "default_max_passes")]
    pub max_passes: usize,
    /// Kernel-row cache budget per binary problem.
    #[serde(default = "default_cache_mb")]
    pub cache_mb: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            kernel: KernelSpec::Linear,
            tolerance: default_tolerance(),
            max_passes: default_max_passes(),
            cache_mb: default_cache_mb(),
        }
    }
}

impl SvmConfig {
    pub fn linear(c: f64) -> Self {
        SvmConfig { c, ..SvmConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param("C", format!("must be positive, got {}", self.c)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param("tolerance", format!("must be positive, got {}", self.tolerance)));
        }
        if self.max_passes == 0 {
            return Err(Error::param("max_passes", "must be at least 1"));
        }
        if let KernelSpec::Rbf { gamma: Gamma::Value(g) } = self.kernel {
            if !(g > 0.0) {
                return Err(Error::param("gamma", format!("must be positive, got {g}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SolverStats {
    pub iterations: usize,
    pub converged: bool,
    pub kkt_gap: f64,
    pub dual_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub kernel: Kernel,
    #[serde(rename = "C")]
    pub c: f64,
    pub dim: usize,
    /// Positions of the support vectors in the training set.
    #[serde(default)]
    pub support_indices: Vec<usize>,
    /// Empty for compacted linear models, which predict through `weights`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support_vectors: Vec<Vec<f64>>,
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// `±1` label of each support vector.
    #[serde(default)]
    pub labels: Vec<f64>,
    pub bias: f64,
    /// `w = Σ α_i y_i x_i`, linear kernel only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub stats: SolverStats,
}

/// Result of one dual solve, with the per-step dual objective when traced.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedFit {
    pub model: BinarySvmModel,
    pub dual_trace: Vec<f64>,
}

fn validate_binary(xs: &[&[f64]], y: &[f64]) -> Result<usize> {
    let first = xs.first().ok_or(Error::EmptyInput("training set"))?;
    let dim = first.len();
    if y.len() != xs.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: y.len() });
    }
    for x in xs {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::param("labels", format!("binary labels must be ±1, got {bad}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }
    Ok(dim)
}

/// Train on `±1` labels.
pub fn train_binary_svm(xs: &[&[f64]], y: &[f64], cfg: &SvmConfig) -> Result<BinarySvmModel> {
    Ok(fit(xs, y, cfg, None, false)?.model)
}

/// Train with per-sample penalties `C_i = C · weights[i]`.
pub fn train_binary_svm_weighted(xs: &[&[f64]], y: &[f64], cfg: &SvmConfig, weights: &[f64]) -> Result<BinarySvmModel> {
    Ok(fit(xs, y, cfg, Some(weights), false)?.model)
}

/// Train and record the dual objective after every SMO step.
pub fn train_binary_svm_traced(xs: &[&[f64]], y: &[f64], cfg: &SvmConfig) -> Result<TracedFit> {
    fit(xs, y, cfg, None, true)
}

fn fit(xs: &[&[f64]], y: &[f64], cfg: &SvmConfig, weights: Option<&[f64]>, trace: bool) -> Result<TracedFit> {
    cfg.validate()?;
    let dim = validate_binary(xs, y)?;
    let upper: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != xs.len() {
                return Err(Error::DimensionMismatch { expected: xs.len(), got: w.len() });
            }
            if let Some(bad) = w.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::param("sample_weights", format!("must be positive, got {bad}")));
            }
            w.iter().map(|s| cfg.c * s).collect()
        }
        None => vec![cfg.c; xs.len()],
    };
    let kernel = match cfg.kernel {
        KernelSpec::Linear => Kernel::Linear,
        KernelSpec::Rbf { gamma: Gamma::Value(g) } => Kernel::Rbf { gamma: g },
        KernelSpec::Rbf { gamma: Gamma::Named(GammaRule::Scale) } => Kernel::Rbf { gamma: kernel::scale_gamma(xs) },
    };
    let mut q = kernel::QMatrix::new(xs, y, kernel, cfg.cache_mb.saturating_mul(1 << 20));
    let max_iter = cfg.max_passes.saturating_mul(xs.len().max(1)).max(MIN_ITERATIONS);
    let sol = solver::solve(&mut q, y, &upper, cfg.tolerance, max_iter, trace);

    let support_indices: Vec<usize> = (0..xs.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
    let alphas: Vec<f64> = support_indices.iter().map(|&i| sol.alpha[i]).collect();
    let labels: Vec<f64> = support_indices.iter().map(|&i| y[i]).collect();
    let support_vectors: Vec<Vec<f64>> = support_indices.iter().map(|&i| xs[i].to_vec()).collect();
    let weights = matches!(kernel, Kernel::Linear).then(|| {
        let mut w = vec![0.0; dim];
        for ((sv, a), l) in support_vectors.iter().zip(&alphas).zip(&labels) {
            for (wk, xk) in w.iter_mut().zip(sv) {
                *wk += a * l * xk;
            }
        }
        w
    });
    let dual_objective = sol.alpha.iter().zip(&sol.grad).map(|(a, g)| a - 0.5 * a * (g + 1.0)).sum();
    Ok(TracedFit {
        model: BinarySvmModel {
            kernel,
            c: cfg.c,
            dim,
            support_indices,
            support_vectors,
            alphas,
            labels,
            bias: -sol.rho,
            weights,
            stats: SolverStats {
                iterations: sol.iterations,
                converged: sol.converged,
                kkt_gap: sol.gap,
                dual_objective,
            },
        },
        dual_trace: sol.trace,
    })
}

impl BinarySvmModel {
    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Signed margin `f(x)`; the predicted label is its sign.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        match &self.weights {
            Some(w) => Ok(dot(w, x) + self.bias),
            None => self.kernel_decision_value(x),
        }
    }

    /// `Σ α_i y_i k(x_i, x) + b`, ignoring any explicit weight vector.
    pub fn kernel_decision_value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if self.support_vectors.len() != self.alphas.len() {
            return Err(Error::Document("support vectors were dropped from this model".into()));
        }
        let s: f64 = self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.labels)
            .map(|((sv, a), l)| a * l * self.kernel.eval(sv, x))
            .sum();
        Ok(s + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(if self.decision_value(x)? > 0.0 { 1.0 } else { -1.0 })
    }

    /// `‖w‖²` in feature space.
    pub fn weight_norm_sq(&self) -> f64 {
        if let Some(w) = &self.weights {
            return dot(w, w);
        }
        let n = self.alphas.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.alphas[i]
                    * self.alphas[j]
                    * self.labels[i]
                    * self.labels[j]
                    * self.kernel.eval(&self.support_vectors[i], &self.support_vectors[j]);
            }
        }
        acc
    }

    /// `½‖w‖² + C Σ max(0, 1 − y_i f(x_i))` on the given data.
    pub fn primal_objective(&self, xs: &[&[f64]], y: &[f64]) -> Result<f64> {
        let mut hinge = 0.0;
        for (x, &yi) in xs.iter().zip(y) {
            hinge += (1.0 - yi * self.decision_value(x)?).max(0.0);
        }
        Ok(0.5 * self.weight_norm_sq() + self.c * hinge)
    }

    /// Drop the support vectors of a linear model; predictions use `weights`.
    pub fn compact(mut self) -> Self {
        if self.weights.is_some() {
            self.support_vectors.clear();
        }
        self
    }
}

impl BinaryDecision for BinarySvmModel {
    fn decision(&self, x: &Tensor) -> Result<f64> {
        self.decision_value(x.data())
    }
}

pub type SvmEnsemble = OneVsOne<BinarySvmModel>;

/// One-vs-one SVM over flattened samples.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SvmLearner {
    pub config: SvmConfig,
}

impl Learner for SvmLearner {
    type Model = SvmEnsemble;

    fn fit(&self, data: &Dataset, exec: Exec) -> Result<SvmEnsemble> {
        train_ovo(data, &self.config, exec)
    }
}

/// One binary SVM per unordered class pair, each on that pair's samples.
pub fn train_ovo(data: &Dataset, cfg: &SvmConfig, exec: Exec) -> Result<SvmEnsemble> {
    cfg.validate()?;
    fit_one_vs_one(data, exec, |pair| {
        let xs: Vec<&[f64]> = pair.samples.iter().map(|t| t.data()).collect();
        train_binary_svm(&xs, &pair.targets, cfg)
    })
}
