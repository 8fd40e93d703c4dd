//! Support tensor machine: a rank-one multilinear classifier
//! `f(X) = X ×_1 w⁽¹⁾ ×_2 w⁽²⁾ … ×_N w⁽ᴺ⁾ + b`, trained by alternating over modes.
//!
//! With every mode but `n` fixed, the problem in `(w⁽ⁿ⁾, b)` is
//!
//! ```text
//! min ½ γ ‖w⁽ⁿ⁾‖² + C Σ ξ_i   s.t.  y_i (w⁽ⁿ⁾·x̂_i + b) ≥ 1 − ξ_i,  ξ_i ≥ 0
//! ```
//!
//! where `x̂_i` contracts sample `i` over every other mode and
//! `γ = ∏_{k≠n} ‖w⁽ᵏ⁾‖²`. Dividing by `γ` turns it into a standard soft-margin
//! SVM with penalty `C/γ`, which the dual solver in [`crate::svm`] handles.
//!
//! The per-mode scales are not identifiable (only their product is), so after
//! every sweep all modes but the last are normalized to unit length and the
//! scale is moved into the last mode before testing convergence.

use serde::{Deserialize, Serialize};

use crate::classifier::{fit_one_vs_one, BinaryDecision, Learner, OneVsOne};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::svm::{train_binary_svm_weighted, KernelSpec, SvmConfig};
use crate::tensor::{dot, frobenius_norm, Tensor, TensorDistance};

/// How per-sample penalties `C_i = C · s_i` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleWeighting {
    #[default]
    Uniform,
    /// `s_i = exp(−d_i² / 2σ_w²)` with `d_i` the tensor distance from sample
    /// `i` to its class mean and `σ_w` the median of those distances.
    DistanceBased { sigma2: f64 },
}

fn default_c() -> f64 {
    1.0
}
fn default_outer() -> usize {
    50
}
fn default_convergence() -> f64 {
    1e-4
}
fn default_inner_tol() -> f64 {
    1e-3
}
fn default_passes() -> usize {
    1000
}
fn default_cache() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StmConfig {
    #[serde(rename = "C", default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub weighting: SampleWeighting,
    #[serde(default = "default_outer")]
    pub max_outer_iters: usize,
    /// Relative change of the gauge-fixed mode vectors below which the sweeps stop.
    #[serde(default = "default_convergence")]
    pub convergence_tol: f64,
    /// KKT tolerance of each per-mode SVM solve.
    #[serde(default = "default_inner_tol")]
    pub tolerance: f64,
    #[serde(default = "default_passes")]
    pub max_passes: usize,
    #[serde(default = "default_cache")]
    pub cache_mb: usize,
}

impl Default for StmConfig {
    fn default() -> Self {
        StmConfig {
            c: default_c(),
            weighting: SampleWeighting::Uniform,
            max_outer_iters: default_outer(),
            convergence_tol: default_convergence(),
            tolerance: default_inner_tol(),
            max_passes: default_passes(),
            cache_mb: default_cache(),
        }
    }
}

impl StmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param("C", format!("must be positive, got {}", self.c)));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::param("max_outer_iters", "must be at least 1"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::param("convergence_tol", "must be positive"));
        }
        if let SampleWeighting::DistanceBased { sigma2 } = self.weighting {
            if !(sigma2 > 0.0) {
                return Err(Error::param("sigma2", format!("must be positive, got {sigma2}")));
            }
        }
        Ok(())
    }

    fn inner(&self, c: f64) -> SvmConfig {
        SvmConfig {
            c,
            kernel: KernelSpec::Linear,
            tolerance: self.tolerance,
            max_passes: self.max_passes,
            cache_mb: self.cache_mb,
        }
    }
}

/// A zero mode vector that was reset to the normalized all-ones vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reinit {
    pub sweep: usize,
    pub mode: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StmBinaryModel {
    pub shape: Vec<usize>,
    /// `w⁽ⁿ⁾` for every mode, gauge-fixed so all but the last have unit norm.
    pub modes: Vec<Vec<f64>>,
    pub bias: f64,
    /// `γ` used in each per-mode solve, in solve order.
    #[serde(default)]
    pub gamma_trace: Vec<f64>,
    /// Pooled primal objective after each per-mode solve.
    #[serde(default)]
    pub objective_trace: Vec<f64>,
    #[serde(default)]
    pub sweeps: usize,
    #[serde(default)]
    pub converged: bool,
    #[serde(default)]
    pub reinitialized: Vec<Reinit>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StmPrediction {
    pub label: f64,
    /// `X ×_1 w⁽¹⁾ … ×_N w⁽ᴺ⁾ + b`.
    pub decision: f64,
    /// Geometric distance to the separating hyperplane.
    pub margin: f64,
}

fn unit_ones(len: usize) -> Vec<f64> {
    vec![1.0 / (len as f64).sqrt(); len]
}

fn gauge_fix(modes: &mut [Vec<f64>]) {
    let last = modes.len() - 1;
    let mut scale = 1.0;
    for w in &mut modes[..last] {
        let n = frobenius_norm(w);
        if n > 0.0 {
            w.iter_mut().for_each(|v| *v /= n);
            scale *= n;
        }
    }
    modes[last].iter_mut().for_each(|v| *v *= scale);
}

fn relative_change(new: &[Vec<f64>], old: &[Vec<f64>]) -> f64 {
    new.iter()
        .zip(old)
        .map(|(a, b)| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            let base = frobenius_norm(b);
            if base > 0.0 {
                d / base
            } else {
                d
            }
        })
        .fold(0.0, f64::max)
}

fn validate_samples(xs: &[&Tensor], y: &[f64]) -> Result<Vec<usize>> {
    let first = xs.first().ok_or(Error::EmptyInput("training set"))?;
    if y.len() != xs.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: y.len() });
    }
    for x in xs {
        if x.shape() != first.shape() {
            return Err(Error::ShapeMismatch { expected: first.shape().to_vec(), got: x.shape().to_vec() });
        }
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }
    Ok(first.shape().to_vec())
}

/// Pooled objective `½ ∏_k ‖w⁽ᵏ⁾‖² + C Σ s_i max(0, 1 − y_i f(X_i))`.
pub fn pooled_objective(
    modes: &[Vec<f64>],
    bias: f64,
    xs: &[&Tensor],
    y: &[f64],
    c: f64,
    weights: Option<&[f64]>,
) -> Result<f64> {
    let reg: f64 = modes.iter().map(|w| dot(w, w)).product();
    let mut hinge = 0.0;
    for (i, (x, &yi)) in xs.iter().zip(y).enumerate() {
        let f = x.full_contraction(modes)? + bias;
        hinge += weights.map_or(1.0, |w| w[i]) * (1.0 - yi * f).max(0.0);
    }
    Ok(0.5 * reg + c * hinge)
}

/// Distance-based sample weights (see [`SampleWeighting::DistanceBased`]).
pub fn distance_weights(xs: &[&Tensor], y: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    let shape = validate_samples(xs, y)?;
    let metric = TensorDistance::new(&shape, sigma2)?;
    let len: usize = shape.iter().product();
    let mut means = [vec![0.0; len], vec![0.0; len]];
    let mut counts = [0usize; 2];
    for (x, &yi) in xs.iter().zip(y) {
        let k = usize::from(yi > 0.0);
        counts[k] += 1;
        for (m, v) in means[k].iter_mut().zip(x.data()) {
            *m += v;
        }
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= c.max(1) as f64);
    }
    let d: Vec<f64> = xs
        .iter()
        .zip(y)
        .map(|(x, &yi)| metric.distance_flat(x.data(), &means[usize::from(yi > 0.0)]))
        .collect::<Result<_>>()?;
    let mut sorted = d.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) { 0.5 * (sorted[mid - 1] + sorted[mid]) } else { sorted[mid] };
    if median <= 0.0 {
        return Ok(vec![1.0; d.len()]);
    }
    Ok(d.iter().map(|di| (-(di * di) / (2.0 * median * median)).exp().max(1e-6)).collect())
}

/// Train a binary STM on `±1` labels.
pub fn train_stm_binary(xs: &[&Tensor], y: &[f64], cfg: &StmConfig) -> Result<StmBinaryModel> {
    let weights = match cfg.weighting {
        SampleWeighting::Uniform => None,
        SampleWeighting::DistanceBased { sigma2 } => Some(distance_weights(xs, y, sigma2)?),
    };
    fit(xs, y, cfg, weights.as_deref())
}

/// Train with explicit per-sample penalty weights.
pub fn train_stm_binary_weighted(
    xs: &[&Tensor],
    y: &[f64],
    cfg: &StmConfig,
    weights: &[f64],
) -> Result<StmBinaryModel> {
    if weights.len() != xs.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: weights.len() });
    }
    fit(xs, y, cfg, Some(weights))
}

fn fit(xs: &[&Tensor], y: &[f64], cfg: &StmConfig, weights: Option<&[f64]>) -> Result<StmBinaryModel> {
    cfg.validate()?;
    let shape = validate_samples(xs, y)?;
    let order = shape.len();
    let mut modes: Vec<Vec<f64>> = shape.iter().map(|&e| unit_ones(e)).collect();
    let mut bias = 0.0;
    let mut gamma_trace = Vec::new();
    let mut objective_trace = Vec::new();
    let mut reinitialized = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let ones;
    let weights = match weights {
        Some(w) => w,
        None => {
            ones = vec![1.0; xs.len()];
            &ones
        }
    };

    while sweeps < cfg.max_outer_iters {
        let previous = modes.clone();
        for n in 0..order {
            let mut gamma: f64 = (0..order).filter(|&k| k != n).map(|k| dot(&modes[k], &modes[k])).product();
            if gamma == 0.0 {
                for k in (0..order).filter(|&k| k != n) {
                    if dot(&modes[k], &modes[k]) == 0.0 {
                        log::debug!("mode {k} collapsed to zero in sweep {sweeps}; reinitializing");
                        modes[k] = unit_ones(shape[k]);
                        reinitialized.push(Reinit { sweep: sweeps, mode: k });
                    }
                }
                gamma = (0..order).filter(|&k| k != n).map(|k| dot(&modes[k], &modes[k])).product();
            }
            let projected: Vec<Vec<f64>> = xs.iter().map(|x| x.contract_except(&modes, n)).collect::<Result<_>>()?;
            let views: Vec<&[f64]> = projected.iter().map(Vec::as_slice).collect();
            let svm = train_binary_svm_weighted(&views, y, &cfg.inner(cfg.c / gamma), weights)?;
            modes[n] = svm.weights.unwrap_or_else(|| vec![0.0; shape[n]]);
            bias = svm.bias;
            gamma_trace.push(gamma);
            objective_trace.push(pooled_objective(&modes, bias, xs, y, cfg.c, Some(weights))?);
        }
        sweeps += 1;
        gauge_fix(&mut modes);
        if relative_change(&modes, &previous) < cfg.convergence_tol {
            converged = true;
            break;
        }
    }
    Ok(StmBinaryModel { shape, modes, bias, gamma_trace, objective_trace, sweeps, converged, reinitialized })
}

impl StmBinaryModel {
    fn check(&self, x: &Tensor) -> Result<()> {
        if x.shape() != self.shape.as_slice() {
            return Err(Error::ShapeMismatch { expected: self.shape.clone(), got: x.shape().to_vec() });
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    /// `x̂`: `x` contracted with every mode vector except mode `n`.
    pub fn contract_except(&self, x: &Tensor, n: usize) -> Result<Vec<f64>> {
        self.check(x)?;
        x.contract_except(&self.modes, n)
    }

    pub fn decision_value(&self, x: &Tensor) -> Result<f64> {
        self.check(x)?;
        Ok(x.full_contraction(&self.modes)? + self.bias)
    }

    pub fn predict(&self, x: &Tensor) -> Result<StmPrediction> {
        let decision = self.decision_value(x)?;
        let norm: f64 = self.modes.iter().map(|w| frobenius_norm(w)).product();
        let margin = if norm > 0.0 { decision.abs() / norm } else { f64::INFINITY };
        Ok(StmPrediction { label: if decision > 0.0 { 1.0 } else { -1.0 }, decision, margin })
    }
}

impl BinaryDecision for StmBinaryModel {
    fn decision(&self, x: &Tensor) -> Result<f64> {
        self.decision_value(x)
    }
}

pub type StmEnsemble = OneVsOne<StmBinaryModel>;

pub fn train_stm_ovo(data: &Dataset, cfg: &StmConfig, exec: Exec) -> Result<StmEnsemble> {
    cfg.validate()?;
    fit_one_vs_one(data, exec, |pair| train_stm_binary(&pair.samples, &pair.targets, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StmLearner {
    pub config: StmConfig,
}

impl Learner for StmLearner {
    type Model = StmEnsemble;

    fn fit(&self, data: &Dataset, exec: Exec) -> Result<StmEnsemble> {
        train_stm_ovo(data, &self.config, exec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::train_binary_svm;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat(rows: &[[f64; 2]; 2]) -> Tensor {
        Tensor::new(vec![2, 2], rows.iter().flatten().copied().collect()).unwrap()
    }

    fn manual(modes: Vec<Vec<f64>>, bias: f64) -> StmBinaryModel {
        StmBinaryModel {
            shape: modes.iter().map(Vec::len).collect(),
            modes,
            bias,
            gamma_trace: vec![],
            objective_trace: vec![],
            sweeps: 0,
            converged: true,
            reinitialized: vec![],
        }
    }

    #[test]
    fn contract_except_picks_column() {
        let m = manual(vec![vec![3.0, 3.0], vec![0.0, 1.0]], 0.0);
        assert_eq!(m.contract_except(&mat(&[[0.0, 5.0], [2.0, 0.0]]), 0).unwrap(), vec![5.0, 0.0]);
    }

    #[test]
    fn prediction_examples() {
        let m = manual(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 0.0);
        let x = mat(&[[0.0, 5.0], [2.0, 0.0]]);
        let p = m.predict(&x).unwrap();
        assert_eq!(p.label, 1.0);
        assert_relative_eq!(p.margin, 5.0);
        assert_eq!(m.predict(&x.map(|v| -v)).unwrap().label, -1.0);

        let biased = manual(vec![vec![1.0, 0.0], vec![0.0, 1.0]], -0.5);
        assert_eq!(biased.predict(&Tensor::zeros(vec![2, 2]).unwrap()).unwrap().label, -1.0);
        assert!(m.predict(&Tensor::zeros(vec![3, 2]).unwrap()).is_err());
    }

    #[test]
    fn scale_gauge_leaves_decisions_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = manual(vec![(0..4).map(|_| rng.random()).collect(), (0..3).map(|_| rng.random()).collect()], 0.3);
        let mut g = m.clone();
        g.modes[0].iter_mut().for_each(|v| *v *= 7.5);
        g.modes[1].iter_mut().for_each(|v| *v /= 7.5);
        for _ in 0..20 {
            let x = Tensor::new(vec![4, 3], (0..12).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            assert_relative_eq!(m.decision_value(&x).unwrap(), g.decision_value(&x).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn order_one_equals_svm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<Vec<f64>> = (0..30).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> =
            data.iter().map(|x| if x[0] - x[2] + 0.3 * rng.random::<f64>() > 0.1 { 1.0 } else { -1.0 }).collect();
        let tensors: Vec<Tensor> = data.iter().map(|x| Tensor::vector(x.clone()).unwrap()).collect();
        let refs: Vec<&Tensor> = tensors.iter().collect();
        let cfg = StmConfig { c: 2.0, ..StmConfig::default() };
        let stm = train_stm_binary(&refs, &y, &cfg).unwrap();
        let views: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let svm = train_binary_svm(&views, &y, &SvmConfig::linear(2.0)).unwrap();
        assert!(stm.converged);
        for (t, x) in tensors.iter().zip(&views) {
            assert_eq!(stm.predict(t).unwrap().label, svm.predict(x).unwrap());
        }
        let a = pooled_objective(&stm.modes, stm.bias, &refs, &y, 2.0, None).unwrap();
        let b = svm.primal_objective(&views, &y).unwrap();
        assert!((a - b).abs() <= 1e-6 * b.max(1.0));
    }

    #[test]
    fn symmetric_pair_has_zero_bias() {
        let a = mat(&[[1.0, -2.0], [0.5, 3.0]]);
        let xs = [&a, &a.map(|v| -v)];
        let m = train_stm_binary(&xs, &[1.0, -1.0], &StmConfig { tolerance: 1e-8, ..StmConfig::default() }).unwrap();
        assert!(m.bias.abs() < 1e-8, "bias {}", m.bias);
        assert_eq!(m.predict(xs[0]).unwrap().label, 1.0);
    }

    #[test]
    fn uniform_explicit_weights_reproduce_unweighted() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<Tensor> = (0..16)
            .map(|_| Tensor::new(vec![3, 2], (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
            .collect();
        let refs: Vec<&Tensor> = xs.iter().collect();
        let y: Vec<f64> = xs.iter().map(|x| if x.data()[0] + x.data()[3] > 0.0 { 1.0 } else { -1.0 }).collect();
        let cfg = StmConfig::default();
        assert_eq!(
            train_stm_binary(&refs, &y, &cfg).unwrap(),
            train_stm_binary_weighted(&refs, &y, &cfg, &[1.0; 16]).unwrap()
        );
    }

    #[test]
    fn distance_weights_downweight_outliers() {
        let mut xs: Vec<Tensor> =
            (0..10).map(|i| Tensor::new(vec![2, 2], vec![1.0 + 0.01 * i as f64, 0.0, 0.0, 1.0]).unwrap()).collect();
        xs.extend((0..10).map(|i| Tensor::new(vec![2, 2], vec![-1.0 - 0.01 * i as f64, 0.0, 0.0, -1.0]).unwrap()));
        xs[3] = Tensor::new(vec![2, 2], vec![9.0, 9.0, 9.0, 9.0]).unwrap();
        let refs: Vec<&Tensor> = xs.iter().collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 1.0 } else { -1.0 }).collect();
        let w = distance_weights(&refs, &y, 1.0).unwrap();
        assert!(w.iter().all(|&v| v > 0.0 && v <= 1.0));
        assert!(w[3] < 1e-3 && (0..10).filter(|&i| i != 3).all(|i| w[i] > 100.0 * w[3]), "{w:?}");
        assert!(w[10..].iter().all(|&v| v > 0.99));
    }

    #[test]
    fn rejects_bad_input() {
        let a = mat(&[[1.0, 0.0], [0.0, 1.0]]);
        let b = Tensor::zeros(vec![4]).unwrap();
        assert!(matches!(
            train_stm_binary(&[&a, &b], &[1.0, -1.0], &StmConfig::default()),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(train_stm_binary(&[&a, &a], &[1.0, 1.0], &StmConfig::default()), Err(Error::SingleClass)));
    }
}
