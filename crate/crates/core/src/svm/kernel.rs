use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::tensor::dot;

/// Kernel choice as configured; `gamma = "scale"` is resolved against the
/// training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    #[default]
    Linear,
    Rbf {
        gamma: Gamma,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    Named(GammaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    /// `1 / (d · Var(X))` over every entry of the training matrix.
    Scale,
}

impl Gamma {
    pub const SCALE: Gamma = Gamma::Named(GammaRule::Scale);
}

/// Kernel with every parameter fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

pub(crate) fn scale_gamma(xs: &[&[f64]]) -> f64 {
    let d = xs.first().map_or(1, |x| x.len()).max(1);
    let n = (xs.len() * d) as f64;
    let mean = xs.iter().flat_map(|x| x.iter()).sum::<f64>() / n;
    let var = xs.iter().flat_map(|x| x.iter()).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

/// Rows of the signed kernel matrix `Q_ij = y_i y_j K(x_i, x_j)`, computed on
/// demand and kept in a least-recently-used cache bounded in bytes.
pub(crate) struct QMatrix<'a> {
    xs: &'a [&'a [f64]],
    y: &'a [f64],
    kernel: Kernel,
    diag: Vec<f64>,
    rows: Vec<Option<Arc<[f64]>>>,
    last_used: Vec<u64>,
    clock: u64,
    cached: usize,
    capacity: usize,
}

impl<'a> QMatrix<'a> {
    pub(crate) fn new(xs: &'a [&'a [f64]], y: &'a [f64], kernel: Kernel, cache_bytes: usize) -> Self {
        let n = xs.len();
        let diag = xs.iter().map(|x| kernel.eval(x, x)).collect();
        let row_bytes = (n * std::mem::size_of::<f64>()).max(1);
        let capacity = (cache_bytes / row_bytes).clamp(2, n.max(2));
        QMatrix { xs, y, kernel, diag, rows: vec![None; n], last_used: vec![0; n], clock: 0, cached: 0, capacity }
    }

    pub(crate) fn len(&self) -> usize {
        self.xs.len()
    }

    /// `Q_ii`; equals `K_ii` because `y_i² = 1`.
    pub(crate) fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub(crate) fn row(&mut self, i: usize) -> Arc<[f64]> {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if let Some(r) = &self.rows[i] {
            return Arc::clone(r);
        }
        if self.cached >= self.capacity {
            let victim =
                (0..self.rows.len()).filter(|&k| self.rows[k].is_some() && k != i).min_by_key(|&k| self.last_used[k]);
            if let Some(v) = victim {
                self.rows[v] = None;
                self.cached -= 1;
            }
        }
        let xi = self.xs[i];
        let yi = self.y[i];
        let row: Arc<[f64]> =
            self.xs.iter().zip(self.y).map(|(xk, &yk)| yi * yk * self.kernel.eval(xi, xk)).collect::<Vec<_>>().into();
        self.rows[i] = Some(Arc::clone(&row));
        self.cached += 1;
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_respects_capacity_and_returns_correct_rows() {
        let data: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let y: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let mut q = QMatrix::new(&xs, &y, Kernel::Linear, 3 * 10 * 8);
        for round in 0..3 {
            for i in 0..10 {
                let r = q.row((i * 7 + round) % 10);
                assert!(q.cached <= 3);
                let i = (i * 7 + round) % 10;
                for k in 0..10 {
                    assert_eq!(r[k], y[i] * y[k] * (i as f64 * k as f64 + 1.0));
                }
            }
        }
    }

    #[test]
    fn gamma_parses_from_json() {
        let g: Gamma = serde_json::from_str("\"scale\"").unwrap();
        assert_eq!(g, Gamma::SCALE);
        let g: Gamma = serde_json::from_str("0.5").unwrap();
        assert_eq!(g, Gamma::Value(0.5));
    }

    #[test]
    fn scale_gamma_matches_definition() {
        let data = [vec![0.0, 2.0], vec![4.0, 2.0]];
        let xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        // entries {0,2,4,2}: mean 2, var 2, d = 2.
        assert_eq!(scale_gamma(&xs), 0.25);
    }
}
