//! Dense N-order tensors, mode-k contraction and the Gaussian tensor distance.
//!
//! Storage is row-major (last index fastest). Modes and flat indices are
//! 0-based in code.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest element count for which [`MetricCoefficients`] may be materialized.
pub const DEFAULT_METRIC_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor", into = "RawTensor")]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<RawTensor> for Tensor {
    type Error = Error;
    fn try_from(raw: RawTensor) -> Result<Self> {
        Tensor::new(raw.shape, raw.data)
    }
}

impl From<Tensor> for RawTensor {
    fn from(t: Tensor) -> Self {
        RawTensor { shape: t.shape, data: t.data }
    }
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidShape { shape: shape.to_vec(), reason: "order must be at least 1".into() });
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape { shape: shape.to_vec(), reason: "every extent must be at least 1".into() });
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))
        .ok_or_else(|| Error::InvalidShape { shape: shape.to_vec(), reason: "element count overflows".into() })
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if data.len() != len {
            return Err(Error::InvalidShape {
                shape,
                reason: format!("data has {} elements, shape requires {len}", data.len()),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = check_shape(&shape)?;
        Ok(Tensor { shape, data: vec![0.0; len] })
    }

    /// Order-1 tensor over a non-empty vector.
    pub fn vector(data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![data.len()], data)
    }

    /// Order-0 result, stored as a one-element order-1 tensor.
    pub fn scalar(value: f64) -> Self {
        Tensor { shape: vec![1], data: vec![value] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[multi_to_flat(index, &self.shape)?])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(&self.data)
    }

    /// Contract mode `mode` with `w`: `Σ_{i_k} x[.., i_k, ..] w[i_k]`.
    ///
    /// The result drops mode `mode`; contracting an order-1 tensor gives a scalar.
    pub fn mode_product(&self, w: &[f64], mode: usize) -> Result<Tensor> {
        let order = self.order();
        if mode >= order {
            return Err(Error::ModeOutOfRange { mode, order });
        }
        let extent = self.shape[mode];
        if w.len() != extent {
            return Err(Error::ModeLengthMismatch { mode, extent, len: w.len() });
        }
        let outer: usize = self.shape[..mode].iter().product();
        let inner: usize = self.shape[mode + 1..].iter().product();
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            let dst = &mut out[o * inner..(o + 1) * inner];
            for (i, &wi) in w.iter().enumerate() {
                let src = &self.data[(o * extent + i) * inner..(o * extent + i + 1) * inner];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += s * wi;
                }
            }
        }
        if order == 1 {
            return Ok(Tensor::scalar(out[0]));
        }
        let mut shape = self.shape.clone();
        shape.remove(mode);
        Ok(Tensor { shape, data: out })
    }

    /// Contract every mode except `keep` with the matching vector of `ws`,
    /// returning a vector of length `shape[keep]`.
    pub fn contract_except(&self, ws: &[Vec<f64>], keep: usize) -> Result<Vec<f64>> {
        let order = self.order();
        if ws.len() != order {
            return Err(Error::DimensionMismatch { expected: order, got: ws.len() });
        }
        if keep >= order {
            return Err(Error::ModeOutOfRange { mode: keep, order });
        }
        for (mode, w) in ws.iter().enumerate() {
            if mode != keep && w.len() != self.shape[mode] {
                return Err(Error::ModeLengthMismatch { mode, extent: self.shape[mode], len: w.len() });
            }
        }
        // Highest modes first so lower mode indices stay valid.
        let mut cur: Option<Tensor> = None;
        for mode in (0..order).rev().filter(|&m| m != keep) {
            let next = cur.as_ref().unwrap_or(self).mode_product(&ws[mode], mode)?;
            cur = Some(next);
        }
        Ok(cur.map_or_else(|| self.data.clone(), Tensor::into_data))
    }

    /// Contract every mode: `x ×_1 w1 ×_2 w2 … ×_N wN`.
    pub fn full_contraction(&self, ws: &[Vec<f64>]) -> Result<f64> {
        let last = self.order() - 1;
        let v = self.contract_except(ws, last)?;
        if ws[last].len() != v.len() {
            return Err(Error::ModeLengthMismatch { mode: last, extent: v.len(), len: ws[last].len() });
        }
        Ok(dot(&v, &ws[last]))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn frobenius_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn flat_to_multi(flat: usize, shape: &[usize]) -> Result<Vec<usize>> {
    let len: usize = shape.iter().product();
    if flat >= len {
        return Err(Error::IndexOutOfRange { index: flat, len });
    }
    let mut idx = vec![0; shape.len()];
    let mut rem = flat;
    for (slot, &extent) in idx.iter_mut().zip(shape).rev() {
        *slot = rem % extent;
        rem /= extent;
    }
    Ok(idx)
}

pub fn multi_to_flat(index: &[usize], shape: &[usize]) -> Result<usize> {
    if index.len() != shape.len() {
        return Err(Error::DimensionMismatch { expected: shape.len(), got: index.len() });
    }
    let mut flat = 0;
    for (&i, &extent) in index.iter().zip(shape) {
        if i >= extent {
            return Err(Error::IndexOutOfRange { index: i, len: extent });
        }
        flat = flat * extent + i;
    }
    Ok(flat)
}

fn squared_location_distance(l: usize, m: usize, shape: &[usize]) -> f64 {
    let (mut a, mut b) = (l, m);
    let mut acc = 0.0;
    for &extent in shape.iter().rev() {
        let d = (a % extent) as f64 - (b % extent) as f64;
        acc += d * d;
        a /= extent;
        b /= extent;
    }
    acc
}

/// Euclidean distance between the grid positions of two flat indices.
pub fn location_distance(l: usize, m: usize, shape: &[usize]) -> Result<f64> {
    let len = check_shape(shape)?;
    for idx in [l, m] {
        if idx >= len {
            return Err(Error::IndexOutOfRange { index: idx, len });
        }
    }
    Ok(squared_location_distance(l, m, shape).sqrt())
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::param("sigma2", format!("must be positive and finite, got {sigma2}")))
    }
}

fn gaussian_scale(sigma2: f64) -> f64 {
    1.0 / (2.0 * PI * sigma2)
}

/// Materialized metric coefficients `G_lm = exp(-|p_l - p_m|² / 2σ²) / (2πσ²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCoefficients {
    sigma2: f64,
    shape: Vec<usize>,
    n: usize,
    values: Vec<f64>,
}

impl MetricCoefficients {
    pub fn new(shape: &[usize], sigma2: f64) -> Result<Self> {
        Self::with_cap(shape, sigma2, DEFAULT_METRIC_CAP)
    }

    pub fn with_cap(shape: &[usize], sigma2: f64, cap: usize) -> Result<Self> {
        check_sigma2(sigma2)?;
        let n = check_shape(shape)?;
        if n > cap {
            return Err(Error::MetricTooLarge { elements: n, cap });
        }
        let scale = gaussian_scale(sigma2);
        let mut values = vec![0.0; n * n];
        for l in 0..n {
            values[l * n + l] = scale;
            for m in l + 1..n {
                let g = scale * (-squared_location_distance(l, m, shape) / (2.0 * sigma2)).exp();
                values[l * n + m] = g;
                values[m * n + l] = g;
            }
        }
        Ok(MetricCoefficients { sigma2, shape: shape.to_vec(), n, values })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.values[l * self.n + m]
    }

    /// Row-major `size × size` matrix.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `√(dᵀ G d)` with `d = x − y`.
    pub fn distance(&self, x: &Tensor, y: &Tensor) -> Result<f64> {
        same_shape(x, y)?;
        if x.shape() != self.shape.as_slice() {
            return Err(Error::ShapeMismatch { expected: self.shape.clone(), got: x.shape().to_vec() });
        }
        let d = diff(x, y);
        let mut q = 0.0;
        for (l, &dl) in d.iter().enumerate() {
            let row = &self.values[l * self.n..(l + 1) * self.n];
            q += dl * dot(row, &d);
        }
        Ok(clamp_radicand(q, &d, self.sigma2))
    }
}

fn same_shape(x: &Tensor, y: &Tensor) -> Result<()> {
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch { expected: x.shape().to_vec(), got: y.shape().to_vec() });
    }
    Ok(())
}

fn diff(x: &Tensor, y: &Tensor) -> Vec<f64> {
    x.data().iter().zip(y.data()).map(|(a, b)| a - b).collect()
}

fn clamp_radicand(q: f64, d: &[f64], sigma2: f64) -> f64 {
    if q >= 0.0 {
        return q.sqrt();
    }
    let scale = gaussian_scale(sigma2) * d.iter().map(|v| v * v).sum::<f64>();
    if q < -1e-12 * scale.max(1.0) {
        log::warn!("tensor distance radicand {q:e} is negative beyond round-off");
    }
    0.0
}

/// Tensor distance by a double loop over all coordinate pairs; never builds `G`.
pub fn tensor_distance_streaming(x: &Tensor, y: &Tensor, sigma2: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    same_shape(x, y)?;
    let shape = x.shape();
    let d = diff(x, y);
    let scale = gaussian_scale(sigma2);
    let mut q = 0.0;
    for (l, &dl) in d.iter().enumerate() {
        if dl == 0.0 {
            continue;
        }
        let mut row = dl;
        for (m, &dm) in d.iter().enumerate().skip(l + 1) {
            row += 2.0 * dm * (-squared_location_distance(l, m, shape) / (2.0 * sigma2)).exp();
        }
        q += dl * row;
    }
    Ok(clamp_radicand(scale * q, &d, sigma2))
}

/// Tensor distance through a materialized `G` (subject to [`DEFAULT_METRIC_CAP`]).
pub fn tensor_distance_materialized(x: &Tensor, y: &Tensor, sigma2: f64) -> Result<f64> {
    same_shape(x, y)?;
    MetricCoefficients::new(x.shape(), sigma2)?.distance(x, y)
}

/// Tensor distance for one fixed shape, evaluated through the Kronecker
/// factorization `G = (2πσ²)⁻¹ K_1 ⊗ … ⊗ K_N` with `(K_n)_ij = exp(-(i-j)²/2σ²)`.
///
/// Cost per pair is `∏I · ΣI_n` instead of `(∏I)²`; this is the route used by
/// nearest-neighbour search and sample weighting.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorDistance {
    sigma2: f64,
    shape: Vec<usize>,
    /// `factors[n][δ] = exp(-δ²/2σ²)` for `δ < I_n`.
    factors: Vec<Vec<f64>>,
}

impl TensorDistance {
    pub fn new(shape: &[usize], sigma2: f64) -> Result<Self> {
        check_sigma2(sigma2)?;
        check_shape(shape)?;
        let factors = shape
            .iter()
            .map(|&extent| (0..extent).map(|d| (-((d * d) as f64) / (2.0 * sigma2)).exp()).collect())
            .collect();
        Ok(TensorDistance { sigma2, shape: shape.to_vec(), factors })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Distance between two flat buffers laid out in this shape.
    pub fn distance_flat(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let len: usize = self.shape.iter().product();
        if x.len() != len || y.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: if x.len() != len { x.len() } else { y.len() },
            });
        }
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let mut z = d.clone();
        let mut scratch = vec![0.0; len];
        for (mode, factor) in self.factors.iter().enumerate() {
            let extent = self.shape[mode];
            let outer: usize = self.shape[..mode].iter().product();
            let inner: usize = self.shape[mode + 1..].iter().product();
            scratch.iter_mut().for_each(|v| *v = 0.0);
            for o in 0..outer {
                let base = o * extent * inner;
                for i in 0..extent {
                    let dst_start = base + i * inner;
                    for j in 0..extent {
                        let g = factor[i.abs_diff(j)];
                        if g == 0.0 {
                            continue;
                        }
                        let src_start = base + j * inner;
                        for t in 0..inner {
                            scratch[dst_start + t] += g * z[src_start + t];
                        }
                    }
                }
            }
            std::mem::swap(&mut z, &mut scratch);
        }
        let q = gaussian_scale(self.sigma2) * dot(&d, &z);
        Ok(clamp_radicand(q, &d, self.sigma2))
    }

    pub fn distance(&self, x: &Tensor, y: &Tensor) -> Result<f64> {
        same_shape(x, y)?;
        if x.shape() != self.shape.as_slice() {
            return Err(Error::ShapeMismatch { expected: self.shape.clone(), got: x.shape().to_vec() });
        }
        self.distance_flat(x.data(), y.data())
    }
}

/// Tensor distance between two same-shape tensors.
pub fn tensor_distance(x: &Tensor, y: &Tensor, sigma2: f64) -> Result<f64> {
    same_shape(x, y)?;
    TensorDistance::new(x.shape(), sigma2)?.distance(x, y)
}
