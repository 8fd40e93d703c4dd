//! Raw inertial streams to filtered, standardized, fixed-length windows.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, LabelMap};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::tensor::Tensor;

pub const ACCEL_CHANNELS: [&str; 3] = ["ax", "ay", "az"];
pub const GYRO_CHANNELS: [&str; 3] = ["gx", "gy", "gz"];

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
}

/// Time-aligned per-axis series from one participant.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    timestamps: Vec<f64>,
    channels: Vec<Channel>,
    labels: Option<Vec<usize>>,
    subject: u32,
}

impl SampleStream {
    pub fn new(timestamps: Vec<f64>, channels: Vec<Channel>, labels: Option<Vec<usize>>, subject: u32) -> Result<Self> {
        let n = timestamps.len();
        if timestamps.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::param("timestamps", "must be nondecreasing"));
        }
        for name in ACCEL_CHANNELS {
            if !channels.iter().any(|c| c.name == name) {
                return Err(Error::param("channels", format!("missing accelerometer channel `{name}`")));
            }
        }
        for c in &channels {
            if c.values.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.values.len() });
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: l.len() });
            }
        }
        Ok(SampleStream { timestamps, channels, labels, subject })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn subject(&self) -> u32 {
        self.subject
    }

    /// Apply the configured filters to every channel (moving average first).
    pub fn filtered(&self, cfg: &FilterConfig) -> Result<SampleStream> {
        let mut out = self.clone();
        for c in &mut out.channels {
            c.values = cfg.apply(&c.values)?;
        }
        Ok(out)
    }
}

/// Trailing moving average; the first `width − 1` outputs average the
/// available prefix.
pub fn moving_average(series: &[f64], width: usize) -> Result<Vec<f64>> {
    if width == 0 {
        return Err(Error::param("width", "moving-average width must be at least 1"));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (t, &v) in series.iter().enumerate() {
        sum += v;
        if t >= width {
            sum -= series[t - width];
        }
        let n = (t + 1).min(width);
        // Re-sum periodically so the running sum does not drift on long streams.
        if t % 4096 == 4095 {
            sum = series[t + 1 - n..=t].iter().sum();
        }
        out.push(sum / n as f64);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KalmanConfig {
    pub process_variance: f64,
    pub measurement_variance: f64,
    /// `None` starts from the first measurement.
    #[serde(default)]
    pub initial_estimate: Option<f64>,
    pub initial_variance: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        KalmanConfig {
            process_variance: 1e-3,
            measurement_variance: 1e-2,
            initial_estimate: None,
            initial_variance: 1.0,
        }
    }
}

impl KalmanConfig {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("process_variance", self.process_variance),
            ("measurement_variance", self.measurement_variance),
            ("initial_variance", self.initial_variance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Fixed point of the posterior-variance recursion `P = (P+Q)R / (P+Q+R)`.
    pub fn steady_state_variance(&self) -> f64 {
        let (q, r) = (self.process_variance, self.measurement_variance);
        (-q + (q * q + 4.0 * q * r).sqrt()) / 2.0
    }
}

/// Scalar random-walk Kalman filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Kalman1d {
    q: f64,
    r: f64,
    estimate: Option<f64>,
    variance: f64,
}

impl Kalman1d {
    pub fn new(cfg: &KalmanConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Kalman1d {
            q: cfg.process_variance,
            r: cfg.measurement_variance,
            estimate: cfg.initial_estimate,
            variance: cfg.initial_variance,
        })
    }

    /// One predict/update cycle; returns the posterior estimate.
    pub fn step(&mut self, z: f64) -> f64 {
        let prior = self.estimate.unwrap_or(z);
        let prior_var = self.variance + self.q;
        let gain = prior_var / (prior_var + self.r);
        let post = prior + gain * (z - prior);
        self.variance = (1.0 - gain) * prior_var;
        self.estimate = Some(post);
        post
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

pub fn kalman_1d(series: &[f64], cfg: &KalmanConfig) -> Result<Vec<f64>> {
    let mut filter = Kalman1d::new(cfg)?;
    Ok(series.iter().map(|&z| filter.step(z)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default)]
    pub moving_average_width: Option<usize>,
    #[serde(default)]
    pub kalman: Option<KalmanConfig>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { moving_average_width: Some(3), kalman: Some(KalmanConfig::default()) }
    }
}

impl FilterConfig {
    pub fn none() -> Self {
        FilterConfig { moving_average_width: None, kalman: None }
    }

    pub fn apply(&self, series: &[f64]) -> Result<Vec<f64>> {
        let mut out = series.to_vec();
        if let Some(w) = self.moving_average_width {
            out = moving_average(&out, w)?;
        }
        if let Some(k) = &self.kalman {
            out = kalman_1d(&out, k)?;
        }
        Ok(out)
    }
}

/// Which entries share one mean/std pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeMode {
    /// One statistic per flat element (per feature for vectors).
    #[default]
    PerElement,
    /// One statistic per index of the last mode (per channel for `(T, C)` windows).
    PerLastMode,
}

/// Per-feature mean and standard deviation fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mode: StandardizeMode,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const STD_FLOOR: f64 = 1e-12;
const CHUNK_ROWS: usize = 512;

impl Standardizer {
    /// Fit on rows of equal length. Partial sums are formed over fixed
    /// 512-row chunks and combined in chunk order, so the result does not
    /// depend on the execution policy.
    pub fn fit(rows: &[&[f64]], mode: StandardizeMode, last_extent: usize, exec: Exec) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput("standardize"))?;
        let d = first.len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: r.len() });
        }
        let groups = match mode {
            StandardizeMode::PerElement => d,
            StandardizeMode::PerLastMode => {
                if last_extent == 0 || d % last_extent != 0 {
                    return Err(Error::param("last_extent", format!("{last_extent} does not divide row length {d}")));
                }
                last_extent
            }
        };
        let per_group = (rows.len() * d / groups) as f64;
        let n_chunks = rows.len().div_ceil(CHUNK_ROWS);
        let chunk = |c: usize| &rows[c * CHUNK_ROWS..((c + 1) * CHUNK_ROWS).min(rows.len())];

        let sums = exec.map(n_chunks, |c| {
            let mut acc = vec![0.0; groups];
            for r in chunk(c) {
                for (j, &v) in r.iter().enumerate() {
                    acc[j % groups] += v;
                }
            }
            acc
        });
        let mut mean = vec![0.0; groups];
        for s in &sums {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= per_group);

        let sq = exec.map(n_chunks, |c| {
            let mut acc = vec![0.0; groups];
            for r in chunk(c) {
                for (j, &v) in r.iter().enumerate() {
                    let dv = v - mean[j % groups];
                    acc[j % groups] += dv * dv;
                }
            }
            acc
        });
        let mut var = vec![0.0; groups];
        for s in &sq {
            for (m, v) in var.iter_mut().zip(s) {
                *m += v;
            }
        }
        let std = var.iter().map(|v| (v / per_group).sqrt()).map(|s| if s < STD_FLOOR { 1.0 } else { s }).collect();
        Ok(Standardizer { mode, mean, std })
    }

    /// Fit on every sample of a dataset (per channel when `mode` is `PerLastMode`).
    pub fn fit_dataset(data: &Dataset, mode: StandardizeMode, exec: Exec) -> Result<Self> {
        let rows: Vec<&[f64]> = data.samples.iter().map(Tensor::data).collect();
        let last = data.sample_shape().and_then(|s| s.last().copied()).unwrap_or(1);
        Standardizer::fit(&rows, mode, last, exec)
    }

    fn groups(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, row: &[f64]) -> Result<()> {
        let ok = match self.mode {
            StandardizeMode::PerElement => row.len() == self.groups(),
            StandardizeMode::PerLastMode => row.len().is_multiple_of(self.groups()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.groups(), got: row.len() })
        }
    }

    pub fn transform_row(&self, row: &mut [f64]) -> Result<()> {
        self.check(row)?;
        let g = self.groups();
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - self.mean[j % g]) / self.std[j % g];
        }
        Ok(())
    }

    pub fn inverse_row(&self, row: &mut [f64]) -> Result<()> {
        self.check(row)?;
        let g = self.groups();
        for (j, v) in row.iter_mut().enumerate() {
            *v = *v * self.std[j % g] + self.mean[j % g];
        }
        Ok(())
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|r| {
                let mut r = r.clone();
                self.transform_row(&mut r)?;
                Ok(r)
            })
            .collect()
    }

    pub fn transform_dataset(&self, data: &Dataset) -> Result<Dataset> {
        let mut out = data.clone();
        for s in &mut out.samples {
            self.transform_row(s.data_mut())?;
        }
        Ok(out)
    }
}

/// Fit a per-feature standardizer on `rows` and return the transformed rows.
pub fn standardize(rows: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Standardizer)> {
    let views: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let s = Standardizer::fit(&views, StandardizeMode::PerElement, 1, Exec::Sequential)?;
    Ok((s.transform(rows)?, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labeling {
    /// Most frequent label in the window; ties go to the lowest class id.
    Majority,
    /// Keep only windows whose labels are uniform.
    #[default]
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub length: usize,
    pub stride: usize,
    #[serde(default)]
    pub labeling: Labeling,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { length: 128, stride: 64, labeling: Labeling::Strict }
    }
}

/// A `(T, C)` window with its activity and participant.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub values: Tensor,
    pub label: usize,
    pub subject: u32,
    /// Index of the first timestep in the source stream.
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Windowing {
    pub windows: Vec<Window>,
    /// Windows that straddled a label change under strict labeling.
    pub dropped: usize,
}

pub fn window_count(len: usize, length: usize, stride: usize) -> usize {
    if len < length || length == 0 || stride == 0 {
        0
    } else {
        (len - length) / stride + 1
    }
}

pub fn window_stream(stream: &SampleStream, cfg: &WindowConfig) -> Result<Windowing> {
    if cfg.length == 0 {
        return Err(Error::param("length", "window length must be at least 1"));
    }
    if cfg.stride == 0 {
        return Err(Error::param("stride", "window stride must be at least 1"));
    }
    let labels = stream.labels().ok_or(Error::EmptyInput("label track"))?;
    let n_channels = stream.channels.len();
    let mut out = Windowing::default();
    for w in 0..window_count(stream.len(), cfg.length, cfg.stride) {
        let start = w * cfg.stride;
        let span = &labels[start..start + cfg.length];
        let label = match cfg.labeling {
            Labeling::Strict => {
                if span.iter().any(|&l| l != span[0]) {
                    out.dropped += 1;
                    continue;
                }
                span[0]
            }
            Labeling::Majority => {
                let max = span.iter().copied().max().unwrap_or(0);
                let mut counts = vec![0usize; max + 1];
                for &l in span {
                    counts[l] += 1;
                }
                // max_by_key returns the last maximum; iterate in reverse so ties go to the lowest id.
                counts.iter().enumerate().rev().max_by_key(|(_, &c)| c).map(|(l, _)| l).unwrap_or(0)
            }
        };
        let mut data = Vec::with_capacity(cfg.length * n_channels);
        for t in start..start + cfg.length {
            data.extend(stream.channels.iter().map(|c| c.values[t]));
        }
        out.windows.push(Window {
            values: Tensor::new(vec![cfg.length, n_channels], data)?,
            label,
            subject: stream.subject,
            start,
        });
    }
    Ok(out)
}

/// Collect windows into a dataset of `(T, C)` tensors.
pub fn windows_to_dataset(windows: Vec<Window>, classes: LabelMap) -> Result<Dataset> {
    let mut samples = Vec::with_capacity(windows.len());
    let mut labels = Vec::with_capacity(windows.len());
    let mut subjects = Vec::with_capacity(windows.len());
    for w in windows {
        samples.push(w.values);
        labels.push(w.label);
        subjects.push(w.subject);
    }
    Dataset::new(samples, labels, subjects, classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn stream(labels: Vec<usize>) -> SampleStream {
        let n = labels.len();
        let ch = |name: &str, k: f64| Channel { name: name.into(), values: (0..n).map(|t| k * t as f64).collect() };
        SampleStream::new(
            (0..n).map(|t| t as f64 * 0.02).collect(),
            vec![ch("ax", 1.0), ch("ay", 2.0), ch("az", 3.0)],
            Some(labels),
            4,
        )
        .unwrap()
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[5.0; 4], 3).unwrap(), vec![5.0; 4]);
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap(), vec![1.0, 1.5, 2.0, 3.0, 4.0]);
        let s = [0.3, -1.0, 7.5];
        assert_eq!(moving_average(&s, 1).unwrap(), s.to_vec());
        assert!(moving_average(&s, 0).is_err());
        assert!(moving_average(&[], 4).unwrap().is_empty());
    }

    #[test]
    fn moving_average_keeps_ramp_slope() {
        let ramp: Vec<f64> = (0..50).map(|t| 2.0 * t as f64 - 3.0).collect();
        let out = moving_average(&ramp, 5).unwrap();
        for t in 5..50 {
            assert_relative_eq!(out[t] - out[t - 1], 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn kalman_constant_input_is_fixed_point() {
        let cfg = KalmanConfig { initial_estimate: Some(2.5), ..KalmanConfig::default() };
        assert!(kalman_1d(&[2.5; 20], &cfg).unwrap().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn kalman_tracks_measurements_when_noise_vanishes() {
        let cfg = KalmanConfig { measurement_variance: 1e-12, initial_estimate: Some(0.0), ..KalmanConfig::default() };
        let z: Vec<f64> = (0..30).map(|t| (t as f64 * 0.4).sin() * 3.0).collect();
        for (a, b) in kalman_1d(&z, &cfg).unwrap().iter().zip(&z) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn kalman_hand_stepped() {
        // P1⁻ = 2, K1 = 2/3, x̂1 = 0, P1 = 2/3; P2⁻ = 5/3, K2 = 5/8, x̂2 = 6.25.
        let cfg = KalmanConfig {
            process_variance: 1.0,
            measurement_variance: 1.0,
            initial_estimate: Some(0.0),
            initial_variance: 1.0,
        };
        let out = kalman_1d(&[0.0, 10.0], &cfg).unwrap();
        assert_eq!(out[0], 0.0);
        assert_relative_eq!(out[1], 6.25, epsilon = 1e-12);
    }

    #[test]
    fn kalman_variance_approaches_steady_state() {
        let cfg = KalmanConfig { initial_variance: 5.0, ..KalmanConfig::default() };
        let target = cfg.steady_state_variance();
        let mut f = Kalman1d::new(&cfg).unwrap();
        let mut prev_gap = (f.variance() - target).abs();
        for _ in 0..200 {
            f.step(1.0);
            assert!(f.variance() > 0.0);
            let gap = (f.variance() - target).abs();
            assert!(gap <= prev_gap + 1e-15);
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-12);
    }

    #[test]
    fn kalman_rejects_nonpositive_variances() {
        for cfg in [
            KalmanConfig { process_variance: 0.0, ..KalmanConfig::default() },
            KalmanConfig { measurement_variance: -1.0, ..KalmanConfig::default() },
            KalmanConfig { initial_variance: 0.0, ..KalmanConfig::default() },
        ] {
            assert!(kalman_1d(&[1.0], &cfg).is_err());
        }
    }

    #[test]
    fn standardize_examples() {
        let rows = vec![vec![2.0, 0.0], vec![2.0, 2.0]];
        let (z, rec) = standardize(&rows).unwrap();
        assert_eq!(z, vec![vec![0.0, -1.0], vec![0.0, 1.0]]);
        assert_eq!(rec.transform(&rows).unwrap(), z);
        assert!(standardize(&[]).is_err());
    }

    #[test]
    fn standardize_chunking_is_policy_independent() {
        let rows: Vec<Vec<f64>> = (0..1500).map(|i| vec![(i as f64 * 0.37).sin() * 1e3, i as f64]).collect();
        let views: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let a = Standardizer::fit(&views, StandardizeMode::PerElement, 1, Exec::Sequential).unwrap();
        let b = Standardizer::fit(&views, StandardizeMode::PerElement, 1, Exec::Parallel { jobs: 4 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn per_channel_mode() {
        let rows = [vec![0.0, 10.0, 2.0, 30.0]];
        let views: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let s = Standardizer::fit(&views, StandardizeMode::PerLastMode, 2, Exec::Sequential).unwrap();
        assert_eq!(s.mean, vec![1.0, 20.0]);
        assert_eq!(s.std, vec![1.0, 10.0]);
    }

    #[test]
    fn window_count_formula() {
        assert_eq!(window_count(5, 2, 1), 4);
        let w = window_stream(&stream(vec![0; 5]), &WindowConfig { length: 2, stride: 1, labeling: Labeling::Strict })
            .unwrap();
        assert_eq!(w.windows.len(), 4);
        assert_eq!(w.dropped, 0);
        assert_eq!(w.windows[1].values.shape(), &[2, 3]);
        assert_eq!(w.windows[1].values.data(), &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(w.windows[1].subject, 4);
    }

    #[test]
    fn short_stream_gives_no_windows() {
        let w = window_stream(&stream(vec![1; 10]), &WindowConfig::default()).unwrap();
        assert!(w.windows.is_empty());
    }

    #[test]
    fn majority_labeling_breaks_ties_low() {
        let cfg = WindowConfig { length: 4, stride: 4, labeling: Labeling::Majority };
        let w = window_stream(&stream(vec![2, 2, 1, 1, 0, 2, 2, 2]), &cfg).unwrap();
        assert_eq!(w.windows.iter().map(|w| w.label).collect::<Vec<_>>(), vec![1, 2]);
    }
}
