//! Synthetic sensor data, clearly not real recordings.
//!
//! Two generators share one simple motion model: static postures are gravity
//! at a subject-specific tilt plus sensor noise; locomotion adds a periodic
//! gait component whose cadence and amplitude depend on activity and age.
//!
//! * [`write_custom_csv_set`] writes one CSV per participant in the custom
//!   stream format, with 15 participants spread over four age groups.
//! * [`write_uci_layout`] writes a small dataset in the UCI HAR directory
//!   layout (feature files and nine raw channel files per split).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{write_text, UCI_CHANNELS, UCI_FEATURES, UCI_WINDOW};
use crate::rng::{substream, Rng};

const GRAVITY: f64 = 9.80665;

/// Participant counts per age bracket.
pub const AGE_GROUPS: [(&str, usize); 4] = [("18-25", 3), ("26-40", 4), ("41-55", 5), ("56-70", 3)];

/// Activities recorded in the custom streams.
pub const CUSTOM_ACTIVITIES: [&str; 4] = ["walking", "sitting", "standing", "laying"];

/// Activity id in [`crate::dataset::HAR6_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Motion {
    Walking,
    Upstairs,
    Downstairs,
    Sitting,
    Standing,
    Laying,
}

impl Motion {
    const ALL: [Motion; 6] =
        [Motion::Walking, Motion::Upstairs, Motion::Downstairs, Motion::Sitting, Motion::Standing, Motion::Laying];

    fn from_name(name: &str) -> Motion {
        match name {
            "walking" => Motion::Walking,
            "walking_upstairs" => Motion::Upstairs,
            "walking_downstairs" => Motion::Downstairs,
            "sitting" => Motion::Sitting,
            "standing" => Motion::Standing,
            _ => Motion::Laying,
        }
    }

    /// Gravity direction in the sensor frame before subject tilt.
    fn posture(self) -> [f64; 3] {
        match self {
            Motion::Sitting => [0.55, 0.0, 0.835],
            Motion::Laying => [0.0, 0.95, 0.31],
            _ => [0.98, 0.0, 0.2],
        }
    }

    /// `(cadence Hz, amplitude m/s², vertical drift)` of the gait component.
    fn gait(self) -> Option<(f64, f64, f64)> {
        match self {
            Motion::Walking => Some((1.9, 2.4, 0.0)),
            Motion::Upstairs => Some((1.6, 2.0, 0.6)),
            Motion::Downstairs => Some((2.2, 3.4, -0.6)),
            _ => None,
        }
    }
}

/// Per-participant physical variation.
#[derive(Debug, Clone, Copy)]
struct Subject {
    tilt: [f64; 3],
    cadence: f64,
    amplitude: f64,
    noise: f64,
}

impl Subject {
    fn draw(rng: &mut Rng, age_factor: f64) -> Subject {
        Subject {
            tilt: [rng.random_range(-0.08..0.08), rng.random_range(-0.08..0.08), rng.random_range(-0.08..0.08)],
            cadence: rng.random_range(0.9..1.1) * (1.0 - 0.12 * age_factor),
            amplitude: rng.random_range(0.85..1.15) * (1.0 - 0.25 * age_factor),
            noise: rng.random_range(0.15..0.3),
        }
    }
}

/// `n` samples at `rate` Hz of `(total_acc xyz, body_acc xyz, gyro xyz)`.
fn simulate(motion: Motion, subject: &Subject, n: usize, rate: f64, phase: f64, rng: &mut Rng) -> Vec<[f64; 9]> {
    let noise = Normal::new(0.0, subject.noise).expect("positive noise");
    let gyro_noise = Normal::new(0.0, 0.03).expect("positive noise");
    let mut g = motion.posture();
    for (a, t) in g.iter_mut().zip(subject.tilt) {
        *a += t;
    }
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let g: Vec<f64> = g.iter().map(|v| GRAVITY * v / norm).collect();
    (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            let mut body = [0.0; 3];
            let mut gyro = [0.0; 3];
            if let Some((cadence, amp, drift)) = motion.gait() {
                let w = 2.0 * PI * cadence * subject.cadence;
                let a = amp * subject.amplitude;
                body[0] = a * (w * t + phase).sin() + 0.35 * a * (2.0 * w * t + phase).sin() + drift;
                body[1] = 0.4 * a * (0.5 * w * t + phase).sin();
                body[2] = 0.6 * a * (w * t + phase + PI / 3.0).cos() - 0.5 * drift;
                gyro = [0.5 * (w * t + phase).cos(), 0.3 * (0.5 * w * t).sin(), 0.8 * (w * t + phase).sin()];
            }
            let mut out = [0.0; 9];
            for k in 0..3 {
                let b = body[k] + noise.sample(rng);
                out[k] = g[k] + b;
                out[3 + k] = b;
                out[6 + k] = gyro[k] + gyro_noise.sample(rng);
            }
            out
        })
        .collect()
}

fn default_subjects() -> usize {
    15
}
fn default_rate() -> f64 {
    50.0
}
fn default_segments() -> usize {
    3
}
fn default_min_segment() -> usize {
    300
}
fn default_max_segment() -> usize {
    700
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthCsvConfig {
    #[serde(default = "default_subjects")]
    pub subjects: usize,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    /// Segments recorded per activity and participant.
    #[serde(default = "default_segments")]
    pub segments_per_activity: usize,
    #[serde(default = "default_min_segment")]
    pub min_segment: usize,
    #[serde(default = "default_max_segment")]
    pub max_segment: usize,
    /// Also write `gx,gy,gz` columns.
    #[serde(default)]
    pub gyro: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SynthCsvConfig {
    fn default() -> Self {
        SynthCsvConfig {
            subjects: default_subjects(),
            rate_hz: default_rate(),
            segments_per_activity: default_segments(),
            min_segment: default_min_segment(),
            max_segment: default_max_segment(),
            gyro: false,
            seed: 0,
        }
    }
}

/// Age bracket of the `i`-th participant (0-based): the bracket sizes of
/// [`AGE_GROUPS`] scaled to `n` participants.
pub fn age_group_of(i: usize, n: usize) -> &'static str {
    let total: usize = AGE_GROUPS.iter().map(|(_, c)| c).sum();
    let mut bound = 0.0;
    for (name, count) in AGE_GROUPS {
        bound += count as f64 * n as f64 / total as f64;
        if (i as f64) < bound - 1e-9 {
            return name;
        }
    }
    AGE_GROUPS[AGE_GROUPS.len() - 1].0
}

/// Write `subject_XX.csv` files under `dir` and return their paths.
pub fn write_custom_csv_set(dir: &Path, cfg: &SynthCsvConfig) -> Result<Vec<PathBuf>> {
    if cfg.subjects == 0 || cfg.min_segment == 0 || cfg.max_segment < cfg.min_segment || !(cfg.rate_hz > 0.0) {
        return Err(Error::param("synth", "need subjects ≥ 1, 0 < min_segment ≤ max_segment and a positive rate"));
    }
    let mut paths = Vec::new();
    for s in 0..cfg.subjects {
        let id = s as u32 + 1;
        let group = age_group_of(s, cfg.subjects);
        let age_factor = AGE_GROUPS.iter().position(|(g, _)| *g == group).unwrap_or(0) as f64 / 3.0;
        let mut rng = substream(cfg.seed, &format!("synth-subject-{id}"));
        let subject = Subject::draw(&mut rng, age_factor);
        let mut plan: Vec<&str> = (0..cfg.segments_per_activity).flat_map(|_| CUSTOM_ACTIVITIES).collect();
        rand::seq::SliceRandom::shuffle(plan.as_mut_slice(), &mut rng);
        let mut out = String::from("timestamp,ax,ay,az");
        out.push_str(if cfg.gyro { ",gx,gy,gz,label,subject,age_group\n" } else { ",label,subject,age_group\n" });
        let mut step = 0usize;
        for activity in plan {
            let n = rng.random_range(cfg.min_segment..=cfg.max_segment);
            let phase = rng.random_range(0.0..2.0 * PI);
            for row in simulate(Motion::from_name(activity), &subject, n, cfg.rate_hz, phase, &mut rng) {
                let _ = write!(out, "{:.3},{:.5},{:.5},{:.5}", step as f64 / cfg.rate_hz, row[0], row[1], row[2]);
                if cfg.gyro {
                    let _ = write!(out, ",{:.5},{:.5},{:.5}", row[6], row[7], row[8]);
                }
                let _ = writeln!(out, ",{activity},{id},{group}");
                step += 1;
            }
        }
        let path = dir.join(format!("subject_{id:02}.csv"));
        write_text(&path, &out)?;
        paths.push(path);
    }
    Ok(paths)
}

fn default_train_per_class() -> usize {
    40
}
fn default_test_per_class() -> usize {
    15
}
fn default_train_subjects() -> usize {
    6
}
fn default_test_subjects() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthUciConfig {
    #[serde(default = "default_train_per_class")]
    pub train_per_class: usize,
    #[serde(default = "default_test_per_class")]
    pub test_per_class: usize,
    #[serde(default = "default_train_subjects")]
    pub train_subjects: usize,
    #[serde(default = "default_test_subjects")]
    pub test_subjects: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SynthUciConfig {
    fn default() -> Self {
        SynthUciConfig {
            train_per_class: default_train_per_class(),
            test_per_class: default_test_per_class(),
            train_subjects: default_train_subjects(),
            test_subjects: default_test_subjects(),
            seed: 0,
        }
    }
}

/// Summary statistics of one raw window: per channel mean, standard
/// deviation, min, max, energy, mean absolute first difference.
fn window_stats(window: &[[f64; 9]]) -> Vec<f64> {
    let n = window.len() as f64;
    let mut stats = Vec::with_capacity(9 * 6);
    for c in 0..9 {
        let xs: Vec<f64> = window.iter().map(|r| r[c]).collect();
        let mean = xs.iter().sum::<f64>() / n;
        let std = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let energy = xs.iter().map(|x| x * x).sum::<f64>() / n;
        let jerk = xs.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (n - 1.0);
        stats.extend([mean, std, min, max, energy.sqrt(), jerk]);
    }
    stats
}

/// Write `train/` and `test/` in the UCI HAR layout under `root`.
///
/// Raw windows are 128 samples at 50 Hz. The 561 features are a fixed random
/// projection of per-channel summary statistics squashed into `[-1, 1]`,
/// mimicking the normalized range of the real feature files.
pub fn write_uci_layout(root: &Path, cfg: &SynthUciConfig) -> Result<()> {
    if cfg.train_per_class == 0 || cfg.test_per_class == 0 || cfg.train_subjects == 0 || cfg.test_subjects == 0 {
        return Err(Error::param("synth", "every count must be at least 1"));
    }
    let mut proj_rng = substream(cfg.seed, "synth-uci-projection");
    let n_stats = 9 * 6;
    let normal = Normal::new(0.0, 1.0 / (n_stats as f64).sqrt()).expect("positive");
    let projection: Vec<Vec<f64>> =
        (0..UCI_FEATURES).map(|_| (0..n_stats).map(|_| normal.sample(&mut proj_rng)).collect()).collect();
    let scales: Vec<f64> = {
        let mut s = vec![1.0; n_stats];
        for c in 0..9 {
            s[c * 6] = 0.1;
            s[c * 6 + 4] = 0.1;
        }
        s
    };

    let mut first_subject = 1u32;
    for (split, per_class, n_subjects) in
        [("train", cfg.train_per_class, cfg.train_subjects), ("test", cfg.test_per_class, cfg.test_subjects)]
    {
        let mut rng = substream(cfg.seed, &format!("synth-uci-{split}"));
        let subjects: Vec<Subject> = (0..n_subjects).map(|i| Subject::draw(&mut rng, (i % 4) as f64 / 3.0)).collect();
        let mut x = String::new();
        let mut y = String::new();
        let mut subj = String::new();
        let mut channels = vec![String::new(); 9];
        for i in 0..per_class * Motion::ALL.len() {
            let class = i % Motion::ALL.len();
            let s = (i / Motion::ALL.len()) % n_subjects;
            let phase = rng.random_range(0.0..2.0 * PI);
            let window = simulate(Motion::ALL[class], &subjects[s], UCI_WINDOW, 50.0, phase, &mut rng);
            let stats = window_stats(&window);
            let features = projection.iter().map(|row| {
                let z: f64 = row.iter().zip(&stats).zip(&scales).map(|((p, v), k)| p * v * k).sum();
                z.tanh()
            });
            x.push(' ');
            x.push_str(&features.map(|f| format!("{f:.7e}")).collect::<Vec<_>>().join(" "));
            x.push('\n');
            let _ = writeln!(y, "{}", class + 1);
            let _ = writeln!(subj, "{}", first_subject + s as u32);
            for (c, text) in channels.iter_mut().enumerate() {
                // UCI_CHANNELS order is body_acc, body_gyro, total_acc;
                // accelerations are stored in units of g.
                let col = match c {
                    0..=2 => 3 + c,
                    3..=5 => 6 + (c - 3),
                    _ => c - 6,
                };
                let scale = if !(3..6).contains(&c) { 1.0 / GRAVITY } else { 1.0 };
                text.push(' ');
                text.push_str(&window.iter().map(|r| format!("{:.7e}", r[col] * scale)).collect::<Vec<_>>().join(" "));
                text.push('\n');
            }
        }
        let dir = root.join(split);
        write_text(&dir.join(format!("X_{split}.txt")), &x)?;
        write_text(&dir.join(format!("y_{split}.txt")), &y)?;
        write_text(&dir.join(format!("subject_{split}.txt")), &subj)?;
        for (name, text) in UCI_CHANNELS.iter().zip(&channels) {
            write_text(&dir.join("Inertial Signals").join(format!("{name}_{split}.txt")), text)?;
        }
        first_subject += n_subjects as u32;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_participants_follow_the_age_table() {
        let mut counts = std::collections::BTreeMap::new();
        for i in 0..15 {
            *counts.entry(age_group_of(i, 15)).or_insert(0) += 1;
        }
        for (g, c) in AGE_GROUPS {
            assert_eq!(counts[g], c);
        }
    }

    #[test]
    fn csv_set_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = SynthCsvConfig { subjects: 2, segments_per_activity: 1, seed: 5, ..SynthCsvConfig::default() };
        let pa = write_custom_csv_set(a.path(), &cfg).unwrap();
        let pb = write_custom_csv_set(b.path(), &cfg).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }
}
