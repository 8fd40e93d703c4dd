//! Custom accelerometer streams: one CSV row per timestep with header
//! `timestamp,ax,ay,az[,gx,gy,gz],label[,subject][,age_group]`.
//!
//! Rows are grouped into one stream per subject, in order of first
//! appearance. Each stream is filtered, then cut into `(T, C)` windows with
//! `C = 3` (accelerometer only) or `C = 6` (with gyroscope).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::dataset::{Dataset, LabelMap};
use crate::error::{Error, Result};
use crate::signal::{window_stream, windows_to_dataset, Channel, FilterConfig, SampleStream, WindowConfig};
use crate::signal::{ACCEL_CHANNELS, GYRO_CHANNELS};

pub const CSV_COLUMNS: &str = "timestamp,ax,ay,az[,gx,gy,gz],label[,subject][,age_group]";

#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub window: WindowConfig,
    pub filter: FilterConfig,
    pub classes: LabelMap,
    /// Subject id for files without a `subject` column.
    pub default_subject: u32,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            window: WindowConfig::default(),
            filter: FilterConfig::default(),
            classes: LabelMap::har6(),
            default_subject: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomCsv {
    pub dataset: Dataset,
    pub rows: usize,
    /// Windows discarded by strict labeling.
    pub dropped_windows: usize,
    /// Age group per subject, when the column is present.
    pub age_groups: BTreeMap<u32, String>,
}

struct Layout {
    timestamp: usize,
    channels: Vec<(String, usize)>,
    label: usize,
    subject: Option<usize>,
    age_group: Option<usize>,
}

fn layout(path: &Path, header: &csv::StringRecord) -> Result<Layout> {
    let mismatch = || Error::Header { path: path.to_path_buf(), expected: CSV_COLUMNS.to_string() };
    let names: Vec<String> = header.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    let find = |n: &str| names.iter().position(|h| h == n);
    let allowed = ["timestamp", "label", "subject", "age_group"].iter().chain(&ACCEL_CHANNELS).chain(&GYRO_CHANNELS);
    let allowed: Vec<&str> = allowed.copied().collect();
    if names.iter().any(|n| !allowed.contains(&n.as_str())) {
        return Err(mismatch());
    }
    let mut sorted = names.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != names.len() {
        return Err(mismatch());
    }
    let gyro: Vec<Option<usize>> = GYRO_CHANNELS.iter().map(|g| find(g)).collect();
    if gyro.iter().any(Option::is_some) && gyro.iter().any(Option::is_none) {
        return Err(mismatch());
    }
    let mut channels = Vec::new();
    for name in ACCEL_CHANNELS.iter().chain(if gyro[0].is_some() { &GYRO_CHANNELS[..] } else { &[] }) {
        channels.push((name.to_string(), find(name).ok_or_else(mismatch)?));
    }
    Ok(Layout {
        timestamp: find("timestamp").ok_or_else(mismatch)?,
        channels,
        label: find("label").ok_or_else(mismatch)?,
        subject: find("subject"),
        age_group: find("age_group"),
    })
}

#[derive(Default)]
struct Rows {
    timestamps: Vec<f64>,
    values: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

/// Load one file.
pub fn load_custom_csv(path: &Path, opts: &CsvOptions) -> Result<CustomCsv> {
    load_custom_csv_files(&[path.to_path_buf()], opts)
}

/// Load several files into one dataset. A subject may not span files.
pub fn load_custom_csv_files(paths: &[PathBuf], opts: &CsvOptions) -> Result<CustomCsv> {
    let mut streams: Vec<(u32, Rows)> = Vec::new();
    let mut age_groups = BTreeMap::new();
    let mut total_rows = 0;
    let mut n_channels = None;
    for path in paths {
        let mut reader =
            csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_error(path, 1, e))?;
        let header = reader.headers().map_err(|e| csv_error(path, 1, e))?.clone();
        let layout = layout(path, &header)?;
        match n_channels {
            None => n_channels = Some(layout.channels.len()),
            Some(c) if c != layout.channels.len() => {
                return Err(Error::Parse {
                    path: path.clone(),
                    line: 1,
                    reason: format!("has {} channels but earlier files have {c}", layout.channels.len()),
                })
            }
            Some(_) => {}
        }
        let first_stream = streams.len();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| csv_error(path, line, e))?;
            let bad = |reason: String| Error::Parse { path: path.clone(), line, reason };
            let field = |idx: usize| record.get(idx).unwrap_or("");
            let number = |idx: usize| {
                field(idx)
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("column `{}` has non-numeric value `{}`", &header[idx], field(idx))))
            };
            let subject = match layout.subject {
                Some(idx) => field(idx).parse::<u32>().map_err(|_| bad(format!("invalid subject `{}`", field(idx))))?,
                None => opts.default_subject,
            };
            let label = opts.classes.parse(field(layout.label)).map_err(|e| bad(e.to_string()))?;
            if let Some(idx) = layout.age_group {
                let group = field(idx).to_string();
                if let Some(prev) = age_groups.insert(subject, group.clone()) {
                    if prev != group {
                        return Err(bad(format!("subject {subject} has age groups `{prev}` and `{group}`")));
                    }
                }
            }
            let timestamp = number(layout.timestamp)?;
            let values = layout.channels.iter().map(|(_, idx)| number(*idx)).collect::<Result<Vec<_>>>()?;
            let pos = match streams.iter().position(|(s, _)| *s == subject) {
                Some(p) if p < first_stream => {
                    return Err(bad(format!("subject {subject} already appeared in an earlier file")));
                }
                Some(p) => p,
                None => {
                    streams.push((subject, Rows::default()));
                    streams.len() - 1
                }
            };
            let rows = &mut streams[pos].1;
            if rows.timestamps.last().is_some_and(|&t| timestamp < t) {
                return Err(bad(format!("timestamp {timestamp} goes backwards for subject {subject}")));
            }
            rows.timestamps.push(timestamp);
            rows.values.push(values);
            rows.labels.push(label);
            total_rows += 1;
        }
    }

    let names: Vec<&str> = match n_channels {
        Some(6) => ACCEL_CHANNELS.iter().chain(&GYRO_CHANNELS).copied().collect(),
        _ => ACCEL_CHANNELS.to_vec(),
    };
    let mut windows = Vec::new();
    let mut dropped = 0;
    for (subject, rows) in streams {
        let channels = names
            .iter()
            .enumerate()
            .map(|(c, name)| Channel { name: name.to_string(), values: rows.values.iter().map(|v| v[c]).collect() })
            .collect();
        let stream =
            SampleStream::new(rows.timestamps, channels, Some(rows.labels), subject)?.filtered(&opts.filter)?;
        let w = window_stream(&stream, &opts.window)?;
        dropped += w.dropped;
        windows.extend(w.windows);
    }
    if dropped > 0 {
        log::info!("strict labeling dropped {dropped} windows that straddle a label change");
    }
    Ok(CustomCsv {
        dataset: windows_to_dataset(windows, opts.classes.clone())?,
        rows: total_rows,
        dropped_windows: dropped,
        age_groups,
    })
}

fn csv_error(path: &Path, line: usize, e: csv::Error) -> Error {
    let line = e.position().map_or(line, |p| p.line() as usize);
    let reason = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        _ => Error::Parse { path: path.to_path_buf(), line, reason },
    }
}
