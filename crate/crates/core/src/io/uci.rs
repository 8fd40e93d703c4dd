//! Loader for the UCI HAR "Human Activity Recognition Using Smartphones"
//! directory layout.
//!
//! ```text
//! <root>/train/X_train.txt          561 features per line
//! <root>/train/y_train.txt          activity 1..=6 per line
//! <root>/train/subject_train.txt    volunteer id per line
//! <root>/train/Inertial Signals/body_acc_x_train.txt   128 readings per line
//! ...                                (same for test/)
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::read_text;
use crate::dataset::{Dataset, LabelMap};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const UCI_FEATURES: usize = 561;
pub const UCI_WINDOW: usize = 128;

/// Raw channel files in the order they are stacked into `(128, 9)` tensors.
pub const UCI_CHANNELS: [&str; 9] = [
    "body_acc_x",
    "body_acc_y",
    "body_acc_z",
    "body_gyro_x",
    "body_gyro_y",
    "body_gyro_z",
    "total_acc_x",
    "total_acc_y",
    "total_acc_z",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// 561-length engineered feature vectors.
    #[default]
    FeatureVectors,
    /// `(128, 9)` raw inertial windows.
    RawTensors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

fn split_file(root: &Path, split: Split, stem: &str) -> PathBuf {
    root.join(split.as_str()).join(format!("{stem}_{}.txt", split.as_str()))
}

fn channel_file(root: &Path, split: Split, channel: &str) -> PathBuf {
    root.join(split.as_str()).join("Inertial Signals").join(format!("{channel}_{}.txt", split.as_str()))
}

/// Rows of whitespace-separated reals, each exactly `columns` long.
pub fn parse_matrix(path: &Path, text: &str, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (line_no, line) in data_lines(text) {
        let row = line
            .split_ascii_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    reason: format!("`{tok}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != columns {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                reason: format!("expected {columns} values, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Non-blank lines with 1-based line numbers. Blank lines are allowed only at
/// the end of the file.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let lines: Vec<&str> = text.lines().collect();
    let end = lines.iter().rposition(|l| !l.trim().is_empty()).map_or(0, |p| p + 1);
    lines.into_iter().take(end).enumerate().map(|(i, l)| (i + 1, l))
}

fn parse_column<T: std::str::FromStr>(path: &Path, text: &str, what: &str) -> Result<Vec<T>> {
    data_lines(text)
        .map(|(line, l)| {
            l.trim().parse::<T>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                reason: format!("`{}` is not a valid {what}", l.trim()),
            })
        })
        .collect()
}

fn check_rows(path: &Path, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: got.min(expected) + 1,
            reason: format!("has {got} rows but the label file has {expected}"),
        });
    }
    Ok(())
}

/// Load one split. Labels `1..=6` become class ids `0..=5` in the standard
/// activity order (see [`LabelMap::har6`]).
pub fn load_uci_har(root: &Path, split: Split, representation: Representation) -> Result<Dataset> {
    let y_path = split_file(root, split, "y");
    let raw_labels: Vec<usize> = parse_column(&y_path, &read_text(&y_path)?, "activity id")?;
    let classes = LabelMap::har6();
    let mut labels = Vec::with_capacity(raw_labels.len());
    for (i, &l) in raw_labels.iter().enumerate() {
        if !(1..=classes.len()).contains(&l) {
            return Err(Error::Parse {
                path: y_path,
                line: i + 1,
                reason: format!("activity id {l} is outside 1..=6"),
            });
        }
        labels.push(l - 1);
    }
    let n = labels.len();
    let s_path = split_file(root, split, "subject");
    let subjects: Vec<u32> = parse_column(&s_path, &read_text(&s_path)?, "subject id")?;
    check_rows(&s_path, n, subjects.len())?;

    let samples = match representation {
        Representation::FeatureVectors => {
            let x_path = split_file(root, split, "X");
            let rows = parse_matrix(&x_path, &read_text(&x_path)?, UCI_FEATURES)?;
            check_rows(&x_path, n, rows.len())?;
            rows.into_iter().map(Tensor::vector).collect::<Result<Vec<_>>>()?
        }
        Representation::RawTensors => {
            let mut channels = Vec::with_capacity(UCI_CHANNELS.len());
            for ch in UCI_CHANNELS {
                let path = channel_file(root, split, ch);
                let rows = parse_matrix(&path, &read_text(&path)?, UCI_WINDOW)?;
                check_rows(&path, n, rows.len())?;
                channels.push(rows);
            }
            (0..n)
                .map(|i| {
                    let mut data = Vec::with_capacity(UCI_WINDOW * UCI_CHANNELS.len());
                    for t in 0..UCI_WINDOW {
                        data.extend(channels.iter().map(|c| c[i][t]));
                    }
                    Tensor::new(vec![UCI_WINDOW, UCI_CHANNELS.len()], data)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    log::info!("loaded {} {} samples from {}", n, split.as_str(), root.display());
    Dataset::new(samples, labels, subjects, classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_padded_lines() {
        let text = "  1.0e+00  -2.5 3\n4 5   6\n\n";
        let rows = parse_matrix(Path::new("X.txt"), text, 3).unwrap();
        assert_eq!(rows, vec![vec![1.0, -2.5, 3.0], vec![4.0, 5.0, 6.0]]);
    }

    #[test]
    fn ragged_and_bad_tokens_report_line() {
        match parse_matrix(Path::new("X.txt"), "1 2 3\n1 2\n", 3) {
            Err(Error::Parse { line, reason, .. }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("found 2"));
            }
            other => panic!("{other:?}"),
        }
        match parse_matrix(Path::new("X.txt"), "1 2 3\n\n1 x 3\n", 3) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn a_full_feature_line_is_a_561_vector() {
        let line: Vec<String> = (0..561).map(|i| format!("{:.7e}", i as f64 / 561.0 - 0.5)).collect();
        let rows = parse_matrix(Path::new("X.txt"), &format!(" {}\n", line.join(" ")), UCI_FEATURES).unwrap();
        assert_eq!(rows[0].len(), 561);
        assert_eq!(rows[0][0], -0.5);
    }
}
