use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::LabelMap;
use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(y_true: &[usize], y_pred: &[usize], classes: &LabelMap) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::DimensionMismatch { expected: y_true.len(), got: y_pred.len() });
        }
        let n = classes.len();
        let mut counts = vec![vec![0usize; n]; n];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= n || p >= n {
                return Err(Error::UnknownLabel(t.max(p).to_string()));
            }
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix { classes: classes.names().to_vec(), counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// `true\predicted` header row, then one row per true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in &self.classes {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (name, row) in self.classes.iter().zip(&self.counts) {
            out.push_str(name);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Nothing was predicted as this class, so precision was set to 0.
    #[serde(default)]
    pub precision_undefined: bool,
    /// The class has no true samples, so recall was set to 0.
    #[serde(default)]
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub n_samples: usize,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub confusion: ConfusionMatrix,
    #[serde(default)]
    pub warnings: Vec<String>,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn compute_report(y_true: &[usize], y_pred: &[usize], classes: &LabelMap) -> Result<EvalReport> {
    let confusion = ConfusionMatrix::new(y_true, y_pred, classes)?;
    let n = classes.len();
    let total = confusion.total();
    let mut per_class = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    for c in 0..n {
        let tp = confusion.counts[c][c];
        let support: usize = confusion.counts[c].iter().sum();
        let predicted: usize = (0..n).map(|r| confusion.counts[r][c]).sum();
        let (precision, precision_undefined) = ratio(tp, predicted);
        let (recall, recall_undefined) = ratio(tp, support);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        let name = classes.class_name(c);
        if precision_undefined && support > 0 {
            warnings.push(format!("precision of '{name}' is undefined (no predictions); reported as 0"));
        }
        per_class.push(ClassMetrics {
            class: name,
            precision,
            recall,
            f1,
            support,
            precision_undefined,
            recall_undefined,
        });
    }
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / n.max(1) as f64;
    let macro_avg = Averages { precision: mean(|m| m.precision), recall: mean(|m| m.recall), f1: mean(|m| m.f1) };
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        if total == 0 {
            0.0
        } else {
            per_class.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64
        }
    };
    let weighted_avg =
        Averages { precision: weighted(|m| m.precision), recall: weighted(|m| m.recall), f1: weighted(|m| m.f1) };
    let accuracy = if total == 0 { 0.0 } else { confusion.correct() as f64 / total as f64 };
    Ok(EvalReport { accuracy, n_samples: total, per_class, macro_avg, weighted_avg, confusion, warnings })
}

impl EvalReport {
    /// Plain-text classification table: one row per class, then accuracy and
    /// the two averages.
    pub fn to_text(&self) -> String {
        let width = self.per_class.iter().map(|m| m.class.len()).max().unwrap_or(0).max(12);
        let mut out = String::new();
        let _ =
            writeln!(out, "{:>width$}  {:>9}  {:>9}  {:>9}  {:>7}", "", "precision", "recall", "f1-score", "support");
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "{:>width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
                m.class, m.precision, m.recall, m.f1, m.support
            );
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "{:>width$}  {:>9}  {:>9}  {:>9.4}  {:>7}",
            "accuracy", "", "", self.accuracy, self.n_samples
        );
        for (name, a) in [("macro avg", &self.macro_avg), ("weighted avg", &self.weighted_avg)] {
            let _ = writeln!(
                out,
                "{:>width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
                name, a.precision, a.recall, a.f1, self.n_samples
            );
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> LabelMap {
        LabelMap::new(["a", "b"]).unwrap()
    }

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 1, 0, 1];
        let r = compute_report(&y, &y, &two()).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion.counts, vec![vec![2, 0], vec![0, 3]]);
        assert!(r.per_class.iter().all(|m| m.precision == 1.0 && m.recall == 1.0 && m.f1 == 1.0));
    }

    #[test]
    fn two_class_arithmetic() {
        // [[5,0],[1,4]]
        let y_true = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let y_pred = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1];
        let r = compute_report(&y_true, &y_pred, &two()).unwrap();
        assert_eq!(r.confusion.counts, vec![vec![5, 0], vec![1, 4]]);
        assert_eq!(r.per_class[0].precision, 5.0 / 6.0);
        assert_eq!(r.per_class[0].recall, 1.0);
        assert_eq!(r.per_class[1].precision, 1.0);
        assert_eq!(r.per_class[1].recall, 0.8);
        assert!((r.weighted_avg.recall - r.accuracy).abs() < 1e-12);
    }

    #[test]
    fn zero_denominator_is_flagged() {
        let r = compute_report(&[0, 1], &[0, 0], &two()).unwrap();
        assert!(r.per_class[1].precision_undefined);
        assert_eq!(r.per_class[1].precision, 0.0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn rejects_mismatch_and_unknown_label() {
        assert!(compute_report(&[0], &[0, 1], &two()).is_err());
        assert!(matches!(compute_report(&[0, 2], &[0, 1], &two()), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn csv_layout() {
        let r = compute_report(&[0, 1, 1], &[0, 0, 1], &two()).unwrap();
        assert_eq!(r.confusion.to_csv(), "true\\predicted,a,b\na,1,0\nb,1,1\n");
        assert!(r.to_text().contains("weighted avg"));
    }
}
