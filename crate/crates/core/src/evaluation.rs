//! Confusion matrices, accuracy, precision/recall, F1 variants and MCC.
//!
//! Confusion matrices are indexed `[predicted][actual]`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{truth} gold labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("label `{0}` is not in the class list")]
    UnknownLabel(String),
    #[error("report line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    /// `counts[predicted][actual]`
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<usize>>) -> Self {
        assert_eq!(counts.len(), classes.len(), "one row per class");
        assert!(counts.iter().all(|r| r.len() == classes.len()), "square matrix");
        ConfusionMatrix { classes, counts }
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn get(&self, predicted: usize, actual: usize) -> usize {
        self.counts[predicted][actual]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Number of predictions of class `c`.
    pub fn predicted(&self, c: usize) -> usize {
        self.counts[c].iter().sum()
    }

    /// Number of gold labels of class `c`.
    pub fn support(&self, c: usize) -> usize {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn true_positives(&self, c: usize) -> usize {
        self.counts[c][c]
    }

    pub fn false_positives(&self, c: usize) -> usize {
        self.predicted(c) - self.counts[c][c]
    }

    pub fn false_negatives(&self, c: usize) -> usize {
        self.support(c) - self.counts[c][c]
    }

    pub fn true_negatives(&self, c: usize) -> usize {
        self.total() + self.counts[c][c] - self.predicted(c) - self.support(c)
    }
}

pub fn confusion_matrix<S: AsRef<str>, T: AsRef<str>>(
    y_true: &[S],
    y_pred: &[T],
    classes: &[String],
) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    let index = |label: &str| {
        classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| EvalError::UnknownLabel(label.to_string()))
    };
    let k = classes.len();
    let mut counts = vec![vec![0; k]; k];
    for (t, p) in y_true.iter().zip(y_pred) {
        counts[index(p.as_ref())?][index(t.as_ref())?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

/// Trace over total; 0 for an empty matrix.
pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.trace(), cm.total())
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    /// Set when either ratio was 0/0 and reported as 0.
    pub degenerate: bool,
}

pub fn precision_recall(cm: &ConfusionMatrix, class: usize) -> PrecisionRecall {
    let tp = cm.true_positives(class);
    let predicted = cm.predicted(class);
    let actual = cm.support(class);
    PrecisionRecall {
        precision: ratio(tp, predicted),
        recall: ratio(tp, actual),
        degenerate: predicted == 0 || actual == 0,
    }
}

/// Harmonic mean, 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct F1Scores {
    pub per_class: Vec<f64>,
    pub macro_avg: f64,
    pub micro: f64,
    pub weighted: f64,
}

pub fn f1_scores(cm: &ConfusionMatrix) -> F1Scores {
    let k = cm.classes().len();
    let per_class: Vec<f64> = (0..k)
        .map(|c| {
            let pr = precision_recall(cm, c);
            f1(pr.precision, pr.recall)
        })
        .collect();
    let macro_avg = if k == 0 {
        0.0
    } else {
        per_class.iter().sum::<f64>() / k as f64
    };
    // pooled: TP = trace, FP = FN = total - trace
    let tp = cm.trace();
    let wrong = cm.total() - tp;
    let micro = ratio(2 * tp, 2 * tp + 2 * wrong);
    let total = cm.total();
    let weighted = if total == 0 {
        0.0
    } else {
        per_class
            .iter()
            .enumerate()
            .map(|(c, f)| f * cm.support(c) as f64)
            .sum::<f64>()
            / total as f64
    };
    F1Scores {
        per_class,
        macro_avg,
        micro,
        weighted,
    }
}

/// Matthews correlation coefficient in its multiclass form
/// `(c s - sum p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2))`,
/// which reduces to `(TP TN - FP FN) / sqrt(...)` for two classes.
/// A zero denominator yields 0.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let k = cm.classes().len();
    let s = cm.total() as i128;
    let c = cm.trace() as i128;
    let p: Vec<i128> = (0..k).map(|i| cm.predicted(i) as i128).collect();
    let t: Vec<i128> = (0..k).map(|i| cm.support(i) as i128).collect();
    let numerator = c * s - p.iter().zip(&t).map(|(a, b)| a * b).sum::<i128>();
    let left = s * s - p.iter().map(|a| a * a).sum::<i128>();
    let right = s * s - t.iter().map(|b| b * b).sum::<i128>();
    if left == 0 || right == 0 {
        return 0.0;
    }
    let denominator = if left == right {
        left as f64
    } else {
        (left as f64 * right as f64).sqrt()
    };
    let value = numerator as f64 / denominator;
    value.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub samples: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub f1_macro: f64,
    pub f1_micro: f64,
    pub f1_weighted: f64,
    pub mcc: f64,
    pub confusion: ConfusionMatrix,
}

pub fn build_report<S: AsRef<str>, T: AsRef<str>>(
    y_true: &[S],
    y_pred: &[T],
    classes: &[String],
) -> Result<MetricsReport, EvalError> {
    let cm = confusion_matrix(y_true, y_pred, classes)?;
    Ok(MetricsReport::from_confusion(cm))
}

impl MetricsReport {
    pub fn from_confusion(cm: ConfusionMatrix) -> Self {
        let f = f1_scores(&cm);
        let per_class = cm
            .classes()
            .iter()
            .enumerate()
            .map(|(c, label)| {
                let pr = precision_recall(&cm, c);
                ClassMetrics {
                    label: label.clone(),
                    precision: pr.precision,
                    recall: pr.recall,
                    f1: f.per_class[c],
                    support: cm.support(c),
                    degenerate: pr.degenerate,
                }
            })
            .collect();
        let acc = accuracy(&cm);
        debug_assert_eq!(acc, f.micro);
        MetricsReport {
            samples: cm.total(),
            accuracy: acc,
            per_class,
            f1_macro: f.macro_avg,
            f1_micro: f.micro,
            f1_weighted: f.weighted,
            mcc: mcc(&cm),
            confusion: cm,
        }
    }

    /// Key-value text: accuracy, per-class blocks, averaged F1, MCC, then the
    /// labelled confusion grid. Rates carry six decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("samples", self.samples.to_string());
        kv("accuracy", format!("{:.6}", self.accuracy));
        for c in &self.per_class {
            kv(&format!("class.{}.precision", c.label), format!("{:.6}", c.precision));
            kv(&format!("class.{}.recall", c.label), format!("{:.6}", c.recall));
            kv(&format!("class.{}.f1", c.label), format!("{:.6}", c.f1));
            kv(&format!("class.{}.support", c.label), c.support.to_string());
            kv(&format!("class.{}.degenerate", c.label), c.degenerate.to_string());
        }
        kv("f1_macro", format!("{:.6}", self.f1_macro));
        kv("f1_micro", format!("{:.6}", self.f1_micro));
        kv("f1_weighted", format!("{:.6}", self.f1_weighted));
        kv("mcc", format!("{:.6}", self.mcc));
        kv("confusion.rows", "predicted".into());
        kv("confusion.columns", "actual".into());
        kv("confusion.labels", self.confusion.classes().join(","));
        for (label, row) in self.confusion.classes().iter().zip(self.confusion.counts()) {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            kv(&format!("confusion.{label}"), cells.join(","));
        }
        out
    }

    /// Reads back [`MetricsReport::to_text`] output; rates keep the printed precision.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| EvalError::Parse {
                line: i + 1,
                reason: "expected `key = value`".into(),
            })?;
            map.insert(k.to_string(), (i + 1, v.to_string()));
        }
        let raw = |k: &str| -> Result<&(usize, String), EvalError> {
            map.get(k).ok_or_else(|| EvalError::Parse {
                line: 0,
                reason: format!("missing key `{k}`"),
            })
        };
        fn value<T: std::str::FromStr>(entry: &(usize, String)) -> Result<T, EvalError> {
            entry.1.parse().map_err(|_| EvalError::Parse {
                line: entry.0,
                reason: format!("bad value `{}`", entry.1),
            })
        }

        let labels: Vec<String> = raw("confusion.labels")?
            .1
            .split(',')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        let mut counts = Vec::new();
        for l in &labels {
            let entry = raw(&format!("confusion.{l}"))?;
            let row = entry
                .1
                .split(',')
                .map(|c| value::<usize>(&(entry.0, c.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != labels.len() {
                return Err(EvalError::Parse {
                    line: entry.0,
                    reason: "confusion row has the wrong width".into(),
                });
            }
            counts.push(row);
        }
        let per_class = labels
            .iter()
            .map(|l| {
                Ok(ClassMetrics {
                    label: l.clone(),
                    precision: value(raw(&format!("class.{l}.precision"))?)?,
                    recall: value(raw(&format!("class.{l}.recall"))?)?,
                    f1: value(raw(&format!("class.{l}.f1"))?)?,
                    support: value(raw(&format!("class.{l}.support"))?)?,
                    degenerate: value(raw(&format!("class.{l}.degenerate"))?)?,
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        Ok(MetricsReport {
            samples: value(raw("samples")?)?,
            accuracy: value(raw("accuracy")?)?,
            per_class,
            f1_macro: value(raw("f1_macro")?)?,
            f1_micro: value(raw("f1_micro")?)?,
            f1_weighted: value(raw("f1_weighted")?)?,
            mcc: value(raw("mcc")?)?,
            confusion: ConfusionMatrix::from_counts(labels, counts),
        })
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Vec<String> {
        vec!["A".into(), "B".into()]
    }

    #[test]
    fn confusion_examples() {
        let cm = confusion_matrix(&["A", "A", "B"], &["A", "B", "B"], &ab()).unwrap();
        assert_eq!(cm.counts(), &[vec![1, 0], vec![1, 1]]);
        assert!((accuracy(&cm) - 2.0 / 3.0).abs() < 1e-15);
        let f = f1_scores(&cm);
        assert!((f.macro_avg - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            confusion_matrix(&["A"], &["A", "B"], &ab()),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            confusion_matrix(&["A"], &["C"], &ab()),
            Err(EvalError::UnknownLabel(_))
        ));
        let perfect = confusion_matrix(&["A", "B"], &["A", "B"], &ab()).unwrap();
        assert_eq!(perfect.counts(), &[vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn precision_recall_examples() {
        // predicted-A row: TP 5, FP 2; actual-A column: FN 1
        let cm = ConfusionMatrix::from_counts(ab(), vec![vec![5, 2], vec![1, 4]]);
        let pr = precision_recall(&cm, 0);
        assert_eq!((pr.precision, pr.recall), (5.0 / 7.0, 5.0 / 6.0));
        assert!(!pr.degenerate);

        let classes = vec!["A".into(), "B".into(), "C".into()];
        let cm = confusion_matrix(&["A", "B"], &["A", "B"], &classes).unwrap();
        let pr = precision_recall(&cm, 2);
        assert_eq!((pr.precision, pr.recall, pr.degenerate), (0.0, 0.0, true));
        let pr = precision_recall(&cm, 0);
        assert_eq!((pr.precision, pr.recall), (1.0, 1.0));
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1(1.0, 0.0), 0.0);
        assert!((f1(0.8, 0.8) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn mcc_examples() {
        let cm = confusion_matrix(&["A", "B", "B"], &["A", "B", "B"], &ab()).unwrap();
        assert_eq!(mcc(&cm), 1.0);
        let cm = confusion_matrix(&["A", "B", "B"], &["B", "B", "B"], &ab()).unwrap();
        assert_eq!(mcc(&cm), 0.0);
        // TP 6, FN 1, FP 2, TN 3
        let cm = ConfusionMatrix::from_counts(ab(), vec![vec![6, 2], vec![1, 3]]);
        let expected = (6.0 * 3.0 - 2.0 * 1.0) / (8.0f64 * 7.0 * 5.0 * 4.0).sqrt();
        assert!((mcc(&cm) - expected).abs() < 1e-15);
    }

    #[test]
    fn report_examples_and_text_round_trip() {
        let r = build_report(&["A", "B"], &["A", "B"], &ab()).unwrap();
        assert_eq!(
            (r.accuracy, r.f1_macro, r.f1_micro, r.f1_weighted, r.mcc),
            (1.0, 1.0, 1.0, 1.0, 1.0)
        );
        let single = build_report(&["A", "A"], &["A", "A"], &ab()).unwrap();
        assert_eq!((single.accuracy, single.mcc), (1.0, 0.0));

        let r = build_report(&["A", "A", "B", "B"], &["A", "B", "B", "B"], &ab()).unwrap();
        let text = r.to_text();
        for key in ["accuracy", "class.A.precision", "class.B.recall", "f1_macro", "mcc"] {
            assert!(text.contains(&format!("{key} = ")), "{key}");
        }
        let back = MetricsReport::parse(&text).unwrap();
        assert_eq!(back.confusion, r.confusion);
        assert_eq!(back.to_text(), text);
    }
}
