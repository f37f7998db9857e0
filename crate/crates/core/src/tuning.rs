//! Exhaustive grid search scored by k-fold cross-validation.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{build_report, MetricsReport};
use crate::features::{FeatureConfig, Featurizer, SparseVector};
use crate::models::{
    encode_labels, Classifier, Hyperparameters, ModelError, ModelKind, ParamValue, Predictor,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum TuningError {
    #[error("{samples} samples cannot fill {k} folds")]
    TooFewSamples { samples: usize, k: usize },
    #[error("cross-validation needs at least 2 folds, got {0}")]
    InvalidFolds(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("unknown metric `{0}` (accuracy, f1_macro, mcc)")]
    UnknownMetric(String),
}

/// Selection metric for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    #[default]
    F1Macro,
    Mcc,
}

impl Metric {
    pub fn score(self, report: &MetricsReport) -> f64 {
        match self {
            Metric::Accuracy => report.accuracy,
            Metric::F1Macro => report.f1_macro,
            Metric::Mcc => report.mcc,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::F1Macro => "f1_macro",
            Metric::Mcc => "mcc",
        }
    }
}

impl FromStr for Metric {
    type Err = TuningError;

    fn from_str(s: &str) -> Result<Self, TuningError> {
        match s {
            "accuracy" => Ok(Metric::Accuracy),
            "f1_macro" | "f1-macro" | "macro_f1" => Ok(Metric::F1Macro),
            "mcc" => Ok(Metric::Mcc),
            other => Err(TuningError::UnknownMetric(other.to_string())),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Splits `labels.len()` items into `k` folds with sizes differing by at most one.
///
/// Unstratified: one seeded shuffle cut into contiguous blocks, the first
/// `n mod k` blocks one longer. Stratified: each class is shuffled on its own,
/// the classes are laid end to end and item `i` of that sequence goes to fold
/// `i mod k`, which keeps class proportions per fold as even as possible.
/// Index lists are returned in ascending order.
pub fn kfold_split<S: AsRef<str>>(
    labels: &[S],
    k: usize,
    seed: u64,
    stratified: bool,
) -> Result<Vec<Fold>, TuningError> {
    let n = labels.len();
    if k < 2 {
        return Err(TuningError::InvalidFolds(k));
    }
    if n < k {
        return Err(TuningError::TooFewSamples { samples: n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; n];
    if stratified {
        let (classes, encoded) = encode_labels(labels);
        let mut position = 0;
        for c in 0..classes.len() {
            let mut members: Vec<usize> = (0..n).filter(|&i| encoded[i] == c).collect();
            members.shuffle(&mut rng);
            for i in members {
                assignment[i] = position % k;
                position += 1;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let (base, extra) = (n / k, n % k);
        let mut start = 0;
        for f in 0..k {
            let size = base + usize::from(f < extra);
            for &i in &order[start..start + size] {
                assignment[i] = f;
            }
            start += size;
        }
    }
    Ok((0..k)
        .map(|f| Fold {
            train: (0..n).filter(|&i| assignment[i] != f).collect(),
            validation: (0..n).filter(|&i| assignment[i] == f).collect(),
        })
        .collect())
}

/// `count` points evenly spaced in log10 between `10^start` and `10^stop`.
pub fn logspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![10f64.powf(start)],
        _ => (0..count)
            .map(|i| 10f64.powf(start + (stop - start) * i as f64 / (count - 1) as f64))
            .collect(),
    }
}

/// The five-point C grid used for linear SVC.
pub const SVC_C_GRID: [f64; 5] = [0.001, 0.01, 0.1, 1.0, 10.0];

/// Candidate values per hyperparameter on top of a base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    base: Hyperparameters,
    params: BTreeMap<String, Vec<ParamValue>>,
}

impl Grid {
    /// Validates every candidate against the kind of `base`.
    pub fn new(
        base: Hyperparameters,
        params: BTreeMap<String, Vec<ParamValue>>,
    ) -> Result<Self, TuningError> {
        for (name, values) in &params {
            if values.is_empty() {
                return Err(TuningError::InvalidGrid(format!("`{name}` has no candidates")));
            }
            for v in values {
                base.clone()
                    .set(name, v)
                    .map_err(|e| TuningError::InvalidGrid(e.to_string()))?;
            }
        }
        Ok(Grid { base, params })
    }

    /// The default search space for `kind`.
    pub fn default_for(kind: ModelKind) -> Self {
        let floats = |v: &[f64]| v.iter().map(|&x| ParamValue::Float(x)).collect::<Vec<_>>();
        let ints = |v: &[i64]| v.iter().map(|&x| ParamValue::Int(x)).collect::<Vec<_>>();
        let texts = |v: &[&str]| v.iter().map(|&x| ParamValue::Text(x.into())).collect::<Vec<_>>();
        let mut params = BTreeMap::new();
        match kind {
            ModelKind::Nb => {
                params.insert("lambda".into(), floats(&[0.7, 1.0]));
            }
            ModelKind::Knn => {
                params.insert("k".into(), ints(&[3, 5, 7, 9]));
                params.insert("weighting".into(), texts(&["uniform", "distance"]));
            }
            ModelKind::Svc => {
                params.insert("c".into(), floats(&SVC_C_GRID));
            }
            ModelKind::Logreg => {
                params.insert("c".into(), floats(&logspace(-3.0, 3.0, 7)));
            }
            ModelKind::Tree => {
                params.insert("criterion".into(), texts(&["gini", "entropy"]));
            }
            ModelKind::Forest => {
                params.insert("n_trees".into(), ints(&[50, 100, 200]));
                params.insert("criterion".into(), texts(&["gini", "entropy"]));
            }
        }
        Grid::new(Hyperparameters::default_for(kind), params).expect("default grids are valid")
    }

    pub fn kind(&self) -> ModelKind {
        self.base.kind()
    }

    pub fn base(&self) -> &Hyperparameters {
        &self.base
    }

    pub fn params(&self) -> &BTreeMap<String, Vec<ParamValue>> {
        &self.params
    }

    /// Number of combinations.
    pub fn size(&self) -> usize {
        self.params.values().map(Vec::len).product()
    }

    /// Every combination in grid order: parameter names sorted, the last name
    /// varying fastest, candidates in their listed order.
    pub fn combinations(&self) -> Vec<Combination> {
        let names: Vec<&String> = self.params.keys().collect();
        let lists: Vec<&Vec<ParamValue>> = self.params.values().collect();
        let mut out = Vec::with_capacity(self.size());
        let mut digits = vec![0usize; names.len()];
        loop {
            let assignment: Vec<(String, ParamValue)> = names
                .iter()
                .zip(&lists)
                .zip(&digits)
                .map(|((n, l), &d)| ((*n).clone(), l[d].clone()))
                .collect();
            let mut hyper = self.base.clone();
            for (n, v) in &assignment {
                hyper.set(n, v).expect("validated in Grid::new");
            }
            out.push(Combination {
                params: assignment,
                hyperparameters: hyper,
            });
            // odometer increment
            let mut pos = digits.len();
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < lists[pos].len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub params: Vec<(String, ParamValue)>,
    pub hyperparameters: Hyperparameters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvConfig {
    pub k: usize,
    pub metric: Metric,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 3,
            metric: Metric::F1Macro,
            seed: 42,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub combination: Combination,
    /// One score per fold; failed fits score negative infinity.
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub metric: Metric,
    pub k: usize,
    pub rows: Vec<CvRow>,
    /// Index into `rows` of the selected combination.
    pub best: usize,
}

impl CvResult {
    pub fn best_row(&self) -> &CvRow {
        &self.rows[self.best]
    }

    pub fn best_hyperparameters(&self) -> &Hyperparameters {
        &self.rows[self.best].combination.hyperparameters
    }

    /// Comma-separated table: parameters, per-fold scores, mean, selection flag.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self
            .rows
            .first()
            .map(|r| r.combination.params.iter().map(|(n, _)| n.as_str()).collect())
            .unwrap_or_default();
        let mut header: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        header.extend((1..=self.k).map(|f| format!("{}_fold{f}", self.metric)));
        header.push(format!("{}_mean", self.metric));
        header.push("best".into());
        let _ = writeln!(out, "{}", header.join(","));
        for (i, row) in self.rows.iter().enumerate() {
            let mut cells: Vec<String> =
                row.combination.params.iter().map(|(_, v)| v.to_string()).collect();
            cells.extend(row.fold_scores.iter().map(|s| format_score(*s)));
            cells.push(format_score(row.mean));
            cells.push(usize::from(i == self.best).to_string());
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

fn format_score(s: f64) -> String {
    if s.is_finite() {
        format!("{s:.6}")
    } else {
        "-inf".into()
    }
}

struct FoldData<F: Scalar> {
    train_x: Vec<SparseVector<F>>,
    train_y: Vec<String>,
    val_x: Vec<SparseVector<F>>,
    val_y: Vec<String>,
}

/// Grid search over precomputed feature vectors.
pub fn grid_search_features<F: Scalar, S: AsRef<str> + Sync>(
    x: &[SparseVector<F>],
    y: &[S],
    grid: &Grid,
    cv: &CvConfig,
) -> Result<CvResult, TuningError> {
    if x.len() != y.len() {
        return Err(TuningError::LengthMismatch {
            features: x.len(),
            labels: y.len(),
        });
    }
    let folds = kfold_split(y, cv.k, cv.seed, cv.stratified)?;
    let data: Vec<Result<FoldData<F>, String>> = folds
        .iter()
        .map(|f| {
            Ok(FoldData {
                train_x: f.train.iter().map(|&i| x[i].clone()).collect(),
                train_y: f.train.iter().map(|&i| y[i].as_ref().to_string()).collect(),
                val_x: f.validation.iter().map(|&i| x[i].clone()).collect(),
                val_y: f.validation.iter().map(|&i| y[i].as_ref().to_string()).collect(),
            })
        })
        .collect();
    Ok(search(&data, &encode_labels(y).0, grid, cv))
}

/// Grid search over token documents; the featurizer is refitted on every
/// training fold so validation vocabulary never leaks into training.
pub fn grid_search<F: Scalar, S: AsRef<str> + Sync, L: AsRef<str> + Sync>(
    docs: &[Vec<S>],
    labels: &[L],
    features: &FeatureConfig,
    grid: &Grid,
    cv: &CvConfig,
) -> Result<CvResult, TuningError> {
    if docs.len() != labels.len() {
        return Err(TuningError::LengthMismatch {
            features: docs.len(),
            labels: labels.len(),
        });
    }
    let folds = kfold_split(labels, cv.k, cv.seed, cv.stratified)?;
    let data: Vec<Result<FoldData<F>, String>> = folds
        .par_iter()
        .map(|f| {
            let train_docs: Vec<&[S]> = f.train.iter().map(|&i| docs[i].as_slice()).collect();
            let featurizer = Featurizer::<F>::fit(&train_docs, features)
                .map_err(|e| format!("featurization: {e}"))?;
            Ok(FoldData {
                train_x: train_docs.iter().map(|d| featurizer.transform(d)).collect(),
                train_y: f.train.iter().map(|&i| labels[i].as_ref().to_string()).collect(),
                val_x: f
                    .validation
                    .iter()
                    .map(|&i| featurizer.transform(&docs[i]))
                    .collect(),
                val_y: f
                    .validation
                    .iter()
                    .map(|&i| labels[i].as_ref().to_string())
                    .collect(),
            })
        })
        .collect();
    Ok(search(&data, &encode_labels(labels).0, grid, cv))
}

fn search<F: Scalar>(
    folds: &[Result<FoldData<F>, String>],
    classes: &[String],
    grid: &Grid,
    cv: &CvConfig,
) -> CvResult {
    let combos = grid.combinations();
    let k = folds.len();
    let work: Vec<(usize, usize)> = (0..combos.len())
        .flat_map(|c| (0..k).map(move |f| (c, f)))
        .collect();
    let scores: Vec<Result<f64, String>> = work
        .par_iter()
        .map(|&(c, f)| {
            let fold = folds[f].as_ref().map_err(Clone::clone)?;
            score_fold(fold, classes, &combos[c].hyperparameters, cv.metric)
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut rows = Vec::with_capacity(combos.len());
    for (c, combination) in combos.into_iter().enumerate() {
        let mut fold_scores = Vec::with_capacity(k);
        let mut error = None;
        for s in &scores[c * k..(c + 1) * k] {
            match s {
                Ok(v) => fold_scores.push(*v),
                Err(e) => {
                    fold_scores.push(f64::NEG_INFINITY);
                    error.get_or_insert_with(|| e.clone());
                }
            }
        }
        let mean = if error.is_some() {
            f64::NEG_INFINITY
        } else {
            fold_scores.iter().sum::<f64>() / k as f64
        };
        if let Some(e) = &error {
            log::warn!("grid combination {c} failed: {e}");
        }
        rows.push(CvRow {
            combination,
            fold_scores,
            mean,
            error,
        });
    }
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.mean > rows[best].mean {
            best = i;
        }
    }
    CvResult {
        metric: cv.metric,
        k,
        rows,
        best,
    }
}

fn score_fold<F: Scalar>(
    fold: &FoldData<F>,
    classes: &[String],
    hyper: &Hyperparameters,
    metric: Metric,
) -> Result<f64, ModelError> {
    let model = Classifier::fit(&fold.train_x, &fold.train_y, hyper)?;
    let predictions = fold
        .val_x
        .iter()
        .map(|v| model.predict(v).map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;
    let report = build_report(&fold.val_y, &predictions, classes)
        .map_err(|e| ModelError::InvalidFeatures(e.to_string()))?;
    Ok(metric.score(&report))
}
