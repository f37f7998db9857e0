use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Nb,
    Knn,
    Logreg,
    Svc,
    Tree,
    Forest,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Nb,
        ModelKind::Knn,
        ModelKind::Logreg,
        ModelKind::Svc,
        ModelKind::Tree,
        ModelKind::Forest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nb => "nb",
            ModelKind::Knn => "knn",
            ModelKind::Logreg => "logreg",
            ModelKind::Svc => "svc",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        let lower = s.trim().to_ascii_lowercase();
        let kind = match lower.as_str() {
            "nb" | "naive_bayes" | "multinomial_nb" => ModelKind::Nb,
            "knn" => ModelKind::Knn,
            "logreg" | "lr" | "logistic_regression" => ModelKind::Logreg,
            "svc" | "svm" | "linear_svc" => ModelKind::Svc,
            "tree" | "decision_tree" => ModelKind::Tree,
            "forest" | "random_forest" => ModelKind::Forest,
            _ => return Err(ModelError::UnknownKind(s.to_string())),
        };
        Ok(kind)
    }
}

/// A single hyperparameter value as it appears in configs and grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    /// Parses `3` as an integer, `0.1` / `1e-3` as a float, anything else as text.
    pub fn parse(s: &str) -> ParamValue {
        let s = s.trim();
        if let Ok(i) = s.parse::<i64>() {
            ParamValue::Int(i)
        } else if let Ok(f) = s.parse::<f64>() {
            ParamValue::Float(f)
        } else {
            ParamValue::Text(s.to_string())
        }
    }

    fn as_f64(&self, name: &str) -> Result<f64, ModelError> {
        match self {
            ParamValue::Int(i) => Ok(*i as f64),
            ParamValue::Float(f) => Ok(*f),
            ParamValue::Text(_) => Err(invalid(name, self, "expected a number")),
        }
    }

    fn as_usize(&self, name: &str) -> Result<usize, ModelError> {
        match self {
            ParamValue::Int(i) if *i >= 0 => Ok(*i as usize),
            ParamValue::Float(f) if *f >= 0.0 && f.fract() == 0.0 => Ok(*f as usize),
            _ => Err(invalid(name, self, "expected a non-negative integer")),
        }
    }

    fn as_text(&self) -> String {
        match self {
            ParamValue::Text(s) => s.clone(),
            other => other.to_string(),
        }
    }

    fn as_bool(&self, name: &str) -> Result<bool, ModelError> {
        match self.as_text().as_str() {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            _ => Err(invalid(name, self, "expected true or false")),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

fn invalid(name: &str, value: &ParamValue, reason: &str) -> ModelError {
    ModelError::InvalidHyperparameter(format!("{name} = {value}: {reason}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Manhattan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
}

/// How linear models handle more than two classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiclass {
    /// Direct binary model for two classes, one-vs-rest beyond.
    Auto,
    /// One binary model per class, even for two classes.
    OneVsRest,
    /// Reject anything but exactly two classes.
    BinaryOnly,
}

/// Candidate features drawn per split in a forest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    All,
    Sqrt,
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbParams {
    pub lambda: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams { lambda: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    pub weighting: Weighting,
    pub metric: Metric,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            k: 5,
            weighting: Weighting::Uniform,
            metric: Metric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregParams {
    pub c: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub multiclass: Multiclass,
}

impl Default for LogregParams {
    fn default() -> Self {
        LogregParams {
            c: 1.0,
            max_iter: 1000,
            tol: 1e-6,
            multiclass: Multiclass::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcParams {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
    pub multiclass: Multiclass,
}

impl Default for SvcParams {
    fn default() -> Self {
        SvcParams {
            c: 1.0,
            epochs: 30,
            seed: 42,
            multiclass: Multiclass::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: Criterion::Gini,
            max_depth: 800,
            min_samples_split: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
    pub feature_subsample: FeatureSubsample,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            tree: TreeParams::default(),
            bootstrap: true,
            feature_subsample: FeatureSubsample::Sqrt,
            seed: 42,
        }
    }
}

/// Model kind together with its training parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparameters {
    Nb(NbParams),
    Knn(KnnParams),
    Logreg(LogregParams),
    Svc(SvcParams),
    Tree(TreeParams),
    Forest(ForestParams),
}

impl Hyperparameters {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Nb => Hyperparameters::Nb(NbParams::default()),
            ModelKind::Knn => Hyperparameters::Knn(KnnParams::default()),
            ModelKind::Logreg => Hyperparameters::Logreg(LogregParams::default()),
            ModelKind::Svc => Hyperparameters::Svc(SvcParams::default()),
            ModelKind::Tree => Hyperparameters::Tree(TreeParams::default()),
            ModelKind::Forest => Hyperparameters::Forest(ForestParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparameters::Nb(_) => ModelKind::Nb,
            Hyperparameters::Knn(_) => ModelKind::Knn,
            Hyperparameters::Logreg(_) => ModelKind::Logreg,
            Hyperparameters::Svc(_) => ModelKind::Svc,
            Hyperparameters::Tree(_) => ModelKind::Tree,
            Hyperparameters::Forest(_) => ModelKind::Forest,
        }
    }

    /// Names accepted by [`Hyperparameters::set`] for this kind.
    pub fn parameter_names(kind: ModelKind) -> &'static [&'static str] {
        match kind {
            ModelKind::Nb => &["lambda"],
            ModelKind::Knn => &["k", "weighting", "metric"],
            ModelKind::Logreg => &["c", "max_iter", "tol", "multiclass"],
            ModelKind::Svc => &["c", "epochs", "seed", "multiclass"],
            ModelKind::Tree => &["criterion", "max_depth", "min_samples_split"],
            ModelKind::Forest => &[
                "n_trees",
                "criterion",
                "max_depth",
                "min_samples_split",
                "bootstrap",
                "feature_subsample",
                "seed",
            ],
        }
    }

    /// Sets one named parameter, validating its value.
    pub fn set(&mut self, name: &str, value: &ParamValue) -> Result<(), ModelError> {
        let positive = |v: f64| -> Result<f64, ModelError> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(invalid(name, value, "must be positive"))
            }
        };
        let at_least_one = |v: usize| -> Result<usize, ModelError> {
            if v >= 1 {
                Ok(v)
            } else {
                Err(invalid(name, value, "must be at least 1"))
            }
        };
        let criterion = || match value.as_text().as_str() {
            "gini" => Ok(Criterion::Gini),
            "entropy" => Ok(Criterion::Entropy),
            _ => Err(invalid(name, value, "expected gini or entropy")),
        };
        let multiclass = || match value.as_text().as_str() {
            "auto" => Ok(Multiclass::Auto),
            "ovr" | "one_vs_rest" => Ok(Multiclass::OneVsRest),
            "binary" | "binary_only" => Ok(Multiclass::BinaryOnly),
            _ => Err(invalid(name, value, "expected auto, ovr or binary")),
        };
        let unknown = || ModelError::InvalidHyperparameter(format!("unknown parameter `{name}`"));

        match self {
            Hyperparameters::Nb(p) => match name {
                "lambda" => p.lambda = positive(value.as_f64(name)?)?,
                _ => return Err(unknown()),
            },
            Hyperparameters::Knn(p) => match name {
                "k" => p.k = at_least_one(value.as_usize(name)?)?,
                "weighting" => {
                    p.weighting = match value.as_text().as_str() {
                        "uniform" => Weighting::Uniform,
                        "distance" => Weighting::Distance,
                        _ => return Err(invalid(name, value, "expected uniform or distance")),
                    }
                }
                "metric" => {
                    p.metric = match value.as_text().as_str() {
                        "euclidean" => Metric::Euclidean,
                        "manhattan" => Metric::Manhattan,
                        _ => return Err(invalid(name, value, "expected euclidean or manhattan")),
                    }
                }
                _ => return Err(unknown()),
            },
            Hyperparameters::Logreg(p) => match name {
                "c" => p.c = positive(value.as_f64(name)?)?,
                "max_iter" => p.max_iter = at_least_one(value.as_usize(name)?)?,
                "tol" => p.tol = positive(value.as_f64(name)?)?,
                "multiclass" => p.multiclass = multiclass()?,
                _ => return Err(unknown()),
            },
            Hyperparameters::Svc(p) => match name {
                "c" => p.c = positive(value.as_f64(name)?)?,
                "epochs" => p.epochs = at_least_one(value.as_usize(name)?)?,
                "seed" => p.seed = value.as_usize(name)? as u64,
                "multiclass" => p.multiclass = multiclass()?,
                _ => return Err(unknown()),
            },
            Hyperparameters::Tree(p) => match name {
                "criterion" => p.criterion = criterion()?,
                "max_depth" => p.max_depth = value.as_usize(name)?,
                "min_samples_split" => p.min_samples_split = at_least_one(value.as_usize(name)?)?,
                _ => return Err(unknown()),
            },
            Hyperparameters::Forest(p) => match name {
                "n_trees" => p.n_trees = at_least_one(value.as_usize(name)?)?,
                "criterion" => p.tree.criterion = criterion()?,
                "max_depth" => p.tree.max_depth = value.as_usize(name)?,
                "min_samples_split" => {
                    p.tree.min_samples_split = at_least_one(value.as_usize(name)?)?
                }
                "bootstrap" => p.bootstrap = value.as_bool(name)?,
                "feature_subsample" => {
                    p.feature_subsample = match value {
                        ParamValue::Int(_) => {
                            FeatureSubsample::Count(at_least_one(value.as_usize(name)?)?)
                        }
                        _ => match value.as_text().as_str() {
                            "all" => FeatureSubsample::All,
                            "sqrt" => FeatureSubsample::Sqrt,
                            _ => return Err(invalid(name, value, "expected all, sqrt or a count")),
                        },
                    }
                }
                "seed" => p.seed = value.as_usize(name)? as u64,
                _ => return Err(unknown()),
            },
        }
        Ok(())
    }
}
