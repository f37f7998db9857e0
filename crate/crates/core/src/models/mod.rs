//! Classical classifiers behind one train/predict contract.
//!
//! Every model is trained on [`SparseVector`] rows with string labels. The
//! class list is the sorted set of training labels; wherever a rule says
//! "ties go to the earlier class" it refers to this order.

mod forest;
mod hyper;
mod knn;
pub mod linear;
mod nb;
pub mod tree;

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::RandomForest;
pub use hyper::{
    Criterion, FeatureSubsample, ForestParams, Hyperparameters, KnnParams, LogregParams, Metric,
    ModelKind, Multiclass, NbParams, ParamValue, SvcParams, TreeParams, Weighting,
};
pub use knn::Knn;
pub use linear::{LinearModel, LinearObjective};
pub use nb::NaiveBayes;
pub use tree::{entropy, gini, info_gain, DecisionTree, TreeNode};

use crate::features::SparseVector;
use crate::scalar::Scalar;

pub const MODEL_FORMAT: &str = "offlang-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("expected feature dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("binary model given {0} classes with one-vs-rest disabled")]
    NonBinaryLabels(usize),
    #[error("class counts are all zero")]
    AllZeroCounts,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("invalid features: {0}")]
    InvalidFeatures(String),
    #[error("unknown model kind `{0}`")]
    UnknownKind(String),
    #[error("cannot load model: {0}")]
    Load(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Uniform prediction contract shared by every trained model.
pub trait Predictor<F: Scalar> {
    fn classes(&self) -> &[String];

    fn dimension(&self) -> usize;

    /// Index into [`Predictor::classes`] of the predicted label.
    fn predict_index(&self, x: &SparseVector<F>) -> Result<usize, ModelError>;

    /// Per-class scores in class order; see each model for their meaning.
    fn predict_scores(&self, x: &SparseVector<F>) -> Result<Vec<F>, ModelError>;

    fn predict(&self, x: &SparseVector<F>) -> Result<&str, ModelError> {
        let i = self.predict_index(x)?;
        Ok(self.classes()[i].as_str())
    }

    fn check_dimension(&self, x: &SparseVector<F>) -> Result<(), ModelError> {
        if x.dimension() != self.dimension() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dimension(),
                found: x.dimension(),
            });
        }
        Ok(())
    }
}

/// Sorted class list and each label's index into it.
pub fn encode_labels<S: AsRef<str>>(labels: &[S]) -> (Vec<String>, Vec<usize>) {
    let classes: Vec<String> = labels
        .iter()
        .map(|l| l.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let encoded = labels
        .iter()
        .map(|l| {
            classes
                .binary_search_by(|c| c.as_str().cmp(l.as_ref()))
                .expect("label present in its own class list")
        })
        .collect();
    (classes, encoded)
}

/// Validates a training set and returns `(classes, encoded labels, dimension)`.
pub(crate) fn prepare<F: Scalar, S: AsRef<str>>(
    x: &[SparseVector<F>],
    y: &[S],
) -> Result<(Vec<String>, Vec<usize>, usize), ModelError> {
    if x.is_empty() || y.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch {
            features: x.len(),
            labels: y.len(),
        });
    }
    let dim = x[0].dimension();
    if let Some(bad) = x.iter().find(|v| v.dimension() != dim) {
        return Err(ModelError::DimensionMismatch {
            expected: dim,
            found: bad.dimension(),
        });
    }
    let (classes, encoded) = encode_labels(y);
    Ok((classes, encoded, dim))
}

/// First index of the maximum; earlier indices win ties.
pub(crate) fn argmax<F: Scalar>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Any of the six trained models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case", bound = "")]
pub enum Classifier<F: Scalar> {
    Nb(NaiveBayes<F>),
    Knn(Knn<F>),
    Logreg(LinearModel<F>),
    Svc(LinearModel<F>),
    Tree(DecisionTree<F>),
    Forest(RandomForest<F>),
}

impl<F: Scalar> Classifier<F> {
    pub fn fit<S: AsRef<str>>(
        x: &[SparseVector<F>],
        y: &[S],
        hyper: &Hyperparameters,
    ) -> Result<Self, ModelError> {
        Ok(match hyper {
            Hyperparameters::Nb(p) => Classifier::Nb(NaiveBayes::fit(x, y, F::lit(p.lambda))?),
            Hyperparameters::Knn(p) => Classifier::Knn(Knn::fit(x, y, p.clone())?),
            Hyperparameters::Logreg(p) => Classifier::Logreg(LinearModel::fit_logreg(x, y, p)?),
            Hyperparameters::Svc(p) => Classifier::Svc(LinearModel::fit_svc(x, y, p)?),
            Hyperparameters::Tree(p) => Classifier::Tree(DecisionTree::fit(x, y, p)?),
            Hyperparameters::Forest(p) => Classifier::Forest(RandomForest::fit(x, y, p)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Nb(_) => ModelKind::Nb,
            Classifier::Knn(_) => ModelKind::Knn,
            Classifier::Logreg(_) => ModelKind::Logreg,
            Classifier::Svc(_) => ModelKind::Svc,
            Classifier::Tree(_) => ModelKind::Tree,
            Classifier::Forest(_) => ModelKind::Forest,
        }
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        match self {
            Classifier::Nb(m) => Hyperparameters::Nb(NbParams {
                lambda: m.lambda().to_f64_lossy(),
            }),
            Classifier::Knn(m) => Hyperparameters::Knn(m.params().clone()),
            Classifier::Logreg(m) => Hyperparameters::Logreg(
                m.logreg_params().cloned().unwrap_or_default(),
            ),
            Classifier::Svc(m) => {
                Hyperparameters::Svc(m.svc_params().cloned().unwrap_or_default())
            }
            Classifier::Tree(m) => Hyperparameters::Tree(m.params().clone()),
            Classifier::Forest(m) => Hyperparameters::Forest(m.params().clone()),
        }
    }

    fn inner(&self) -> &dyn Predictor<F> {
        match self {
            Classifier::Nb(m) => m,
            Classifier::Knn(m) => m,
            Classifier::Logreg(m) | Classifier::Svc(m) => m,
            Classifier::Tree(m) => m,
            Classifier::Forest(m) => m,
        }
    }
}

impl<F: Scalar> Predictor<F> for Classifier<F> {
    fn classes(&self) -> &[String] {
        self.inner().classes()
    }

    fn dimension(&self) -> usize {
        self.inner().dimension()
    }

    fn predict_index(&self, x: &SparseVector<F>) -> Result<usize, ModelError> {
        self.inner().predict_index(x)
    }

    fn predict_scores(&self, x: &SparseVector<F>) -> Result<Vec<F>, ModelError> {
        self.inner().predict_scores(x)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct ModelFile<F: Scalar> {
    format: String,
    version: u32,
    kind: ModelKind,
    class_list: Vec<String>,
    hyperparameters: Hyperparameters,
    payload: Classifier<F>,
}

/// Writes a versioned JSON container: kind tag, class list, hyperparameters, parameters.
pub fn save_model<F: Scalar, W: Write>(out: W, model: &Classifier<F>) -> Result<(), ModelError> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_FORMAT_VERSION,
        kind: model.kind(),
        class_list: model.classes().to_vec(),
        hyperparameters: model.hyperparameters(),
        payload: model.clone(),
    };
    serde_json::to_writer(out, &file).map_err(|e| ModelError::Load(e.to_string()))
}

pub fn load_model<F: Scalar, R: Read>(input: R) -> Result<Classifier<F>, ModelError> {
    let file: ModelFile<F> =
        serde_json::from_reader(input).map_err(|e| ModelError::Load(e.to_string()))?;
    if file.format != MODEL_FORMAT {
        return Err(ModelError::Load(format!("unexpected format tag `{}`", file.format)));
    }
    if file.version != MODEL_FORMAT_VERSION {
        return Err(ModelError::Load(format!("unsupported version {}", file.version)));
    }
    if file.kind != file.payload.kind() || file.class_list != file.payload.classes() {
        return Err(ModelError::Load("header does not match payload".into()));
    }
    Ok(file.payload)
}
