//! Offensive-language classification over OLID-format corpora.
//!
//! The pipeline runs [`preprocess`] → [`features`] → [`models`], with
//! [`tuning`] for cross-validated grid search, [`evaluation`] for metrics and
//! [`cascade`] for the three-level OFF → TIN → target-type predictor.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, with `F32` variants for single precision.

pub mod cascade;
pub mod corpus;
pub mod evaluation;
pub mod features;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod scalar;
pub mod tuning;

use thiserror::Error;

pub use scalar::Scalar;

pub type SparseVec = features::SparseVector<f64>;
pub type SparseVecF32 = features::SparseVector<f32>;
pub type Model = models::Classifier<f64>;
pub type ModelF32 = models::Classifier<f32>;
pub type Pipeline = pipeline::TextClassifier<f64>;
pub type PipelineF32 = pipeline::TextClassifier<f32>;
pub type Cascade = cascade::CascadeModel<f64>;
pub type CascadeF32 = cascade::CascadeModel<f32>;
pub type Embeddings = features::EmbeddingMatrix<f64>;
pub type EmbeddingsF32 = features::EmbeddingMatrix<f32>;
pub type Report = evaluation::MetricsReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus: {0}")]
    Corpus(#[from] corpus::CorpusError),
    #[error("preprocessing: {0}")]
    Preprocess(#[from] preprocess::PreprocessError),
    #[error("features: {0}")]
    Features(#[from] features::FeatureError),
    #[error("model: {0}")]
    Model(#[from] models::ModelError),
    #[error("evaluation: {0}")]
    Evaluation(#[from] evaluation::EvalError),
    #[error("tuning: {0}")]
    Tuning(#[from] tuning::TuningError),
    #[error("level {0} has no training or test data")]
    EmptyLevelView(corpus::Level),
    #[error("file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
