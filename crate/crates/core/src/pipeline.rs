//! Raw text in, label out: preprocessing, featurization and a model bundled together.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::features::{FeatureConfig, Featurizer, SparseVector};
use crate::models::{Classifier, Hyperparameters, Predictor};
use crate::preprocess::{run_pipeline, PreprocessConfig};
use crate::scalar::Scalar;
use crate::Error;

pub const PIPELINE_FORMAT: &str = "offlang-pipeline";
pub const PIPELINE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TextClassifier<F: Scalar> {
    preprocess: PreprocessConfig,
    featurizer: Featurizer<F>,
    model: Classifier<F>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct PipelineFile<F: Scalar> {
    format: String,
    version: u32,
    pipeline: TextClassifier<F>,
}

impl<F: Scalar> TextClassifier<F> {
    pub fn new(preprocess: PreprocessConfig, featurizer: Featurizer<F>, model: Classifier<F>) -> Self {
        TextClassifier {
            preprocess,
            featurizer,
            model,
        }
    }

    /// Preprocesses `texts`, fits the featurizer on them and trains the model.
    pub fn fit<T: AsRef<str>, L: AsRef<str>>(
        texts: &[T],
        labels: &[L],
        preprocess: &PreprocessConfig,
        features: &FeatureConfig,
        hyper: &Hyperparameters,
    ) -> Result<Self, Error> {
        let docs: Vec<Vec<String>> = texts
            .iter()
            .map(|t| run_pipeline(t.as_ref(), preprocess).tokens)
            .collect();
        Self::fit_tokens(&docs, labels, preprocess, features, hyper)
    }

    /// Like [`TextClassifier::fit`] for documents that are already preprocessed
    /// with `preprocess`.
    pub fn fit_tokens<D: AsRef<[String]>, L: AsRef<str>>(
        docs: &[D],
        labels: &[L],
        preprocess: &PreprocessConfig,
        features: &FeatureConfig,
        hyper: &Hyperparameters,
    ) -> Result<Self, Error> {
        let featurizer = Featurizer::fit(docs, features)?;
        let x = featurizer.transform_all(docs);
        let model = Classifier::fit(&x, labels, hyper)?;
        Ok(TextClassifier {
            preprocess: preprocess.clone(),
            featurizer,
            model,
        })
    }

    pub fn preprocess_config(&self) -> &PreprocessConfig {
        &self.preprocess
    }

    pub fn featurizer(&self) -> &Featurizer<F> {
        &self.featurizer
    }

    pub fn model(&self) -> &Classifier<F> {
        &self.model
    }

    pub fn classes(&self) -> &[String] {
        self.model.classes()
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        run_pipeline(text, &self.preprocess).tokens
    }

    pub fn features(&self, text: &str) -> SparseVector<F> {
        self.featurizer.transform(&self.tokens(text))
    }

    pub fn predict(&self, text: &str) -> Result<String, Error> {
        self.predict_tokens(&self.tokens(text))
    }

    pub fn predict_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<String, Error> {
        let x = self.featurizer.transform(tokens);
        Ok(self.model.predict(&x)?.to_string())
    }

    pub fn predict_scores(&self, text: &str) -> Result<Vec<F>, Error> {
        Ok(self.model.predict_scores(&self.features(text))?)
    }

    pub fn save<W: Write>(&self, out: W) -> Result<(), Error> {
        let file = PipelineFile {
            format: PIPELINE_FORMAT.to_string(),
            version: PIPELINE_FORMAT_VERSION,
            pipeline: self.clone(),
        };
        serde_json::to_writer(out, &file).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn load<R: Read>(input: R) -> Result<Self, Error> {
        let file: PipelineFile<F> =
            serde_json::from_reader(input).map_err(|e| Error::Format(e.to_string()))?;
        if file.format != PIPELINE_FORMAT || file.version != PIPELINE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "expected {PIPELINE_FORMAT} version {PIPELINE_FORMAT_VERSION}, found {} version {}",
                file.format, file.version
            )));
        }
        Ok(file.pipeline)
    }

    pub fn save_file(&self, path: impl AsRef<std::path::Path>) -> Result<(), Error> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.save(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_file(path: impl AsRef<std::path::Path>) -> Result<Self, Error> {
        let f = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(f))
    }
}
