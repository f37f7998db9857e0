//! Vocabularies, n-grams, term-frequency vectors and averaged word embeddings.

mod sparse;
mod vocab;
pub mod word2vec;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sparse::SparseVector;
pub use vocab::Vocabulary;
pub use word2vec::{
    embed_average, train_word2vec, EmbeddingMatrix, Word2VecConfig, Word2VecMode,
    Word2VecTraining,
};

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("no term reaches the minimum frequency of {min_frequency}")]
    EmptyVocabulary { min_frequency: usize },
    #[error("word2vec needs at least 2 vocabulary terms, got {0}")]
    VocabularyTooSmall(usize),
    #[error("invalid feature configuration: {0}")]
    InvalidConfig(String),
    #[error("word-vector file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sliding-window n-grams of a token list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGram {
    pub n: usize,
    pub grams: Vec<String>,
}

/// All windows of `n` consecutive tokens, joined by a space. Panics if `n == 0`.
pub fn extract_ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> NGram {
    assert!(n >= 1, "n-gram order must be at least 1");
    let grams = tokens
        .windows(n)
        .map(|w| {
            w.iter()
                .map(AsRef::as_ref)
                .collect::<Vec<&str>>()
                .join(" ")
        })
        .collect();
    NGram { n, grams }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorMode {
    TermFrequency,
    Binary,
}

/// Counts (or flags) in-vocabulary tokens; OOV tokens are ignored.
pub fn vectorize<F: Scalar, S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    mode: VectorMode,
) -> SparseVector<F> {
    let pairs = tokens.iter().filter_map(|t| vocab.get(t.as_ref()));
    match mode {
        VectorMode::TermFrequency => {
            SparseVector::from_pairs(vocab.len(), pairs.map(|i| (i, F::one())))
        }
        VectorMode::Binary => {
            let mut idx: Vec<usize> = pairs.collect();
            idx.sort_unstable();
            idx.dedup();
            SparseVector::from_pairs(vocab.len(), idx.into_iter().map(|i| (i, F::one())))
        }
    }
}

/// Which document representation feeds the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    Tf,
    Binary,
    EmbedAverage,
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tf" | "term_frequency" => Ok(FeatureMode::Tf),
            "binary" => Ok(FeatureMode::Binary),
            "embed_average" | "embed-average" => Ok(FeatureMode::EmbedAverage),
            other => Err(format!("unknown feature mode `{other}` (tf, binary, embed_average)")),
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::Tf => "tf",
            FeatureMode::Binary => "binary",
            FeatureMode::EmbedAverage => "embed_average",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub mode: FeatureMode,
    /// Inclusive n-gram order range; `(1, 1)` is plain unigrams.
    pub ngram_range: (usize, usize),
    pub min_frequency: usize,
    pub word2vec: Word2VecConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            mode: FeatureMode::Tf,
            ngram_range: (1, 1),
            min_frequency: 3,
            word2vec: Word2VecConfig::default(),
        }
    }
}

impl FeatureConfig {
    fn terms<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<String> {
        let (lo, hi) = self.ngram_range;
        let mut out = Vec::new();
        for n in lo..=hi {
            out.extend(extract_ngrams(tokens, n).grams);
        }
        out
    }

    fn validate(&self) -> Result<(), FeatureError> {
        let (lo, hi) = self.ngram_range;
        if lo == 0 || hi < lo {
            return Err(FeatureError::InvalidConfig(format!(
                "n-gram range ({lo}, {hi}) must satisfy 1 <= min <= max"
            )));
        }
        if self.mode == FeatureMode::EmbedAverage && (lo, hi) != (1, 1) {
            return Err(FeatureError::InvalidConfig(
                "embedding features are word level; use n-gram range (1, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Fitted featurization state: vocabulary plus, for embedding mode, trained vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Featurizer<F: Scalar> {
    config: FeatureConfig,
    vocab: Vocabulary,
    embeddings: Option<EmbeddingMatrix<F>>,
}

impl<F: Scalar> Featurizer<F> {
    pub fn fit<D: AsRef<[S]>, S: AsRef<str>>(
        docs: &[D],
        config: &FeatureConfig,
    ) -> Result<Self, FeatureError> {
        config.validate()?;
        let term_docs: Vec<Vec<String>> = docs.iter().map(|d| config.terms(d.as_ref())).collect();
        let vocab = Vocabulary::build(&term_docs, config.min_frequency)?;
        let embeddings = match config.mode {
            FeatureMode::EmbedAverage => {
                Some(train_word2vec(&term_docs, &vocab, &config.word2vec)?.embeddings)
            }
            _ => None,
        };
        Ok(Featurizer {
            config: config.clone(),
            vocab,
            embeddings,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn embeddings(&self) -> Option<&EmbeddingMatrix<F>> {
        self.embeddings.as_ref()
    }

    pub fn dimension(&self) -> usize {
        match &self.embeddings {
            Some(e) => e.dimension(),
            None => self.vocab.len(),
        }
    }

    pub fn transform<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVector<F> {
        match (&self.config.mode, &self.embeddings) {
            (FeatureMode::EmbedAverage, Some(emb)) => {
                SparseVector::from_dense(&embed_average(tokens, emb, &self.vocab))
            }
            (FeatureMode::Binary, _) => {
                vectorize(&self.config.terms(tokens), &self.vocab, VectorMode::Binary)
            }
            _ => vectorize(&self.config.terms(tokens), &self.vocab, VectorMode::TermFrequency),
        }
    }

    pub fn transform_all<D: AsRef<[S]>, S: AsRef<str>>(&self, docs: &[D]) -> Vec<SparseVector<F>> {
        docs.iter().map(|d| self.transform(d.as_ref())).collect()
    }
}
