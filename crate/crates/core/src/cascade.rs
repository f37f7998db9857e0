//! Three chained classifiers: offensive? then targeted? then target type.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LabelA, LabelB, LabelC, Level};
use crate::evaluation::{build_report, MetricsReport};
use crate::features::FeatureConfig;
use crate::models::Hyperparameters;
use crate::pipeline::TextClassifier;
use crate::preprocess::{run_pipeline, PreprocessConfig};
use crate::scalar::Scalar;
use crate::Error;

pub const CASCADE_FORMAT: &str = "offlang-cascade";
pub const CASCADE_FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Placeholder class for levels a cascade (or the gold annotation) leaves empty.
pub const ABSENT: &str = "NONE";

/// How one level's model is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub features: FeatureConfig,
    pub hyperparameters: Hyperparameters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    pub preprocess: PreprocessConfig,
    pub a: LevelSpec,
    pub b: LevelSpec,
    pub c: LevelSpec,
}

impl CascadeSpec {
    /// The same features and model kind at every level.
    pub fn uniform(preprocess: PreprocessConfig, level: LevelSpec) -> Self {
        CascadeSpec {
            preprocess,
            a: level.clone(),
            b: level.clone(),
            c: level,
        }
    }

    pub fn level(&self, level: Level) -> &LevelSpec {
        match level {
            Level::A => &self.a,
            Level::B => &self.b,
            Level::C => &self.c,
        }
    }
}

/// A cascade output; `label_b` only under OFF, `label_c` only under TIN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierPrediction {
    pub label_a: LabelA,
    pub label_b: Option<LabelB>,
    pub label_c: Option<LabelC>,
}

impl HierPrediction {
    pub fn satisfies_hierarchy(&self) -> bool {
        (self.label_b.is_none() || self.label_a == LabelA::Off)
            && (self.label_c.is_none() || self.label_b == Some(LabelB::Tin))
    }

    /// The predicted class at `level`, or [`ABSENT`].
    pub fn label(&self, level: Level) -> &'static str {
        match level {
            Level::A => self.label_a.as_str(),
            Level::B => self.label_b.map_or(ABSENT, LabelB::as_str),
            Level::C => self.label_c.map_or(ABSENT, LabelC::as_str),
        }
    }
}

impl fmt::Display for HierPrediction {
    /// `label_a,label_b,label_c` with empty fields for skipped levels.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{}",
            self.label_a,
            self.label_b.map_or("", LabelB::as_str),
            self.label_c.map_or("", LabelC::as_str)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel<F: Scalar> {
    a: TextClassifier<F>,
    b: TextClassifier<F>,
    c: TextClassifier<F>,
    /// All levels preprocess identically, so text is tokenized once.
    shared_preprocess: bool,
}

impl<F: Scalar> CascadeModel<F> {
    pub fn from_levels(a: TextClassifier<F>, b: TextClassifier<F>, c: TextClassifier<F>) -> Self {
        let shared_preprocess = a.preprocess_config() == b.preprocess_config()
            && b.preprocess_config() == c.preprocess_config();
        CascadeModel {
            a,
            b,
            c,
            shared_preprocess,
        }
    }

    pub fn level(&self, level: Level) -> &TextClassifier<F> {
        match level {
            Level::A => &self.a,
            Level::B => &self.b,
            Level::C => &self.c,
        }
    }

    pub fn predict(&self, text: &str) -> Result<HierPrediction, Error> {
        predict_cascade(self, text)
    }

    /// Writes `manifest.json` and one pipeline file per level into `dir`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<(), Error> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut levels = Vec::new();
        for level in Level::ALL {
            let file = format!("model_{}.json", level.to_string().to_ascii_lowercase());
            self.level(level).save_file(dir.join(&file))?;
            levels.push(ManifestLevel {
                level,
                file,
                kind: self.level(level).model().kind().name().to_string(),
                classes: self.level(level).classes().to_vec(),
            });
        }
        let manifest = Manifest {
            format: CASCADE_FORMAT.to_string(),
            version: CASCADE_FORMAT_VERSION,
            levels,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, Error> {
        let dir = dir.as_ref();
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        if manifest.format != CASCADE_FORMAT || manifest.version != CASCADE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "{} is not a version {CASCADE_FORMAT_VERSION} cascade manifest",
                dir.display()
            )));
        }
        let load = |level: Level| -> Result<TextClassifier<F>, Error> {
            let entry = manifest
                .levels
                .iter()
                .find(|l| l.level == level)
                .ok_or_else(|| Error::Format(format!("manifest lacks level {level}")))?;
            TextClassifier::load_file(dir.join(&entry.file))
        };
        Ok(CascadeModel::from_levels(load(Level::A)?, load(Level::B)?, load(Level::C)?))
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    levels: Vec<ManifestLevel>,
}

#[derive(Serialize, Deserialize)]
struct ManifestLevel {
    level: Level,
    file: String,
    kind: String,
    classes: Vec<String>,
}

/// Trains each level on its own gold view of `corpus`, with its own vocabulary.
pub fn train_cascade<F: Scalar>(corpus: &Corpus, spec: &CascadeSpec) -> Result<CascadeModel<F>, Error> {
    let train = |level: Level| -> Result<TextClassifier<F>, Error> {
        let view = corpus.subtask_view(level);
        if view.is_empty() {
            return Err(Error::EmptyLevelView(level));
        }
        let texts: Vec<&str> = view.posts().iter().map(|p| p.text.as_str()).collect();
        let labels = view.labels(level)?;
        let s = spec.level(level);
        TextClassifier::fit(&texts, &labels, &spec.preprocess, &s.features, &s.hyperparameters)
    };
    let (a, (b, c)) = rayon::join(
        || train(Level::A),
        || rayon::join(|| train(Level::B), || train(Level::C)),
    );
    Ok(CascadeModel::from_levels(a?, b?, c?))
}

/// Runs A, then B only on OFF, then C only on TIN.
pub fn predict_cascade<F: Scalar>(model: &CascadeModel<F>, text: &str) -> Result<HierPrediction, Error> {
    let shared = model
        .shared_preprocess
        .then(|| run_pipeline(text, model.a.preprocess_config()).tokens);
    let decide = |clf: &TextClassifier<F>| -> Result<String, Error> {
        match &shared {
            Some(tokens) => clf.predict_tokens(tokens),
            None => clf.predict(text),
        }
    };
    let parse = |level: Level, label: String| Error::Format(format!("level {level} model produced `{label}`"));

    let a = decide(&model.a)?;
    let label_a: LabelA = a.parse().map_err(|_| parse(Level::A, a))?;
    if label_a == LabelA::Not {
        return Ok(HierPrediction {
            label_a,
            label_b: None,
            label_c: None,
        });
    }
    let b = decide(&model.b)?;
    let label_b: LabelB = b.parse().map_err(|_| parse(Level::B, b))?;
    if label_b == LabelB::Unt {
        return Ok(HierPrediction {
            label_a,
            label_b: Some(label_b),
            label_c: None,
        });
    }
    let c = decide(&model.c)?;
    let label_c: LabelC = c.parse().map_err(|_| parse(Level::C, c))?;
    Ok(HierPrediction {
        label_a,
        label_b: Some(label_b),
        label_c: Some(label_c),
    })
}

/// Scores the level's model on the gold view of `test` at `level`, so upstream
/// model errors never reach this report.
pub fn evaluate_level<F: Scalar>(
    model: &CascadeModel<F>,
    test: &Corpus,
    level: Level,
) -> Result<MetricsReport, Error> {
    let view = test.subtask_view(level);
    if view.is_empty() {
        return Err(Error::EmptyLevelView(level));
    }
    let gold = view.labels(level)?;
    let clf = model.level(level);
    let predicted = view
        .posts()
        .iter()
        .map(|p| clf.predict(&p.text))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(build_report(&gold, &predicted, &level.class_names())?)
}

/// Cascaded predictions scored against the full annotation at every level,
/// with [`ABSENT`] as an extra class wherever a level does not apply.
#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndReport {
    pub a: MetricsReport,
    pub b: MetricsReport,
    pub c: MetricsReport,
}

pub fn evaluate_end_to_end<F: Scalar>(model: &CascadeModel<F>, test: &Corpus) -> Result<EndToEndReport, Error> {
    let predictions = test
        .posts()
        .iter()
        .map(|p| predict_cascade(model, &p.text))
        .collect::<Result<Vec<_>, _>>()?;
    let report = |level: Level| -> Result<MetricsReport, Error> {
        let gold = test
            .posts()
            .iter()
            .map(|p| match (level, p.label(level)) {
                (_, Some(l)) => Ok(l),
                (Level::A, None) => Err(Error::Corpus(crate::corpus::CorpusError::Unlabeled {
                    id: p.id.clone(),
                    level,
                })),
                (_, None) => Ok(ABSENT),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let predicted: Vec<&str> = predictions.iter().map(|h| h.label(level)).collect();
        let mut classes = level.class_names();
        if level != Level::A {
            classes.push(ABSENT.to_string());
        }
        Ok(build_report(&gold, &predicted, &classes)?)
    };
    Ok(EndToEndReport {
        a: report(Level::A)?,
        b: report(Level::B)?,
        c: report(Level::C)?,
    })
}
