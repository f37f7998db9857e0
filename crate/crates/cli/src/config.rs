//! Experiment settings: config file, environment and flags merged into one value.
//!
//! Every key of the TOML config file has a command-line flag of the same name
//! and an `OFFLANG_*` environment variable. Precedence is flag, then
//! environment, then file, then built-in default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use offlang_core::corpus::Level;
use offlang_core::features::{FeatureConfig, FeatureMode, Word2VecConfig, Word2VecMode};
use offlang_core::models::{Hyperparameters, ModelKind, ParamValue};
use offlang_core::preprocess::{PreprocessConfig, Stage};
use offlang_core::tuning::{CvConfig, Grid, Metric};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SPLIT: f64 = 0.8;

/// Raw, possibly partial settings as they come from one source.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Options {
    /// Training corpus in OLID TSV format.
    #[arg(global = true, long, env = "OFFLANG_TRAIN")]
    pub train: Option<PathBuf>,
    /// Held-out corpus; without it the training corpus is split.
    #[arg(global = true, long, env = "OFFLANG_TEST")]
    pub test: Option<PathBuf>,
    /// Input for `preprocess` and the predict commands: OLID TSV or one text per line.
    #[arg(global = true, long, env = "OFFLANG_INPUT")]
    pub input: Option<PathBuf>,
    /// Saved model file, or cascade directory.
    #[arg(global = true, long, env = "OFFLANG_MODEL_PATH")]
    pub model_path: Option<PathBuf>,
    /// Output directory.
    #[arg(global = true, long, env = "OFFLANG_OUT")]
    pub out: Option<PathBuf>,
    /// Subtask: A, B or C.
    #[arg(global = true, long, env = "OFFLANG_LEVEL")]
    pub level: Option<Level>,
    /// Train share when splitting a single corpus.
    #[arg(global = true, long, env = "OFFLANG_SPLIT")]
    pub split: Option<f64>,

    /// Comma-separated preprocessing stages, in order.
    #[arg(global = true, long, env = "OFFLANG_STAGES")]
    pub stages: Option<String>,
    #[arg(global = true, long, env = "OFFLANG_MAX_MENTIONS")]
    pub max_mentions: Option<usize>,

    /// tf, binary or embed_average.
    #[arg(global = true, long, env = "OFFLANG_FEATURE_MODE")]
    pub feature_mode: Option<FeatureMode>,
    #[arg(global = true, long, env = "OFFLANG_NGRAM_MIN")]
    pub ngram_min: Option<usize>,
    #[arg(global = true, long, env = "OFFLANG_NGRAM_MAX")]
    pub ngram_max: Option<usize>,
    #[arg(global = true, long, env = "OFFLANG_MIN_FREQUENCY")]
    pub min_frequency: Option<usize>,
    #[arg(global = true, long, env = "OFFLANG_EMBEDDING_DIM")]
    pub embedding_dim: Option<usize>,
    /// cbow or skip_gram.
    #[arg(global = true, long, env = "OFFLANG_W2V_MODE")]
    pub w2v_mode: Option<Word2VecMode>,
    #[arg(global = true, long, env = "OFFLANG_W2V_WINDOW")]
    pub w2v_window: Option<usize>,
    #[arg(global = true, long, env = "OFFLANG_W2V_EPOCHS")]
    pub w2v_epochs: Option<usize>,
    #[arg(global = true, long, env = "OFFLANG_W2V_LEARNING_RATE")]
    pub w2v_learning_rate: Option<f64>,

    /// nb, knn, logreg, svc, tree or forest.
    #[arg(global = true, long, env = "OFFLANG_MODEL")]
    pub model: Option<ModelKind>,
    /// Fixed hyperparameter `name=value`; repeatable.
    #[arg(global = true, long = "params", env = "OFFLANG_PARAMS", value_delimiter = ';')]
    pub params: Option<Vec<String>>,
    /// Grid axis `name=v1,v2,...`; repeatable.
    #[arg(global = true, long = "grid", env = "OFFLANG_GRID", value_delimiter = ';')]
    pub grid: Option<Vec<String>>,

    /// Cross-validation folds.
    #[arg(global = true, long, env = "OFFLANG_FOLDS")]
    pub folds: Option<usize>,
    /// accuracy, f1_macro or mcc.
    #[arg(global = true, long, env = "OFFLANG_METRIC")]
    pub metric: Option<Metric>,
    #[arg(global = true, long, env = "OFFLANG_STRATIFIED")]
    pub stratified: Option<bool>,

    /// Master seed for every random choice.
    #[arg(global = true, long, env = "OFFLANG_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(global = true, long, env = "OFFLANG_THREADS")]
    pub threads: Option<usize>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($field:ident),+ $(,)?) => {
        Options { $($field: $hi.$field.or($lo.$field)),+ }
    };
}

impl Options {
    /// Fields set in `self` win over `lower`.
    pub fn or(self, lower: Options) -> Options {
        overlay!(
            self, lower, train, test, input, model_path, out, level, split, stages,
            max_mentions, feature_mode, ngram_min, ngram_max, min_frequency, embedding_dim,
            w2v_mode, w2v_window, w2v_epochs, w2v_learning_rate, model, params, grid, folds,
            metric, stratified, seed, threads,
        )
    }

    pub fn from_toml(text: &str) -> Result<Options> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Options> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Options::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub level: Level,
    pub split: f64,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub hyperparameters: Hyperparameters,
    /// Grid axes; empty means "use the model's default grid" in grid search.
    pub grid: BTreeMap<String, Vec<ParamValue>>,
    pub cv: CvConfig,
    pub seed: u64,
    pub threads: Option<usize>,
}

fn parse_assignment(entry: &str) -> Result<(String, &str)> {
    let (name, value) = entry
        .split_once('=')
        .with_context(|| format!("expected name=value, got `{entry}`"))?;
    Ok((name.trim().to_string(), value.trim()))
}

impl Settings {
    pub fn resolve(o: Options) -> Result<Settings> {
        let seed = o.seed.unwrap_or(DEFAULT_SEED);

        let mut preprocess = PreprocessConfig::default();
        if let Some(list) = &o.stages {
            let stages = list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<Stage>())
                .collect::<Result<Vec<_>, _>>()?;
            preprocess = preprocess.with_stages(stages)?;
        }
        if let Some(m) = o.max_mentions {
            preprocess = preprocess.with_max_mentions(m);
        }

        let defaults = FeatureConfig::default();
        let w2v = Word2VecConfig::default();
        let features = FeatureConfig {
            mode: o.feature_mode.unwrap_or(defaults.mode),
            ngram_range: (
                o.ngram_min.unwrap_or(defaults.ngram_range.0),
                o.ngram_max.unwrap_or(defaults.ngram_range.1),
            ),
            min_frequency: o.min_frequency.unwrap_or(defaults.min_frequency),
            word2vec: Word2VecConfig {
                mode: o.w2v_mode.unwrap_or(w2v.mode),
                dimension: o.embedding_dim.unwrap_or(w2v.dimension),
                window: o.w2v_window.unwrap_or(w2v.window),
                epochs: o.w2v_epochs.unwrap_or(w2v.epochs),
                learning_rate: o.w2v_learning_rate.unwrap_or(w2v.learning_rate),
                seed,
            },
        };

        let kind = o.model.unwrap_or(ModelKind::Nb);
        let mut hyperparameters = Hyperparameters::default_for(kind);
        let names = Hyperparameters::parameter_names(kind);
        if names.contains(&"seed") {
            hyperparameters.set("seed", &ParamValue::Int(seed as i64))?;
        }
        for entry in o.params.iter().flatten() {
            let (name, value) = parse_assignment(entry)?;
            hyperparameters.set(&name, &ParamValue::parse(value))?;
        }

        let fixed: Vec<String> = o
            .params
            .iter()
            .flatten()
            .map(|e| parse_assignment(e).map(|(n, _)| n))
            .collect::<Result<_>>()?;
        let mut grid = BTreeMap::new();
        for entry in o.grid.iter().flatten() {
            let (name, values) = parse_assignment(entry)?;
            let values: Vec<ParamValue> = values.split(',').map(ParamValue::parse).collect();
            if fixed.contains(&name) {
                bail!("`{name}` is both a fixed parameter and a grid axis");
            }
            if grid.insert(name.clone(), values).is_some() {
                bail!("grid axis `{name}` given twice");
            }
        }
        // validate eagerly so config errors surface before any work
        Grid::new(hyperparameters.clone(), grid.clone())?;

        let split = o.split.unwrap_or(DEFAULT_SPLIT);
        if !(split > 0.0 && split < 1.0) {
            bail!("split must lie strictly between 0 and 1, got {split}");
        }
        let cv = CvConfig {
            k: o.folds.unwrap_or(3),
            metric: o.metric.unwrap_or_default(),
            seed,
            stratified: o.stratified.unwrap_or(true),
        };
        if let Some(0) = o.threads {
            bail!("threads must be at least 1");
        }

        Ok(Settings {
            train: o.train,
            test: o.test,
            input: o.input,
            model_path: o.model_path,
            out: o.out,
            level: o.level.unwrap_or(Level::A),
            split,
            preprocess,
            features,
            hyperparameters,
            grid,
            cv,
            seed,
            threads: o.threads,
        })
    }

    /// The configured grid, or the model's default grid when none was given.
    pub fn grid(&self) -> Result<Grid> {
        if self.grid.is_empty() {
            let default = Grid::default_for(self.hyperparameters.kind());
            Ok(Grid::new(self.hyperparameters.clone(), default.params().clone())?)
        } else {
            Ok(Grid::new(self.hyperparameters.clone(), self.grid.clone())?)
        }
    }

    pub fn require_out(&self) -> Result<&Path> {
        self.out.as_deref().context("no output directory (--out)")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_fill_gaps_only() {
        let file = Options::from_toml(
            "model = \"svc\"\nseed = 7\nparams = [\"c=0.1\"]\nlevel = \"B\"\nfeature-mode = \"binary\"\n",
        )
        .unwrap();
        let flags = Options {
            seed: Some(9),
            ..Default::default()
        };
        let s = Settings::resolve(flags.or(file)).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.level, Level::B);
        assert_eq!(s.features.mode, FeatureMode::Binary);
        match s.hyperparameters {
            Hyperparameters::Svc(p) => assert_eq!((p.c, p.seed), (0.1, 9)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Options::from_toml("modle = \"svc\"").is_err());
        let bad = Options {
            params: Some(vec!["k=0".into()]),
            model: Some(ModelKind::Knn),
            ..Default::default()
        };
        assert!(Settings::resolve(bad).is_err());
        let bad_grid = Options {
            grid: Some(vec!["bogus=1,2".into()]),
            ..Default::default()
        };
        assert!(Settings::resolve(bad_grid).is_err());
        let both = Options {
            model: Some(ModelKind::Svc),
            params: Some(vec!["c=1".into()]),
            grid: Some(vec!["c=0.1,1".into()]),
            ..Default::default()
        };
        assert!(Settings::resolve(both).is_err());
    }

    #[test]
    fn default_grid_keeps_fixed_params() {
        let s = Settings::resolve(Options {
            model: Some(ModelKind::Knn),
            params: Some(vec!["metric=manhattan".into()]),
            ..Default::default()
        })
        .unwrap();
        let grid = s.grid().unwrap();
        assert_eq!(grid.size(), 8);
        assert!(grid
            .combinations()
            .iter()
            .all(|c| matches!(&c.hyperparameters, Hyperparameters::Knn(p) if p.metric == offlang_core::models::Metric::Manhattan)));
    }
}
