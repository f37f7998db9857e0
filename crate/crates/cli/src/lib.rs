//! Batch driver behind the `offlang` binary.
//!
//! Each subcommand is a plain function over resolved [`Settings`], so tests can
//! run whole experiments without spawning a process.

pub mod config;

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use offlang_core::cascade::{
    evaluate_end_to_end, evaluate_level, predict_cascade, train_cascade, CascadeSpec, LevelSpec,
};
use offlang_core::corpus::{read_olid_file, Corpus, Level, HEADER};
use offlang_core::evaluation::{build_report, MetricsReport};
use offlang_core::models::Hyperparameters;
use offlang_core::preprocess::run_pipeline;
use offlang_core::tuning::{grid_search, CvResult};
use offlang_core::{Cascade, Error as CoreError, Pipeline};

pub use config::{Options, Settings};

pub const REPORT_FILE: &str = "report.txt";
pub const MODEL_FILE: &str = "model.json";
pub const GRID_FILE: &str = "grid_results.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const TOKENS_FILE: &str = "tokens.tsv";
pub const CASCADE_DIR: &str = "cascade";

#[derive(Debug, Parser)]
#[command(name = "offlang", version, about = "Offensive-language classification experiments")]
pub struct Cli {
    /// TOML config file; flags and OFFLANG_* variables override its keys.
    #[arg(long, global = true, env = "OFFLANG_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub options: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the preprocessing pipeline and print `id<TAB>tokens`.
    Preprocess,
    /// Train one model (grid-searching first if `--grid` is given) and evaluate it.
    Train,
    /// Cross-validate a grid (the model's default grid if none is given), then train the best.
    GridSearch,
    /// Score a saved model on a labelled corpus.
    Evaluate,
    /// Label every document in `--input` with a saved model.
    Predict,
    /// Train and evaluate the three-level cascade.
    CascadeTrain,
    /// Label every document in `--input` with a saved cascade.
    CascadePredict,
}

impl Cli {
    pub fn settings(&self) -> Result<Settings> {
        let file = match &self.config {
            Some(path) => Options::from_file(path)?,
            None => Options::default(),
        };
        Settings::resolve(self.options.clone().or(file)).context("invalid configuration")
    }
}

/// Runs `command` on a dedicated pool when a thread count is configured.
pub fn run(command: Command, settings: &Settings) -> Result<()> {
    match settings.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building thread pool")?;
            pool.install(|| dispatch(command, settings))
        }
        None => dispatch(command, settings),
    }
}

fn dispatch(command: Command, settings: &Settings) -> Result<()> {
    match command {
        Command::Preprocess => preprocess_file(settings),
        Command::Train => run_experiment(settings, !settings.grid.is_empty()).map(|_| ()),
        Command::GridSearch => run_experiment(settings, true).map(|_| ()),
        Command::Evaluate => evaluate_model(settings).map(|_| ()),
        Command::Predict => predict_file(settings),
        Command::CascadeTrain => cascade_train(settings),
        Command::CascadePredict => cascade_predict(settings),
    }
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    let path = path
        .as_deref()
        .with_context(|| format!("missing required setting --{flag}"))?;
    if !path.exists() {
        bail!("--{flag} {} does not exist", path.display());
    }
    Ok(path)
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    read_olid_file(path).with_context(|| format!("corpus stage: reading {}", path.display()))
}

/// `(id, text)` pairs from an OLID file, or from plain text with one document
/// per line and 1-based line numbers as ids.
pub fn read_documents(path: &Path) -> Result<Vec<(String, String)>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let first = match lines.next() {
        None => return Ok(Vec::new()),
        Some(line) => line?,
    };
    if first.trim_end_matches('\r') == HEADER {
        let corpus = load_corpus(path)?;
        return Ok(corpus
            .posts()
            .iter()
            .map(|p| (p.id.clone(), p.text.clone()))
            .collect());
    }
    let mut docs = vec![("1".to_string(), first.trim_end_matches('\r').to_string())];
    for (i, line) in lines.enumerate() {
        docs.push(((i + 2).to_string(), line?.trim_end_matches('\r').to_string()));
    }
    Ok(docs)
}

/// Quotes a CSV field when it contains a separator, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes into `out/name` when an output directory is set, else to stdout.
fn output(settings: &Settings, name: &str) -> Result<Box<dyn Write>> {
    match &settings.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn preprocess_file(settings: &Settings) -> Result<()> {
    let input = require(&settings.input, "input")?;
    let docs = read_documents(input)?;
    let tokens: Vec<String> = docs
        .par_iter()
        .map(|(_, text)| run_pipeline(text, &settings.preprocess).join())
        .collect();
    let mut out = output(settings, TOKENS_FILE)?;
    writeln!(out, "id\ttokens")?;
    for ((id, _), t) in docs.iter().zip(&tokens) {
        writeln!(out, "{id}\t{t}")?;
    }
    out.flush()?;
    Ok(())
}

/// Everything a training run produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: MetricsReport,
    pub cv: Option<CvResult>,
    pub hyperparameters: Hyperparameters,
    pub pipeline: Pipeline,
}

/// Train and test views at the configured level: the `--test` corpus when
/// given, otherwise a stratified split of `--train`.
fn train_test(settings: &Settings) -> Result<(Corpus, Corpus)> {
    let train = load_corpus(require(&settings.train, "train")?)?;
    let level = settings.level;
    match &settings.test {
        Some(_) => {
            let test = load_corpus(require(&settings.test, "test")?)?;
            Ok((train.subtask_view(level), test.subtask_view(level)))
        }
        None => {
            let split = train
                .subtask_view(level)
                .split_stratified(settings.split, settings.seed)
                .context("corpus stage: splitting")?;
            Ok((split.train, split.test))
        }
    }
}

fn score(pipeline: &Pipeline, test: &Corpus, level: Level) -> Result<MetricsReport> {
    let gold = test.labels(level).context("evaluation stage")?;
    let predicted = test
        .posts()
        .par_iter()
        .map(|p| pipeline.predict(&p.text))
        .collect::<Result<Vec<_>, _>>()
        .context("evaluation stage: predicting")?;
    build_report(&gold, &predicted, &level.class_names()).context("evaluation stage")
}

/// Preprocess, featurize, optionally grid-search, train and evaluate. With an
/// output directory the report, model and grid table are written there.
pub fn run_experiment(settings: &Settings, search: bool) -> Result<ExperimentOutput> {
    let level = settings.level;
    let (train, test) = train_test(settings)?;
    if train.is_empty() || test.is_empty() {
        bail!("corpus stage: empty train or test view at level {level}");
    }
    let labels = train.labels(level).context("corpus stage")?;
    let docs: Vec<Vec<String>> = train
        .posts()
        .par_iter()
        .map(|p| run_pipeline(&p.text, &settings.preprocess).tokens)
        .collect();
    log::info!("level {level}: {} training and {} test documents", train.len(), test.len());

    let cv = if search {
        let grid = settings.grid()?;
        log::info!("grid search over {} combinations, {} folds", grid.size(), settings.cv.k);
        let result = grid_search::<f64, _, _>(&docs, &labels, &settings.features, &grid, &settings.cv)
            .context("tuning stage")?;
        Some(result)
    } else {
        None
    };
    let hyperparameters = cv
        .as_ref()
        .map_or_else(|| settings.hyperparameters.clone(), |r| r.best_hyperparameters().clone());

    let pipeline = Pipeline::fit_tokens(
        &docs,
        &labels,
        &settings.preprocess,
        &settings.features,
        &hyperparameters,
    )
    .map_err(stage_error)?;
    let report = score(&pipeline, &test, level)?;

    if let Some(dir) = &settings.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_text(dir, REPORT_FILE, &report.to_text())?;
        pipeline
            .save_file(dir.join(MODEL_FILE))
            .context("persistence stage: saving model")?;
        if let Some(result) = &cv {
            write_text(dir, GRID_FILE, &result.to_csv())?;
        }
    } else {
        print!("{}", report.to_text());
    }
    Ok(ExperimentOutput {
        report,
        cv,
        hyperparameters,
        pipeline,
    })
}

fn stage_error(e: CoreError) -> anyhow::Error {
    let stage = match &e {
        CoreError::Corpus(_) => "corpus",
        CoreError::Preprocess(_) => "preprocess",
        CoreError::Features(_) => "features",
        CoreError::Model(_) => "training",
        CoreError::Evaluation(_) => "evaluation",
        CoreError::Tuning(_) => "tuning",
        _ => "pipeline",
    };
    anyhow::Error::new(e).context(format!("{stage} stage"))
}

pub fn evaluate_model(settings: &Settings) -> Result<MetricsReport> {
    let model_path = require(&settings.model_path, "model-path")?;
    let pipeline = Pipeline::load_file(model_path)
        .with_context(|| format!("loading model {}", model_path.display()))?;
    let test = load_corpus(require(&settings.test, "test")?)?.subtask_view(settings.level);
    let report = score(&pipeline, &test, settings.level)?;
    let mut out = output(settings, REPORT_FILE)?;
    out.write_all(report.to_text().as_bytes())?;
    out.flush()?;
    Ok(report)
}

pub fn predict_file(settings: &Settings) -> Result<()> {
    let model_path = require(&settings.model_path, "model-path")?;
    let pipeline = Pipeline::load_file(model_path)
        .with_context(|| format!("loading model {}", model_path.display()))?;
    let docs = read_documents(require(&settings.input, "input")?)?;
    let labels = docs
        .par_iter()
        .map(|(_, text)| pipeline.predict(text))
        .collect::<Result<Vec<_>, _>>()
        .context("prediction stage")?;
    let mut out = output(settings, PREDICTIONS_FILE)?;
    writeln!(out, "id,label")?;
    for ((id, _), label) in docs.iter().zip(&labels) {
        writeln!(out, "{},{}", csv_field(id), label)?;
    }
    out.flush()?;
    Ok(())
}

fn level_file(prefix: &str, level: Level) -> String {
    format!("{prefix}_{}.txt", level.to_string().to_ascii_lowercase())
}

/// Trains all three levels, saves the cascade under `out/cascade` and writes
/// gold-conditioned per-level reports plus end-to-end reports.
pub fn cascade_train(settings: &Settings) -> Result<()> {
    let out = settings.require_out()?.to_path_buf();
    let train = load_corpus(require(&settings.train, "train")?)?;
    let (train, test) = match &settings.test {
        Some(_) => (train, load_corpus(require(&settings.test, "test")?)?),
        None => {
            let split = train
                .split_stratified(settings.split, settings.seed)
                .context("corpus stage: splitting")?;
            (split.train, split.test)
        }
    };
    let spec = CascadeSpec::uniform(
        settings.preprocess.clone(),
        LevelSpec {
            features: settings.features.clone(),
            hyperparameters: settings.hyperparameters.clone(),
        },
    );
    let model: Cascade = train_cascade(&train, &spec).map_err(stage_error)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    model
        .save_dir(out.join(CASCADE_DIR))
        .context("persistence stage: saving cascade")?;

    for level in Level::ALL {
        match evaluate_level(&model, &test, level) {
            Ok(report) => write_text(&out, &level_file("report", level), &report.to_text())?,
            Err(CoreError::EmptyLevelView(l)) => {
                log::warn!("no test posts at level {l}; skipping its report")
            }
            Err(e) => return Err(stage_error(e)),
        }
    }
    let e2e = evaluate_end_to_end(&model, &test).map_err(stage_error)?;
    for (level, report) in [(Level::A, &e2e.a), (Level::B, &e2e.b), (Level::C, &e2e.c)] {
        write_text(&out, &level_file("end_to_end", level), &report.to_text())?;
    }
    Ok(())
}

pub fn cascade_predict(settings: &Settings) -> Result<()> {
    let dir = require(&settings.model_path, "model-path")?;
    let model = Cascade::load_dir(dir).with_context(|| format!("loading cascade {}", dir.display()))?;
    let docs = read_documents(require(&settings.input, "input")?)?;
    let predictions = docs
        .par_iter()
        .map(|(_, text)| predict_cascade(&model, text))
        .collect::<Result<Vec<_>, _>>()
        .context("prediction stage")?;
    let mut out = output(settings, PREDICTIONS_FILE)?;
    writeln!(out, "id,label_a,label_b,label_c")?;
    for ((id, _), h) in docs.iter().zip(&predictions) {
        writeln!(out, "{},{h}", csv_field(id))?;
    }
    out.flush()?;
    Ok(())
}
