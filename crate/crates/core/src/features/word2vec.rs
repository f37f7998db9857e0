//! Minimal word2vec with a full-softmax output layer.
//!
//! CBOW predicts the center word from the mean of its context input vectors;
//! skip-gram predicts every context word from the center word's input vector.
//! The full softmax keeps every gradient exact, so a single training step can
//! be checked against finite differences.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureError, Vocabulary};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Word2VecMode {
    Cbow,
    SkipGram,
}

impl std::str::FromStr for Word2VecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cbow" => Ok(Word2VecMode::Cbow),
            "skip_gram" | "skipgram" | "skip-gram" => Ok(Word2VecMode::SkipGram),
            other => Err(format!("unknown word2vec mode `{other}` (cbow, skip_gram)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Word2VecConfig {
    pub mode: Word2VecMode,
    pub dimension: usize,
    pub window: usize,
    pub epochs: usize,
    /// Initial rate; decays linearly towards zero over the run.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Word2VecConfig {
    fn default() -> Self {
        Word2VecConfig {
            mode: Word2VecMode::Cbow,
            dimension: 50,
            window: 2,
            epochs: 5,
            learning_rate: 0.025,
            seed: 42,
        }
    }
}

/// Input and output vector tables, both `|V| x d`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EmbeddingMatrix<F: Scalar> {
    rows: usize,
    dimension: usize,
    input: Vec<F>,
    output: Vec<F>,
}

impl<F: Scalar> EmbeddingMatrix<F> {
    pub fn zeros(rows: usize, dimension: usize) -> Self {
        EmbeddingMatrix {
            rows,
            dimension,
            input: vec![F::zero(); rows * dimension],
            output: vec![F::zero(); rows * dimension],
        }
    }

    /// Input vectors uniform in `(-0.5/d, 0.5/d)`, output vectors zero.
    pub fn initialize<R: Rng>(rows: usize, dimension: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, dimension);
        let half = 0.5 / dimension as f64;
        for v in &mut m.input {
            *v = F::lit(rng.gen_range(-half..half));
        }
        m
    }

    /// Builds from explicit input rows; output vectors are zero.
    pub fn from_input_rows(rows: Vec<Vec<F>>) -> Self {
        let dimension = rows.first().map_or(0, Vec::len);
        let n = rows.len();
        let input: Vec<F> = rows.into_iter().flatten().collect();
        assert_eq!(input.len(), n * dimension, "ragged embedding rows");
        EmbeddingMatrix {
            rows: n,
            dimension,
            input,
            output: vec![F::zero(); n * dimension],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn input_row(&self, i: usize) -> &[F] {
        &self.input[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn output_row(&self, i: usize) -> &[F] {
        &self.output[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn input_mut(&mut self) -> &mut [F] {
        &mut self.input
    }

    pub fn output_mut(&mut self) -> &mut [F] {
        &mut self.output
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|v| v.is_finite())
    }

    /// Cosine similarity of two input vectors; 0 when either is zero.
    pub fn cosine(&self, a: usize, b: usize) -> F {
        let (x, y) = (self.input_row(a), self.input_row(b));
        let dot: F = x.iter().zip(y).map(|(&p, &q)| p * q).sum();
        let nx: F = x.iter().map(|&p| p * p).sum::<F>().sqrt();
        let ny: F = y.iter().map(|&q| q * q).sum::<F>().sqrt();
        if nx == F::zero() || ny == F::zero() {
            F::zero()
        } else {
            dot / (nx * ny)
        }
    }

    /// Row with the highest cosine similarity to `row`, excluding itself.
    pub fn nearest(&self, row: usize) -> Option<usize> {
        (0..self.rows)
            .filter(|&j| j != row)
            .fold(None, |best: Option<(usize, F)>, j| {
                let s = self.cosine(row, j);
                match best {
                    Some((_, bs)) if bs >= s => best,
                    _ => Some((j, s)),
                }
            })
            .map(|(j, _)| j)
    }

    /// Output-layer scores `W_out h` followed by a stable softmax.
    fn softmax_of(&self, hidden: &[F]) -> Vec<F> {
        let mut scores: Vec<F> = (0..self.rows)
            .map(|j| {
                self.output_row(j)
                    .iter()
                    .zip(hidden)
                    .map(|(&w, &h)| w * h)
                    .sum()
            })
            .collect();
        let max = scores.iter().copied().fold(F::neg_infinity(), F::max);
        let mut total = F::zero();
        for s in &mut scores {
            *s = (*s - max).exp();
            total += *s;
        }
        for s in &mut scores {
            *s /= total;
        }
        scores
    }

    fn mean_input(&self, context: &[usize]) -> Vec<F> {
        let mut h = vec![F::zero(); self.dimension];
        for &c in context {
            for (acc, &v) in h.iter_mut().zip(self.input_row(c)) {
                *acc += v;
            }
        }
        let n = F::from_count(context.len());
        h.iter_mut().for_each(|v| *v /= n);
        h
    }

    fn apply(&mut self, grad: &Gradient<F>, learning_rate: F) {
        let d = self.dimension;
        for (&row, g) in &grad.input_rows {
            for (w, &gv) in self.input[row * d..(row + 1) * d].iter_mut().zip(g) {
                *w -= learning_rate * gv;
            }
        }
        for (w, &gv) in self.output.iter_mut().zip(&grad.output) {
            *w -= learning_rate * gv;
        }
    }
}

/// Gradient of one training example's loss.
#[derive(Debug, Clone)]
pub struct Gradient<F: Scalar> {
    pub loss: F,
    /// Input-table rows that receive gradient, keyed by row.
    pub input_rows: BTreeMap<usize, Vec<F>>,
    /// Dense gradient of the whole output table, row-major.
    pub output: Vec<F>,
}

/// Gradient of the softmax cross-entropy for a hidden vector against the
/// target multiset `targets` (one term per target occurrence).
fn softmax_gradient<F: Scalar>(
    emb: &EmbeddingMatrix<F>,
    hidden: &[F],
    targets: &[usize],
) -> (F, Vec<F>, Vec<F>) {
    let d = emb.dimension;
    let probs = emb.softmax_of(hidden);
    let reps = F::from_count(targets.len());
    let mut loss = F::zero();
    // error signal e_j = reps * p_j - #{targets == j}
    let mut err: Vec<F> = probs.iter().map(|&p| reps * p).collect();
    for &t in targets {
        loss -= probs[t].max(F::min_positive_value()).ln();
        err[t] -= F::one();
    }
    let mut grad_out = vec![F::zero(); emb.rows * d];
    let mut grad_hidden = vec![F::zero(); d];
    for (j, &e) in err.iter().enumerate() {
        if e == F::zero() {
            continue;
        }
        let out_row = emb.output_row(j);
        for k in 0..d {
            grad_out[j * d + k] = e * hidden[k];
            grad_hidden[k] += e * out_row[k];
        }
    }
    (loss, grad_out, grad_hidden)
}

/// Loss `-log p(center | mean(context))`.
pub fn cbow_loss<F: Scalar>(emb: &EmbeddingMatrix<F>, context: &[usize], center: usize) -> F {
    let h = emb.mean_input(context);
    let p = emb.softmax_of(&h);
    -p[center].max(F::min_positive_value()).ln()
}

pub fn cbow_gradient<F: Scalar>(
    emb: &EmbeddingMatrix<F>,
    context: &[usize],
    center: usize,
) -> Gradient<F> {
    let h = emb.mean_input(context);
    let (loss, output, grad_h) = softmax_gradient(emb, &h, &[center]);
    let n = F::from_count(context.len());
    let mut input_rows: BTreeMap<usize, Vec<F>> = BTreeMap::new();
    for &c in context {
        let row = input_rows
            .entry(c)
            .or_insert_with(|| vec![F::zero(); emb.dimension]);
        for (acc, &g) in row.iter_mut().zip(&grad_h) {
            *acc += g / n;
        }
    }
    Gradient {
        loss,
        input_rows,
        output,
    }
}

/// Loss `-sum_o log p(o | center)` over the context words.
pub fn skipgram_loss<F: Scalar>(emb: &EmbeddingMatrix<F>, center: usize, context: &[usize]) -> F {
    let p = emb.softmax_of(emb.input_row(center));
    context
        .iter()
        .map(|&o| -p[o].max(F::min_positive_value()).ln())
        .sum()
}

pub fn skipgram_gradient<F: Scalar>(
    emb: &EmbeddingMatrix<F>,
    center: usize,
    context: &[usize],
) -> Gradient<F> {
    let h = emb.input_row(center).to_vec();
    let (loss, output, grad_h) = softmax_gradient(emb, &h, context);
    let mut input_rows = BTreeMap::new();
    input_rows.insert(center, grad_h);
    Gradient {
        loss,
        input_rows,
        output,
    }
}

/// One SGD step on a CBOW example; returns the loss before the update.
pub fn cbow_step<F: Scalar>(
    emb: &mut EmbeddingMatrix<F>,
    context: &[usize],
    center: usize,
    learning_rate: F,
) -> F {
    let g = cbow_gradient(emb, context, center);
    emb.apply(&g, learning_rate);
    g.loss
}

/// One SGD step on a skip-gram example; returns the loss before the update.
pub fn skipgram_step<F: Scalar>(
    emb: &mut EmbeddingMatrix<F>,
    center: usize,
    context: &[usize],
    learning_rate: F,
) -> F {
    let g = skipgram_gradient(emb, center, context);
    emb.apply(&g, learning_rate);
    g.loss
}

#[derive(Debug, Clone)]
pub struct Word2VecTraining<F: Scalar> {
    pub embeddings: EmbeddingMatrix<F>,
    /// Mean example loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains embeddings for `vocab` over `docs`; out-of-vocabulary tokens are skipped.
pub fn train_word2vec<F: Scalar, S: AsRef<str>>(
    docs: &[Vec<S>],
    vocab: &Vocabulary,
    config: &Word2VecConfig,
) -> Result<Word2VecTraining<F>, FeatureError> {
    if vocab.len() < 2 {
        return Err(FeatureError::VocabularyTooSmall(vocab.len()));
    }
    if config.dimension == 0 {
        return Err(FeatureError::InvalidConfig("embedding dimension must be >= 1".into()));
    }
    if config.window == 0 {
        return Err(FeatureError::InvalidConfig("window must be >= 1".into()));
    }

    let encoded: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().filter_map(|t| vocab.get(t.as_ref())).collect::<Vec<_>>())
        .filter(|d| d.len() >= 2)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut emb = EmbeddingMatrix::<F>::initialize(vocab.len(), config.dimension, &mut rng);

    let steps_per_epoch: usize = encoded.iter().map(Vec::len).sum();
    let total_steps = (steps_per_epoch * config.epochs).max(1);
    let mut step = 0usize;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..encoded.len()).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut examples = 0usize;
        for &doc_idx in &order {
            let doc = &encoded[doc_idx];
            for pos in 0..doc.len() {
                let lo = pos.saturating_sub(config.window);
                let hi = (pos + config.window + 1).min(doc.len());
                let context: Vec<usize> = (lo..hi).filter(|&j| j != pos).map(|j| doc[j]).collect();
                let progress = step as f64 / total_steps as f64;
                let lr = F::lit(config.learning_rate * (1.0 - progress).max(1e-4));
                let loss = match config.mode {
                    Word2VecMode::Cbow => cbow_step(&mut emb, &context, doc[pos], lr),
                    Word2VecMode::SkipGram => skipgram_step(&mut emb, doc[pos], &context, lr),
                };
                loss_sum += loss.to_f64_lossy();
                examples += 1;
                step += 1;
            }
        }
        let mean = if examples > 0 { loss_sum / examples as f64 } else { 0.0 };
        log::debug!("word2vec epoch {}: mean loss {mean:.6}", epoch + 1);
        epoch_losses.push(mean);
    }

    Ok(Word2VecTraining {
        embeddings: emb,
        epoch_losses,
    })
}

/// Mean of the input vectors of in-vocabulary tokens; zero vector if there are none.
pub fn embed_average<F: Scalar, S: AsRef<str>>(
    tokens: &[S],
    embeddings: &EmbeddingMatrix<F>,
    vocab: &Vocabulary,
) -> Vec<F> {
    let ids: Vec<usize> = tokens.iter().filter_map(|t| vocab.get(t.as_ref())).collect();
    if ids.is_empty() {
        return vec![F::zero(); embeddings.dimension()];
    }
    embeddings.mean_input(&ids)
}

/// Decimal text with 6 significant digits, trailing zeros trimmed.
pub fn format_significant(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".into() } else { format!("{v}") };
    }
    let sci = format!("{v:.5e}");
    let exp: i32 = sci[sci.find('e').map_or(0, |i| i + 1)..].parse().unwrap_or(0);
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..6).contains(&exp) {
        trim(format!("{:.*}", (5 - exp).max(0) as usize, v))
    } else {
        let (mantissa, e) = sci.split_at(sci.find('e').unwrap_or(sci.len()));
        format!("{}{}", trim(mantissa.to_string()), e)
    }
}

/// Writes `|V| d` then `term v1 .. vd` per line (input vectors only).
pub fn save_word_vectors<F: Scalar, W: Write>(
    mut out: W,
    vocab: &Vocabulary,
    embeddings: &EmbeddingMatrix<F>,
) -> std::io::Result<()> {
    writeln!(out, "{} {}", vocab.len(), embeddings.dimension())?;
    for (i, term) in vocab.terms().iter().enumerate() {
        write!(out, "{term}")?;
        for v in embeddings.input_row(i) {
            write!(out, " {}", format_significant(v.to_f64_lossy()))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads the format written by [`save_word_vectors`]; output vectors come back zero.
pub fn load_word_vectors<F: Scalar, R: BufRead>(
    input: R,
) -> Result<(Vocabulary, EmbeddingMatrix<F>), FeatureError> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| FeatureError::Format("missing header".into()))??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| FeatureError::Format(format!("bad header `{header}`"))))
        .collect::<Result<_, _>>()?;
    let [n, d] = dims[..] else {
        return Err(FeatureError::Format(format!("bad header `{header}`")));
    };
    let mut terms = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let term = parts.next().unwrap_or_default().to_string();
        let row: Vec<F> = parts
            .map(|t| {
                t.parse::<f64>()
                    .map(F::lit)
                    .map_err(|_| FeatureError::Format(format!("line {}: bad value `{t}`", i + 2)))
            })
            .collect::<Result<_, _>>()?;
        if row.len() != d {
            return Err(FeatureError::Format(format!(
                "line {}: expected {d} values, found {}",
                i + 2,
                row.len()
            )));
        }
        terms.push(term);
        rows.push(row);
    }
    if terms.len() != n {
        return Err(FeatureError::Format(format!(
            "header promises {n} rows, found {}",
            terms.len()
        )));
    }
    let mut m = EmbeddingMatrix::from_input_rows(rows);
    m.dimension = d;
    Ok((Vocabulary::from_terms(terms, 1), m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(terms: &[&str]) -> Vocabulary {
        Vocabulary::from_terms(terms.iter().map(|s| s.to_string()).collect(), 1)
    }

    #[test]
    fn shapes() {
        let terms: Vec<String> = (0..50).map(|i| format!("w{i}")).collect();
        let v = Vocabulary::from_terms(terms.clone(), 1);
        let docs = vec![terms];
        let cfg = Word2VecConfig {
            dimension: 16,
            epochs: 1,
            ..Default::default()
        };
        let out = train_word2vec::<f64, _>(&docs, &v, &cfg).unwrap();
        assert_eq!(out.embeddings.rows(), 50);
        assert_eq!(out.embeddings.dimension(), 16);
        assert!(out.embeddings.is_finite());
    }

    #[test]
    fn too_small_vocabulary() {
        let docs = vec![vec!["a", "a"]];
        let r = train_word2vec::<f64, _>(&docs, &vocab(&["a"]), &Word2VecConfig::default());
        assert!(matches!(r, Err(FeatureError::VocabularyTooSmall(1))));
    }

    #[test]
    fn average() {
        let v = vocab(&["a", "b"]);
        let m = EmbeddingMatrix::<f64>::from_input_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(embed_average(&["a", "b"], &m, &v), vec![0.5, 0.5]);
        assert_eq!(embed_average(&["b"], &m, &v), vec![0.0, 1.0]);
        assert_eq!(embed_average(&["zzz"], &m, &v), vec![0.0, 0.0]);
    }

    #[test]
    fn deterministic_for_seed() {
        let docs = vec![vec!["a", "b", "c", "a", "b"], vec!["c", "b", "a"]];
        let v = vocab(&["a", "b", "c"]);
        let cfg = Word2VecConfig {
            dimension: 4,
            mode: Word2VecMode::SkipGram,
            ..Default::default()
        };
        let x = train_word2vec::<f64, _>(&docs, &v, &cfg).unwrap();
        let y = train_word2vec::<f64, _>(&docs, &v, &cfg).unwrap();
        assert_eq!(x.embeddings, y.embeddings);
        assert_eq!(x.epoch_losses, y.epoch_losses);
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.0), "0");
        assert_eq!(format_significant(1.0), "1");
        assert_eq!(format_significant(0.123456789), "0.123457");
        assert_eq!(format_significant(-12.5), "-12.5");
        assert_eq!(format_significant(9.9999996), "10");
        assert_eq!(format_significant(1.5e-7), "1.5e-7");
        assert_eq!(format_significant(123456789.0), "1.23457e8");
    }

    #[test]
    fn word_vector_file_round_trip() {
        let v = vocab(&["cat", "dog"]);
        let m = EmbeddingMatrix::<f64>::from_input_rows(vec![vec![0.25, -1.0], vec![3.0, 1e-3]]);
        let mut buf = Vec::new();
        save_word_vectors(&mut buf, &v, &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "2 2\ncat 0.25 -1\ndog 3 0.001\n");
        let (v2, m2) = load_word_vectors::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(v2.terms(), v.terms());
        assert_eq!(m2.input_row(1), m.input_row(1));
        assert!(load_word_vectors::<f64, _>("2 2\ncat 1\n".as_bytes()).is_err());
    }
}
