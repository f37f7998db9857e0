//! Tweet normalization.
//!
//! Eleven stages, each a pure function of the text and the configuration.
//! The grouped operations [`strip_noise`] and [`tokenize`] bundle the
//! character-level stages in their canonical order; [`run_pipeline`] applies
//! whichever stages the configuration enables, in the configured order.
//!
//! Default order:
//!
//! ```text
//! demojize -> segment hashtags -> expand contractions
//!   -> mentions/URL -> HTML entities -> full-width -> non-ASCII
//!   -> lowercase -> punctuation -> stopwords -> lemmatize
//! ```

mod tables;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tables::{
    builtin_lemmas, builtin_stopwords, parse_list, parse_pairs, ContractionTable, EmojiTable,
};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("table line {line}: {reason}")]
    InvalidTableLine { line: usize, reason: String },
    #[error("stage `{0}` listed more than once")]
    DuplicateStage(Stage),
    #[error("unknown stage `{0}`")]
    UnknownStage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The eleven normalization steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Demojize,
    SegmentHashtags,
    ExpandContractions,
    /// Drops `URL` placeholders and caps runs of `@USER` mentions.
    Mentions,
    HtmlEntities,
    FullWidth,
    NonAscii,
    Lowercase,
    Punctuation,
    Stopwords,
    Lemmatize,
}

impl Stage {
    pub const DEFAULT_ORDER: [Stage; 11] = [
        Stage::Demojize,
        Stage::SegmentHashtags,
        Stage::ExpandContractions,
        Stage::Mentions,
        Stage::HtmlEntities,
        Stage::FullWidth,
        Stage::NonAscii,
        Stage::Lowercase,
        Stage::Punctuation,
        Stage::Stopwords,
        Stage::Lemmatize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Demojize => "demojize",
            Stage::SegmentHashtags => "segment_hashtags",
            Stage::ExpandContractions => "expand_contractions",
            Stage::Mentions => "mentions",
            Stage::HtmlEntities => "html_entities",
            Stage::FullWidth => "full_width",
            Stage::NonAscii => "non_ascii",
            Stage::Lowercase => "lowercase",
            Stage::Punctuation => "punctuation",
            Stage::Stopwords => "stopwords",
            Stage::Lemmatize => "lemmatize",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = PreprocessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::DEFAULT_ORDER
            .iter()
            .copied()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| PreprocessError::UnknownStage(s.to_string()))
    }
}

/// Ordered normalized tokens of one document.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub source_id: String,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSequence {
            tokens,
            source_id: String::new(),
        }
    }

    pub fn with_source(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    stages: Vec<Stage>,
    pub emoji_table: EmojiTable,
    pub contraction_table: ContractionTable,
    pub stopword_list: BTreeSet<String>,
    pub lemma_table: BTreeMap<String, String>,
    pub max_mentions: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stages: Stage::DEFAULT_ORDER.to_vec(),
            emoji_table: EmojiTable::builtin().clone(),
            contraction_table: ContractionTable::builtin().clone(),
            stopword_list: builtin_stopwords().clone(),
            lemma_table: builtin_lemmas().clone(),
            max_mentions: 3,
        }
    }
}

impl PreprocessConfig {
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Replaces the stage list; each stage may appear at most once.
    pub fn with_stages(mut self, stages: Vec<Stage>) -> Result<Self, PreprocessError> {
        let mut seen = Vec::with_capacity(stages.len());
        for &stage in &stages {
            if seen.contains(&stage) {
                return Err(PreprocessError::DuplicateStage(stage));
            }
            seen.push(stage);
        }
        self.stages = stages;
        Ok(self)
    }

    pub fn with_max_mentions(mut self, max_mentions: usize) -> Self {
        self.max_mentions = max_mentions;
        self
    }

    fn apply(&self, stage: Stage, text: String) -> String {
        match stage {
            Stage::Demojize => demojize(&text, &self.emoji_table),
            Stage::SegmentHashtags => segment_hashtags(&text),
            Stage::ExpandContractions => expand_contractions(&text, &self.contraction_table),
            Stage::Mentions => remove_urls_and_cap_mentions(&text, self.max_mentions),
            Stage::HtmlEntities => remove_html_entities(&text),
            Stage::FullWidth => full_width_to_half_width(&text),
            Stage::NonAscii => filter_non_ascii(&text),
            Stage::Lowercase => text.to_lowercase(),
            Stage::Punctuation => remove_punctuation(&text),
            Stage::Stopwords => {
                let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
                filter_stopwords(words, &self.stopword_list).join(" ")
            }
            Stage::Lemmatize => {
                let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
                let lemmas = lemmatize(words, &self.lemma_table);
                // "ons" -> "on" must not leave a stopword for a second pass to remove
                if self.stages.contains(&Stage::Stopwords) {
                    filter_stopwords(lemmas, &self.stopword_list).join(" ")
                } else {
                    lemmas.join(" ")
                }
            }
        }
    }
}

/// Applies the configured stages in order and splits the result on whitespace.
pub fn run_pipeline(text: &str, config: &PreprocessConfig) -> TokenSequence {
    let mut current = text.to_string();
    for &stage in &config.stages {
        current = config.apply(stage, current);
    }
    TokenSequence::new(current.split_whitespace().map(str::to_string).collect())
}

/// Text after every configured stage up to and including `last`.
pub fn run_until(text: &str, config: &PreprocessConfig, last: Stage) -> String {
    let mut current = text.to_string();
    for &stage in &config.stages {
        current = config.apply(stage, current);
        if stage == last {
            break;
        }
    }
    current
}

/// Replaces every emoji sequence found in `table` by its phrase, space delimited.
pub fn demojize(text: &str, table: &EmojiTable) -> String {
    demojize_counted(text, table).0
}

/// As [`demojize`], also returning the number of replaced emoji.
pub fn demojize_counted(text: &str, table: &EmojiTable) -> (String, usize) {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut replaced = 0;
    let mut pad_next = false;
    let mut i = 0;
    while i < chars.len() {
        if let Some((len, phrase)) = table.match_at(&chars[i..]) {
            if out.chars().last().is_some_and(|c| !c.is_whitespace()) {
                out.push(' ');
            }
            out.push_str(phrase);
            pad_next = true;
            replaced += 1;
            i += len;
        } else {
            let c = chars[i];
            if pad_next && !c.is_whitespace() {
                out.push(' ');
            }
            pad_next = false;
            out.push(c);
            i += 1;
        }
    }
    (out, replaced)
}

fn is_mention(token: &str) -> bool {
    token.len() >= 5
        && token.is_char_boundary(5)
        && token[..5].eq_ignore_ascii_case("@user")
        && !token[5..].chars().any(char::is_alphanumeric)
}

fn remove_urls_and_cap_mentions(text: &str, max_mentions: usize) -> String {
    let mut kept: Vec<&str> = Vec::new();
    let mut run = 0;
    for token in text.split_whitespace() {
        if token == "URL" {
            continue;
        }
        if is_mention(token) {
            run += 1;
            if run > max_mentions {
                continue;
            }
        } else {
            run = 0;
        }
        kept.push(token);
    }
    kept.join(" ")
}

fn html_entity_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"&(?:gt|lt|amp|quot|apos|nbsp|#[0-9]+|#[xX][0-9a-fA-F]+);")
            .expect("static regex")
    })
}

fn remove_html_entities(text: &str) -> String {
    html_entity_pattern().replace_all(text, " ").into_owned()
}

fn full_width_to_half_width(text: &str) -> String {
    text.chars()
        .map(|c| match c as u32 {
            0xFF01..=0xFF5E => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
            0x3000 => ' ',
            _ => c,
        })
        .collect()
}

fn filter_non_ascii(text: &str) -> String {
    text.chars().filter(char::is_ascii).collect()
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Removes `URL` placeholders, truncates runs of `@USER` to `max_mentions`,
/// deletes HTML entities, maps full-width ASCII to half-width, drops what is
/// still non-ASCII and collapses whitespace.
pub fn strip_noise(text: &str, max_mentions: usize) -> String {
    let text = remove_urls_and_cap_mentions(text, max_mentions);
    let text = remove_html_entities(&text);
    let text = full_width_to_half_width(&text);
    let text = filter_non_ascii(&text);
    collapse_whitespace(&text)
}

fn hashtag_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#([A-Za-z0-9_]+)").expect("static regex"))
}

/// Splits a hashtag body at lower→upper and letter→digit transitions.
pub fn split_camel_case(tag: &str) -> Vec<String> {
    let mut words = Vec::new();
    for part in tag.split('_').filter(|p| !p.is_empty()) {
        let mut current = String::new();
        let mut prev: Option<char> = None;
        for c in part.chars() {
            if let Some(p) = prev {
                let boundary = (p.is_lowercase() && c.is_uppercase())
                    || (p.is_alphabetic() && c.is_ascii_digit());
                if boundary && !current.is_empty() {
                    words.push(std::mem::take(&mut current));
                }
            }
            current.push(c);
            prev = Some(c);
        }
        if !current.is_empty() {
            words.push(current);
        }
    }
    words
}

/// `#BigBoss2` becomes `Big Boss 2`.
pub fn segment_hashtags(text: &str) -> String {
    hashtag_pattern()
        .replace_all(text, |caps: &Captures<'_>| split_camel_case(&caps[1]).join(" "))
        .into_owned()
}

/// Expands contractions found in `table`, then deletes leftover apostrophes.
pub fn expand_contractions(text: &str, table: &ContractionTable) -> String {
    let normalized: String = text
        .chars()
        .map(|c| match c {
            '\u{2019}' | '\u{2018}' | '\u{02BC}' => '\'',
            other => other,
        })
        .collect();
    let expanded = match table.pattern() {
        Some(re) => re
            .replace_all(&normalized, |caps: &Captures<'_>| {
                table
                    .expansion(&caps[0])
                    .map_or_else(|| caps[0].to_string(), str::to_string)
            })
            .into_owned(),
        None => normalized,
    };
    expanded.replace('\'', "")
}

fn remove_punctuation(text: &str) -> String {
    text.split_whitespace()
        .map(|w| w.chars().filter(char::is_ascii_alphanumeric).collect::<String>())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercases, splits on whitespace and keeps only `[a-z0-9]` in each token.
pub fn tokenize(text: &str) -> TokenSequence {
    let lowered = text.to_lowercase();
    TokenSequence::new(
        lowered
            .split_whitespace()
            .map(|w| {
                w.chars()
                    .filter(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
                    .collect::<String>()
            })
            .filter(|w| !w.is_empty())
            .collect(),
    )
}

pub fn filter_stopwords(tokens: Vec<String>, stopwords: &BTreeSet<String>) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !stopwords.contains(t))
        .collect()
}

fn has_vowel(stem: &str) -> bool {
    stem.chars().any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y'))
}

fn suffix_step(word: &str) -> Option<String> {
    if let Some(stem) = word.strip_suffix("ies") {
        if !stem.is_empty() {
            return Some(format!("{stem}y"));
        }
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return Some(format!("{stem}ss"));
    }
    if word.len() > 2 && word.ends_with('s') && !word.ends_with("ss") && !word.ends_with("us") {
        return Some(word[..word.len() - 1].to_string());
    }
    if let Some(stem) = word.strip_suffix("ing") {
        if stem.len() >= 2 && has_vowel(stem) {
            return Some(stem.to_string());
        }
    }
    if let Some(stem) = word.strip_suffix("ed") {
        if stem.len() >= 2 && has_vowel(stem) && !word.ends_with("eed") {
            return Some(stem.to_string());
        }
    }
    None
}

/// Base form of one lowercase word: irregular table first, then suffix rules,
/// repeated until nothing applies.
pub fn lemmatize_word(word: &str, table: &BTreeMap<String, String>) -> String {
    let mut current = word.to_string();
    // every step shortens the word or reaches a table value, bounding the loop
    for _ in 0..=word.len() {
        if let Some(base) = table.get(&current) {
            if *base == current {
                break;
            }
            current = base.clone();
            continue;
        }
        match suffix_step(&current) {
            Some(next) => current = next,
            None => break,
        }
    }
    current
}

pub fn lemmatize(tokens: Vec<String>, table: &BTreeMap<String, String>) -> Vec<String> {
    tokens
        .into_iter()
        .map(|t| lemmatize_word(&t, table))
        .collect()
}
