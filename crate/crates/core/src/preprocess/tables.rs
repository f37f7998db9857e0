//! Lookup tables used by the preprocessing stages, with their text formats.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::PreprocessError;

const EMOJI_DATA: &str = include_str!("../../data/emoji.tsv");
const STOPWORD_DATA: &str = include_str!("../../data/stopwords.txt");
const CONTRACTION_DATA: &str = include_str!("../../data/contractions.tsv");
const LEMMA_DATA: &str = include_str!("../../data/lemmas.tsv");

/// Emoji codepoint sequence to phrase, matched longest-first.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, String>", into = "BTreeMap<String, String>")]
pub struct EmojiTable {
    entries: BTreeMap<String, String>,
    // first char -> (sequence, phrase), longest sequence first
    index: HashMap<char, Vec<(Vec<char>, String)>>,
}

impl From<BTreeMap<String, String>> for EmojiTable {
    fn from(entries: BTreeMap<String, String>) -> Self {
        let mut index: HashMap<char, Vec<(Vec<char>, String)>> = HashMap::new();
        for (seq, phrase) in &entries {
            let chars: Vec<char> = seq.chars().collect();
            if let Some(&first) = chars.first() {
                index.entry(first).or_default().push((chars, phrase.clone()));
            }
        }
        for candidates in index.values_mut() {
            candidates.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        }
        EmojiTable { entries, index }
    }
}

impl From<EmojiTable> for BTreeMap<String, String> {
    fn from(table: EmojiTable) -> Self {
        table.entries
    }
}

impl PartialEq for EmojiTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl EmojiTable {
    /// The table shipped with the crate.
    pub fn builtin() -> &'static EmojiTable {
        static TABLE: OnceLock<EmojiTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            EmojiTable::parse(EMOJI_DATA.as_bytes()).expect("shipped emoji table is well formed")
        })
    }

    /// Reads `U+1F44D<TAB>thumbs up` lines; multi-codepoint sequences are
    /// space separated before the tab. Blank lines and `#` comments are skipped.
    pub fn parse<R: BufRead>(input: R) -> Result<Self, PreprocessError> {
        let mut entries = BTreeMap::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| PreprocessError::InvalidTableLine {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (codes, phrase) = line.split_once('\t').ok_or_else(|| bad("missing tab"))?;
            let mut seq = String::new();
            for code in codes.split_whitespace() {
                let hex = code
                    .strip_prefix("U+")
                    .or_else(|| code.strip_prefix("u+"))
                    .ok_or_else(|| bad("codepoint must look like U+XXXX"))?;
                let cp = u32::from_str_radix(hex, 16).map_err(|_| bad("invalid hex codepoint"))?;
                seq.push(char::from_u32(cp).ok_or_else(|| bad("not a unicode scalar value"))?);
            }
            if seq.is_empty() || phrase.trim().is_empty() {
                return Err(bad("empty sequence or phrase"));
            }
            entries.insert(seq, phrase.trim().to_string());
        }
        Ok(EmojiTable::from(entries))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest table entry starting at `chars[0]`: `(length in chars, phrase)`.
    pub(crate) fn match_at(&self, chars: &[char]) -> Option<(usize, &str)> {
        let candidates = self.index.get(chars.first()?)?;
        candidates
            .iter()
            .find(|(seq, _)| chars.starts_with(seq))
            .map(|(seq, phrase)| (seq.len(), phrase.as_str()))
    }
}

/// Contraction expansions, matched case-insensitively on word boundaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, String>", into = "BTreeMap<String, String>")]
pub struct ContractionTable {
    entries: BTreeMap<String, String>,
    pattern: Option<Regex>,
}

impl From<BTreeMap<String, String>> for ContractionTable {
    fn from(entries: BTreeMap<String, String>) -> Self {
        let entries: BTreeMap<String, String> = entries
            .into_iter()
            .map(|(k, v)| (k.to_lowercase(), v))
            .collect();
        let mut keys: Vec<&String> = entries.keys().collect();
        keys.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        let pattern = if keys.is_empty() {
            None
        } else {
            let alternation: Vec<String> = keys.iter().map(|k| regex::escape(k)).collect();
            let src = format!(r"(?i)\b(?:{})\b", alternation.join("|"));
            Some(Regex::new(&src).expect("escaped alternation is a valid regex"))
        };
        ContractionTable { entries, pattern }
    }
}

impl From<ContractionTable> for BTreeMap<String, String> {
    fn from(table: ContractionTable) -> Self {
        table.entries
    }
}

impl PartialEq for ContractionTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl ContractionTable {
    pub fn builtin() -> &'static ContractionTable {
        static TABLE: OnceLock<ContractionTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            ContractionTable::from(
                parse_pairs(CONTRACTION_DATA.as_bytes()).expect("shipped contraction table"),
            )
        })
    }

    pub(crate) fn pattern(&self) -> Option<&Regex> {
        self.pattern.as_ref()
    }

    pub(crate) fn expansion(&self, matched: &str) -> Option<&str> {
        self.entries.get(&matched.to_lowercase()).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}

pub fn builtin_stopwords() -> &'static BTreeSet<String> {
    static LIST: OnceLock<BTreeSet<String>> = OnceLock::new();
    LIST.get_or_init(|| parse_list(STOPWORD_DATA.as_bytes()).expect("shipped stopword list"))
}

pub fn builtin_lemmas() -> &'static BTreeMap<String, String> {
    static TABLE: OnceLock<BTreeMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| parse_pairs(LEMMA_DATA.as_bytes()).expect("shipped lemma table"))
}

/// One entry per line; blank lines and `#` comments skipped.
pub fn parse_list<R: BufRead>(input: R) -> Result<BTreeSet<String>, PreprocessError> {
    let mut out = BTreeSet::new();
    for line in input.lines() {
        let line = line?;
        let entry = line.trim();
        if entry.is_empty() || entry.starts_with('#') {
            continue;
        }
        out.insert(entry.to_string());
    }
    Ok(out)
}

/// `key<TAB>value` per line; blank lines and `#` comments skipped.
pub fn parse_pairs<R: BufRead>(input: R) -> Result<BTreeMap<String, String>, PreprocessError> {
    let mut out = BTreeMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('\t')
            .ok_or_else(|| PreprocessError::InvalidTableLine {
                line: i + 1,
                reason: "expected key<TAB>value".to_string(),
            })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}
