//! OLID-format corpora: parsing, per-subtask views and stratified splits.
//!
//! The on-disk layout is tab separated with a header row:
//!
//! ```text
//! id	tweet	subtask_a	subtask_b	subtask_c
//! 1	@USER she should ask a few native Americans	OFF	UNT	NULL
//! ```
//!
//! The literal `NULL` marks an absent label.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HEADER: &str = "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c";
const NULL: &str = "NULL";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: expected 5 tab-separated columns, found {found}")]
    MalformedRow { line: usize, found: usize },
    #[error("line {line}: empty post id")]
    EmptyId { line: usize },
    #[error("line {line}: duplicate post id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown label `{token}` in column {column}")]
    UnknownLabel {
        line: usize,
        column: &'static str,
        token: String,
    },
    #[error("line {line}: {reason}")]
    HierarchyViolation { line: usize, reason: String },
    #[error("missing header row")]
    MissingHeader,
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error("post `{id}` has no label at level {level}")]
    Unlabeled { id: String, level: Level },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Subtask A: is the post offensive?
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelA {
    #[serde(rename = "OFF")]
    Off,
    #[serde(rename = "NOT")]
    Not,
}

/// Subtask B: is the offense targeted?
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelB {
    #[serde(rename = "TIN")]
    Tin,
    #[serde(rename = "UNT")]
    Unt,
}

/// Subtask C: who is targeted?
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelC {
    #[serde(rename = "IND")]
    Ind,
    #[serde(rename = "GRP")]
    Grp,
    #[serde(rename = "OTH")]
    Oth,
}

macro_rules! label_strings {
    ($ty:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($ty::$variant => $s),+
                }
            }
        }

        impl FromStr for $ty {
            type Err = ();

            fn from_str(s: &str) -> Result<Self, ()> {
                match s {
                    $($s => Ok($ty::$variant),)+
                    _ => Err(()),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

label_strings!(LabelA { Off => "OFF", Not => "NOT" });
label_strings!(LabelB { Tin => "TIN", Unt => "UNT" });
label_strings!(LabelC { Ind => "IND", Grp => "GRP", Oth => "OTH" });

/// One level of the annotation hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    A,
    B,
    C,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::A, Level::B, Level::C];

    /// Class names at this level, in canonical (sorted) order.
    pub fn class_names(self) -> Vec<String> {
        let mut names: Vec<String> = match self {
            Level::A => LabelA::ALL.iter().map(|l| l.to_string()).collect(),
            Level::B => LabelB::ALL.iter().map(|l| l.to_string()).collect(),
            Level::C => LabelC::ALL.iter().map(|l| l.to_string()).collect(),
        };
        names.sort();
        names
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::A => "A",
            Level::B => "B",
            Level::C => "C",
        })
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "A" | "a" => Ok(Level::A),
            "B" | "b" => Ok(Level::B),
            "C" | "c" => Ok(Level::C),
            other => Err(format!("unknown level `{other}` (expected A, B or C)")),
        }
    }
}

/// Which subtask view a corpus represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum View {
    Raw,
    Level(Level),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub text: String,
    pub label_a: Option<LabelA>,
    pub label_b: Option<LabelB>,
    pub label_c: Option<LabelC>,
}

impl Post {
    pub fn unlabeled(id: impl Into<String>, text: impl Into<String>) -> Self {
        Post {
            id: id.into(),
            text: text.into(),
            label_a: None,
            label_b: None,
            label_c: None,
        }
    }

    /// Checks the hierarchy rules: B only under OFF, C only under TIN.
    pub fn check_hierarchy(&self) -> Result<(), String> {
        if self.label_b.is_some() && self.label_a != Some(LabelA::Off) {
            return Err(format!(
                "post `{}` has a subtask B label without subtask A = OFF",
                self.id
            ));
        }
        if self.label_c.is_some() && self.label_b != Some(LabelB::Tin) {
            return Err(format!(
                "post `{}` has a subtask C label without subtask B = TIN",
                self.id
            ));
        }
        Ok(())
    }

    /// The gold label at `level`, as its class name.
    pub fn label(&self, level: Level) -> Option<&'static str> {
        match level {
            Level::A => self.label_a.map(LabelA::as_str),
            Level::B => self.label_b.map(LabelB::as_str),
            Level::C => self.label_c.map(LabelC::as_str),
        }
    }
}

/// An ordered, immutable collection of posts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    posts: Vec<Post>,
    view: View,
}

impl Corpus {
    /// Builds a raw corpus, validating id uniqueness and the label hierarchy.
    pub fn from_posts(posts: Vec<Post>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for (i, post) in posts.iter().enumerate() {
            let line = i + 2;
            if post.id.is_empty() {
                return Err(CorpusError::EmptyId { line });
            }
            if !seen.insert(post.id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    line,
                    id: post.id.clone(),
                });
            }
            post.check_hierarchy()
                .map_err(|reason| CorpusError::HierarchyViolation { line, reason })?;
        }
        Ok(Corpus {
            posts,
            view: View::Raw,
        })
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// Class name of every post at `level`. Fails on the first unlabeled post.
    pub fn labels(&self, level: Level) -> Result<Vec<&'static str>, CorpusError> {
        self.posts
            .iter()
            .map(|p| {
                p.label(level).ok_or_else(|| CorpusError::Unlabeled {
                    id: p.id.clone(),
                    level,
                })
            })
            .collect()
    }

    /// Keeps the posts labelled at `level`, preserving order.
    ///
    /// A B-view additionally requires `label_a = OFF`, a C-view `label_b = TIN`;
    /// both already follow from the hierarchy invariant.
    pub fn subtask_view(&self, level: Level) -> Corpus {
        let posts = self
            .posts
            .iter()
            .filter(|p| match level {
                Level::A => p.label_a.is_some(),
                Level::B => p.label_a == Some(LabelA::Off) && p.label_b.is_some(),
                Level::C => p.label_b == Some(LabelB::Tin) && p.label_c.is_some(),
            })
            .cloned()
            .collect();
        Corpus {
            posts,
            view: View::Level(level),
        }
    }

    /// The level this corpus is labelled at: its view, or A for a raw corpus.
    fn label_level(&self) -> Level {
        match self.view {
            View::Level(level) => level,
            View::Raw => Level::A,
        }
    }

    /// Exact per-class counts at the corpus's view level (A for raw corpora).
    pub fn class_distribution(&self) -> BTreeMap<String, usize> {
        let level = self.label_level();
        let mut counts = BTreeMap::new();
        for post in &self.posts {
            if let Some(label) = post.label(level) {
                *counts.entry(label.to_string()).or_insert(0) += 1;
            }
        }
        counts
    }

    /// A corpus holding the posts at `indices`, in the given order, with the same view.
    pub fn select(&self, indices: &[usize]) -> Corpus {
        Corpus {
            posts: indices.iter().map(|&i| self.posts[i].clone()).collect(),
            view: self.view,
        }
    }

    /// Stratified train/test partition, deterministic for a fixed seed.
    ///
    /// For every class the train share is `round_half_up(count * train_fraction)`;
    /// the largest class then absorbs any difference so the train total equals
    /// `round_half_up(len * train_fraction)`. Both halves keep corpus order.
    pub fn split_stratified(
        &self,
        train_fraction: f64,
        seed: u64,
    ) -> Result<StratifiedSplit, CorpusError> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(CorpusError::InvalidFraction(train_fraction));
        }
        if self.posts.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let level = self.label_level();
        let labels = self.labels(level)?;

        let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, label) in labels.iter().enumerate() {
            by_class.entry(label).or_default().push(i);
        }

        let mut quotas: Vec<usize> = by_class
            .values()
            .map(|members| round_half_up(members.len() as f64 * train_fraction))
            .collect();
        let target = round_half_up(self.posts.len() as f64 * train_fraction);
        let assigned: usize = quotas.iter().sum();
        if assigned != target {
            // first largest class in sorted order
            let (largest, _) = by_class
                .values()
                .enumerate()
                .fold((0, 0), |best, (i, m)| if m.len() > best.1 { (i, m.len()) } else { best });
            let cap = by_class.values().nth(largest).map_or(0, Vec::len);
            let adjusted = quotas[largest] as i64 + target as i64 - assigned as i64;
            quotas[largest] = adjusted.clamp(0, cap as i64) as usize;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        let mut degenerate = Vec::new();
        for ((class, members), quota) in by_class.iter().zip(&quotas) {
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            if *quota == 0 && train_fraction >= 0.5 {
                log::warn!("class {class} receives no training items in the split");
                degenerate.push(class.to_string());
            }
            train_idx.extend_from_slice(&shuffled[..*quota]);
            test_idx.extend_from_slice(&shuffled[*quota..]);
        }
        train_idx.sort_unstable();
        test_idx.sort_unstable();

        Ok(StratifiedSplit {
            train: self.select(&train_idx),
            test: self.select(&test_idx),
            degenerate_classes: degenerate,
        })
    }

    /// Writes the corpus in the tab-separated layout it was parsed from.
    pub fn write_olid<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{HEADER}")?;
        for p in &self.posts {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                p.id,
                p.text,
                p.label_a.map_or(NULL, LabelA::as_str),
                p.label_b.map_or(NULL, LabelB::as_str),
                p.label_c.map_or(NULL, LabelC::as_str),
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StratifiedSplit {
    pub train: Corpus,
    pub test: Corpus,
    /// Classes that ended up with no training items (a warning, not an error).
    pub degenerate_classes: Vec<String>,
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

fn parse_label<T: FromStr>(
    token: &str,
    line: usize,
    column: &'static str,
) -> Result<Option<T>, CorpusError> {
    if token == NULL {
        return Ok(None);
    }
    token
        .parse()
        .map(Some)
        .map_err(|_| CorpusError::UnknownLabel {
            line,
            column,
            token: token.to_string(),
        })
}

/// Parses an OLID-format stream into a raw corpus.
pub fn parse_olid<R: BufRead>(input: R) -> Result<Corpus, CorpusError> {
    let mut lines = input.lines();
    match lines.next() {
        Some(header) => {
            let header = header?;
            let found = header.trim_end_matches('\r').split('\t').count();
            if found != 5 {
                return Err(CorpusError::MalformedRow { line: 1, found });
            }
        }
        None => return Err(CorpusError::MissingHeader),
    }

    let mut posts = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(CorpusError::MalformedRow {
                line: line_no,
                found: cols.len(),
            });
        }
        if cols[0].is_empty() {
            return Err(CorpusError::EmptyId { line: line_no });
        }
        let post = Post {
            id: cols[0].to_string(),
            text: cols[1].to_string(),
            label_a: parse_label(cols[2], line_no, "subtask_a")?,
            label_b: parse_label(cols[3], line_no, "subtask_b")?,
            label_c: parse_label(cols[4], line_no, "subtask_c")?,
        };
        post.check_hierarchy()
            .map_err(|reason| CorpusError::HierarchyViolation {
                line: line_no,
                reason,
            })?;
        if !seen.insert(post.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: post.id,
            });
        }
        posts.push(post);
    }
    Ok(Corpus {
        posts,
        view: View::Raw,
    })
}

pub fn parse_olid_str(input: &str) -> Result<Corpus, CorpusError> {
    parse_olid(input.as_bytes())
}

pub fn read_olid_file(path: impl AsRef<std::path::Path>) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path)?;
    parse_olid(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(rows: &[&str]) -> Result<Corpus, CorpusError> {
        let mut text = String::from(HEADER);
        for r in rows {
            text.push('\n');
            text.push_str(r);
        }
        parse_olid_str(&text)
    }

    #[test]
    fn minimal_row() {
        let c = corpus(&["1\thello\tNOT\tNULL\tNULL"]).unwrap();
        let p = &c.posts()[0];
        assert_eq!(p.id, "1");
        assert_eq!(p.text, "hello");
        assert_eq!(p.label_a, Some(LabelA::Not));
        assert_eq!(p.label_b, None);
        assert_eq!(p.label_c, None);
    }

    #[test]
    fn full_row() {
        let c = corpus(&["2\tx\tOFF\tTIN\tIND"]).unwrap();
        let p = &c.posts()[0];
        assert_eq!(p.label_a, Some(LabelA::Off));
        assert_eq!(p.label_b, Some(LabelB::Tin));
        assert_eq!(p.label_c, Some(LabelC::Ind));
    }

    #[test]
    fn hierarchy_violation() {
        let err = corpus(&["3\tx\tNOT\tTIN\tNULL"]).unwrap_err();
        assert!(matches!(err, CorpusError::HierarchyViolation { line: 2, .. }));
        let err = corpus(&["3\tx\tOFF\tUNT\tGRP"]).unwrap_err();
        assert!(matches!(err, CorpusError::HierarchyViolation { .. }));
    }

    #[test]
    fn malformed_and_unknown() {
        assert!(matches!(
            corpus(&["1\thas\ttab\tNOT\tNULL\tNULL"]).unwrap_err(),
            CorpusError::MalformedRow { found: 6, .. }
        ));
        assert!(matches!(
            corpus(&["1\tx\tMAYBE\tNULL\tNULL"]).unwrap_err(),
            CorpusError::UnknownLabel { column: "subtask_a", .. }
        ));
        assert!(matches!(
            corpus(&["1\tx\tNOT\tNULL\tNULL", "1\ty\tNOT\tNULL\tNULL"]).unwrap_err(),
            CorpusError::DuplicateId { .. }
        ));
        assert!(matches!(parse_olid_str("").unwrap_err(), CorpusError::MissingHeader));
    }

    #[test]
    fn crlf_input() {
        let text = format!("{HEADER}\r\n1\thi\tOFF\tUNT\tNULL\r\n");
        let c = parse_olid_str(&text).unwrap();
        assert_eq!(c.posts()[0].label_b, Some(LabelB::Unt));
        assert_eq!(c.posts()[0].text, "hi");
    }

    #[test]
    fn views() {
        let c = corpus(&[
            "1\ta\tOFF\tTIN\tIND",
            "2\tb\tOFF\tUNT\tNULL",
            "3\tc\tNOT\tNULL\tNULL",
        ])
        .unwrap();
        assert_eq!(c.subtask_view(Level::A).len(), 3);
        assert_eq!(c.subtask_view(Level::B).len(), 2);
        let cv = c.subtask_view(Level::C);
        assert_eq!(cv.len(), 1);
        assert_eq!(cv.posts()[0].id, "1");
        assert_eq!(cv.view(), View::Level(Level::C));

        let all_not = corpus(&[
            "1\ta\tNOT\tNULL\tNULL",
            "2\tb\tNOT\tNULL\tNULL",
            "3\tc\tNOT\tNULL\tNULL",
        ])
        .unwrap();
        assert!(all_not.subtask_view(Level::B).is_empty());
    }

    #[test]
    fn distribution() {
        let c = corpus(&[
            "1\ta\tOFF\tNULL\tNULL",
            "2\tb\tOFF\tNULL\tNULL",
            "3\tc\tNOT\tNULL\tNULL",
        ])
        .unwrap();
        let d = c.subtask_view(Level::A).class_distribution();
        assert_eq!(d.get("OFF"), Some(&2));
        assert_eq!(d.get("NOT"), Some(&1));
        assert!(Corpus::from_posts(vec![]).unwrap().class_distribution().is_empty());
    }

    fn labelled(counts: &[(LabelA, usize)]) -> Corpus {
        let mut posts = Vec::new();
        for (label, n) in counts {
            for _ in 0..*n {
                let mut p = Post::unlabeled(format!("p{}", posts.len()), "t");
                p.label_a = Some(*label);
                posts.push(p);
            }
        }
        Corpus::from_posts(posts).unwrap().subtask_view(Level::A)
    }

    #[test]
    fn stratified_counts() {
        let c = labelled(&[(LabelA::Not, 8), (LabelA::Off, 2)]);
        let split = c.split_stratified(0.8, 7).unwrap();
        let d = split.train.class_distribution();
        assert_eq!(d["NOT"], 6);
        assert_eq!(d["OFF"], 2);
        assert_eq!(split.test.len(), 2);

        let again = c.split_stratified(0.8, 7).unwrap();
        assert_eq!(split.train, again.train);
        assert_eq!(split.test, again.test);
    }

    #[test]
    fn single_class_half_split() {
        let c = labelled(&[(LabelA::Not, 10)]);
        let split = c.split_stratified(0.5, 1).unwrap();
        assert_eq!(split.train.len(), 5);
        assert_eq!(split.test.len(), 5);
    }

    #[test]
    fn degenerate_split_warns() {
        // quotas 1+1+1 exceed the target round(3 * 0.5) = 2, so the first
        // largest class gives one back and is left with nothing
        let posts: Vec<Post> = ["IND", "GRP", "OTH"]
            .iter()
            .enumerate()
            .map(|(i, c)| Post {
                id: i.to_string(),
                text: "t".into(),
                label_a: Some(LabelA::Off),
                label_b: Some(LabelB::Tin),
                label_c: Some(c.parse().unwrap()),
            })
            .collect();
        let c = Corpus::from_posts(posts).unwrap().subtask_view(Level::C);
        let split = c.split_stratified(0.5, 3).unwrap();
        assert_eq!(split.train.len(), 2);
        assert_eq!(split.degenerate_classes, vec!["GRP".to_string()]);
    }

    #[test]
    fn split_errors() {
        let c = labelled(&[(LabelA::Not, 3)]);
        assert!(matches!(
            c.split_stratified(1.0, 0).unwrap_err(),
            CorpusError::InvalidFraction(_)
        ));
        let empty = labelled(&[]);
        assert!(matches!(
            empty.split_stratified(0.5, 0).unwrap_err(),
            CorpusError::EmptyCorpus
        ));
    }
}
