use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Term to dense index map, in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    terms: Vec<String>,
    min_frequency: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    min_frequency: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(repr: VocabularyRepr) -> Self {
        Vocabulary::from_terms(repr.terms, repr.min_frequency)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            terms: v.terms,
            min_frequency: v.min_frequency,
        }
    }
}

impl Vocabulary {
    /// Keeps terms occurring at least `min_frequency` times across `docs`.
    pub fn build<'a, D, T>(docs: D, min_frequency: usize) -> Result<Self, FeatureError>
    where
        D: IntoIterator<Item = T>,
        T: IntoIterator<Item = &'a String>,
    {
        let mut order: Vec<&String> = Vec::new();
        let mut counts: HashMap<&String, usize> = HashMap::new();
        for doc in docs {
            for term in doc {
                let c = counts.entry(term).or_insert(0);
                if *c == 0 {
                    order.push(term);
                }
                *c += 1;
            }
        }
        let terms: Vec<String> = order
            .into_iter()
            .filter(|t| counts[t] >= min_frequency)
            .cloned()
            .collect();
        if terms.is_empty() {
            return Err(FeatureError::EmptyVocabulary { min_frequency });
        }
        Ok(Vocabulary::from_terms(terms, min_frequency))
    }

    /// Panics on duplicate terms.
    pub fn from_terms(terms: Vec<String>, min_frequency: usize) -> Self {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            let prev = index.insert(t.clone(), i);
            assert!(prev.is_none(), "duplicate vocabulary term `{t}`");
        }
        Vocabulary {
            index,
            terms,
            min_frequency,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn min_frequency(&self) -> usize {
        self.min_frequency
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&str]]) -> Vec<Vec<String>> {
        raw.iter()
            .map(|d| d.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn frequency_cutoff() {
        // a:5, b:2, c:1
        let d = docs(&[&["a", "b", "a"], &["c", "a", "b"], &["a", "a"]]);
        let v = Vocabulary::build(&d, 3).unwrap();
        assert_eq!(v.terms(), &["a".to_string()]);
        let all = Vocabulary::build(&d, 1).unwrap();
        assert_eq!(all.terms(), &["a", "b", "c"]);
        assert_eq!(all.get("c"), Some(2));
        assert_eq!(all.term(1), Some("b"));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let d: Vec<Vec<String>> = vec![];
        assert!(matches!(
            Vocabulary::build(&d, 1),
            Err(FeatureError::EmptyVocabulary { .. })
        ));
    }

    #[test]
    fn serde_rebuilds_index() {
        let d = docs(&[&["x", "y"]]);
        let v = Vocabulary::build(&d, 1).unwrap();
        let back: Vocabulary = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.get("y"), Some(1));
    }
}
