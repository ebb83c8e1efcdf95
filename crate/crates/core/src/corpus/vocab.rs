use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::corpus::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopwordPolicy {
    Keep,
    #[default]
    Exclude,
}

/// Dense lemma <-> id bijection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut ids = HashMap::with_capacity(terms.len());
        for (i, term) in terms.iter().enumerate() {
            if ids.insert(term.clone(), i as u32).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate vocabulary term `{term}`")));
            }
        }
        Ok(Self { terms, ids })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// SHA-256 over the newline-joined terms in id order.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for term in &self.terms {
            hasher.update(term.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

/// Lemmas with corpus frequency >= `min_count`, ids by descending
/// frequency then lexicographic lemma.
pub fn build_vocabulary(documents: &[Document], min_count: usize, policy: StopwordPolicy) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::InvalidArgument("min_count must be at least 1".into()));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for token in documents.iter().flat_map(|d| &d.tokens) {
        if policy == StopwordPolicy::Exclude && token.is_stopword {
            continue;
        }
        *freq.entry(token.lemma.as_str()).or_default() += 1;
    }
    let mut kept: Vec<(&str, usize)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
    kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_terms(kept.into_iter().map(|(t, _)| t.to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::plain_document;

    #[test]
    fn frequency_threshold() {
        let docs = vec![plain_document("d", &["say", "say", "budget"], 1)];
        let v1 = build_vocabulary(&docs, 1, StopwordPolicy::Keep).unwrap();
        assert_eq!(v1.len(), 2);
        assert_eq!(v1.terms(), ["say", "budget"]);
        let v2 = build_vocabulary(&docs, 2, StopwordPolicy::Keep).unwrap();
        assert_eq!(v2.terms(), ["say"]);
        assert!(matches!(
            build_vocabulary(&docs, 3, StopwordPolicy::Keep),
            Err(Error::EmptyVocabulary)
        ));
        assert!(build_vocabulary(&docs, 0, StopwordPolicy::Keep).is_err());
    }

    #[test]
    fn ties_are_lexicographic_and_builds_are_identical() {
        let docs = vec![plain_document("d", &["zeta", "alpha", "mu", "mu"], 1)];
        let a = build_vocabulary(&docs, 1, StopwordPolicy::Keep).unwrap();
        let b = build_vocabulary(&docs, 1, StopwordPolicy::Keep).unwrap();
        assert_eq!(a.terms(), ["mu", "alpha", "zeta"]);
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.id("alpha"), Some(1));
        assert_eq!(a.term(2), Some("zeta"));
    }

    #[test]
    fn stopwords_excluded_on_request() {
        let mut doc = plain_document("d", &["the", "budget"], 1);
        doc.tokens[0].is_stopword = true;
        let docs = vec![doc];
        assert_eq!(build_vocabulary(&docs, 1, StopwordPolicy::Exclude).unwrap().len(), 1);
        assert_eq!(build_vocabulary(&docs, 1, StopwordPolicy::Keep).unwrap().len(), 2);
    }
}
