//! Documents, source extraction and the observed source/background switch.

mod encoded;
mod extract;
pub mod io;
mod vocab;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ontology::LabelSpace;

pub use encoded::{EncodedCorpus, EncodedDoc};
pub use extract::{
    assign_gamma, extract_sources, CorefChain, MentionSpan, ParseAnnotations, SpeakingVerbs,
    Stopwords,
};
pub use vocab::{build_vocabulary, StopwordPolicy, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub sentence_index: usize,
    pub position: usize,
    #[serde(default)]
    pub is_stopword: bool,
}

/// Observed switch value of one token.
///
/// Serialized as an integer: `-1` for background, otherwise the source index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gamma {
    Background,
    Source(usize),
}

impl Gamma {
    pub fn source(self) -> Option<usize> {
        match self {
            Gamma::Background => None,
            Gamma::Source(n) => Some(n),
        }
    }
}

impl Serialize for Gamma {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Gamma::Background => serializer.serialize_i64(-1),
            Gamma::Source(n) => serializer.serialize_i64(*n as i64),
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = i64::deserialize(deserializer)?;
        match raw {
            -1 => Ok(Gamma::Background),
            n if n >= 0 => Ok(Gamma::Source(n as usize)),
            n => Err(serde::de::Error::custom(format!("invalid gamma value {n}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceMention {
    pub canonical_name: String,
    pub chain_id: usize,
    /// Sorted, non-empty.
    pub sentence_indices: Vec<usize>,
    /// Canonical label string, resolved against the corpus label space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<String>,
    #[serde(default)]
    pub clamped: bool,
    /// Token positions of the speaking verbs attributed to this source.
    #[serde(default)]
    pub quote_verbs: Vec<usize>,
    /// Token positions covered by this source's mentions.
    #[serde(default)]
    pub mention_positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<NaiveDate>,
    pub tokens: Vec<Token>,
    pub sources: Vec<SourceMention>,
    pub gamma: Vec<Gamma>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_doc_type: Option<usize>,
}

impl Document {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Error::InvalidArgument(format!("document `{}`: {msg}", self.doc_id));
        if self.gamma.len() != self.tokens.len() {
            return Err(bad(format!(
                "{} gamma values for {} tokens",
                self.gamma.len(),
                self.tokens.len()
            )));
        }
        for pair in self.tokens.windows(2) {
            if pair[1].position <= pair[0].position || pair[1].sentence_index < pair[0].sentence_index {
                return Err(bad("token positions must increase".into()));
            }
        }
        if let Some(g) = self.gamma.iter().find_map(|g| g.source().filter(|&n| n >= self.sources.len())) {
            return Err(bad(format!("gamma references missing source {g}")));
        }
        for source in &self.sources {
            if source.sentence_indices.is_empty() {
                return Err(bad(format!("source `{}` has no sentences", source.canonical_name)));
            }
            if source.clamped && source.gold_label.is_none() {
                return Err(bad(format!("source `{}` is clamped without a label", source.canonical_name)));
            }
        }
        Ok(())
    }

    pub fn num_source_words(&self) -> usize {
        self.gamma.iter().filter(|g| g.source().is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
    pub label_space: LabelSpace,
}

impl Corpus {
    /// Validates documents and canonicalizes gold labels against `label_space`.
    pub fn new(mut documents: Vec<Document>, vocabulary: Vocabulary, label_space: LabelSpace) -> Result<Self> {
        for doc in &mut documents {
            doc.validate()?;
            for source in &mut doc.sources {
                if let Some(label) = &source.gold_label {
                    source.gold_label = Some(label_space.parse(label)?.label());
                }
            }
        }
        Ok(Self {
            documents,
            vocabulary,
            label_space,
        })
    }

    /// Filters sourceless documents, builds the vocabulary and validates.
    pub fn build(
        documents: Vec<Document>,
        label_space: LabelSpace,
        min_count: usize,
        policy: StopwordPolicy,
    ) -> Result<Self> {
        let (documents, _) = filter_documents(documents);
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let vocabulary = build_vocabulary(&documents, min_count, policy)?;
        Self::new(documents, vocabulary, label_space)
    }

    pub fn num_sources(&self) -> usize {
        self.documents.iter().map(|d| d.sources.len()).sum()
    }

    /// Integer view consumed by the sampler. Tokens outside the vocabulary
    /// are dropped together with their switch values.
    pub fn encode(&self) -> Result<EncodedCorpus> {
        let mut docs = Vec::with_capacity(self.documents.len());
        for doc in &self.documents {
            let mut words = Vec::with_capacity(doc.tokens.len());
            let mut gamma = Vec::with_capacity(doc.tokens.len());
            for (token, g) in doc.tokens.iter().zip(&doc.gamma) {
                if let Some(id) = self.vocabulary.id(&token.lemma) {
                    words.push(id);
                    gamma.push(*g);
                }
            }
            let mut clamps = Vec::with_capacity(doc.sources.len());
            for source in &doc.sources {
                let clamp = match (&source.gold_label, source.clamped) {
                    (Some(label), true) => Some(self.label_space.parse(label)?.index as u32),
                    _ => None,
                };
                clamps.push(clamp);
            }
            docs.push(EncodedDoc::new(words, gamma, clamps)?);
        }
        EncodedCorpus::new(docs, self.vocabulary.len(), self.label_space.len())
    }
}

/// Keeps documents with at least one source; returns them and the drop count.
pub fn filter_documents(documents: Vec<Document>) -> (Vec<Document>, usize) {
    let before = documents.len();
    let kept: Vec<Document> = documents.into_iter().filter(|d| !d.sources.is_empty()).collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

pub fn filter_corpus(corpus: Corpus) -> Corpus {
    let (documents, _) = filter_documents(corpus.documents);
    Corpus { documents, ..corpus }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// A document of single-token sentences with the given lemmas.
    pub fn plain_document(doc_id: &str, lemmas: &[&str], sources: usize) -> Document {
        let tokens: Vec<Token> = lemmas
            .iter()
            .enumerate()
            .map(|(i, l)| Token {
                surface: l.to_string(),
                lemma: l.to_string(),
                sentence_index: 0,
                position: i,
                is_stopword: false,
            })
            .collect();
        let sources = (0..sources)
            .map(|n| SourceMention {
                canonical_name: format!("source {n}"),
                chain_id: n,
                sentence_indices: vec![0],
                gold_label: None,
                clamped: false,
                quote_verbs: vec![],
                mention_positions: vec![],
            })
            .collect();
        Document {
            doc_id: doc_id.to_string(),
            timestamp: None,
            gamma: vec![Gamma::Background; tokens.len()],
            tokens,
            sources,
            gold_doc_type: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::plain_document;
    use super::*;
    use crate::ontology::make_default_label_space;

    #[test]
    fn filter_drops_sourceless_documents() {
        let docs = vec![
            plain_document("a", &["x"], 1),
            plain_document("b", &["x"], 0),
            plain_document("c", &["x"], 2),
        ];
        let (kept, dropped) = filter_documents(docs);
        assert_eq!(kept.len(), 2);
        assert_eq!(dropped, 1);

        let vocab = Vocabulary::from_terms(vec!["x".into()]).unwrap();
        let corpus = Corpus {
            documents: vec![plain_document("b", &["x"], 0)],
            vocabulary: vocab,
            label_space: make_default_label_space(),
        };
        assert!(filter_corpus(corpus).documents.is_empty());
    }

    #[test]
    fn build_refuses_all_sourceless() {
        let docs = vec![plain_document("a", &["x"], 0)];
        let err = Corpus::build(docs, make_default_label_space(), 1, StopwordPolicy::Exclude);
        assert!(matches!(err, Err(Error::EmptyCorpus)));
    }

    #[test]
    fn gold_labels_are_canonicalized_and_checked() {
        let mut doc = plain_document("a", &["x"], 1);
        doc.sources[0].gold_label = Some("academic-expert".into());
        doc.sources[0].clamped = true;
        let vocab = Vocabulary::from_terms(vec!["x".into()]).unwrap();
        let corpus = Corpus::new(vec![doc.clone()], vocab.clone(), make_default_label_space()).unwrap();
        assert_eq!(
            corpus.documents[0].sources[0].gold_label.as_deref(),
            Some("academic-informational")
        );
        let encoded = corpus.encode().unwrap();
        assert_eq!(encoded.docs()[0].clamps(), &[Some(11)]);

        doc.sources[0].gold_label = Some("unicorn-wrangler".into());
        assert!(matches!(
            Corpus::new(vec![doc], vocab, make_default_label_space()),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn encode_drops_out_of_vocabulary_tokens() {
        let mut doc = plain_document("a", &["the", "budget", "say"], 1);
        doc.tokens[0].is_stopword = true;
        doc.gamma = vec![Gamma::Source(0), Gamma::Background, Gamma::Source(0)];
        let corpus = Corpus::build(vec![doc], make_default_label_space(), 1, StopwordPolicy::Exclude).unwrap();
        assert_eq!(corpus.vocabulary.len(), 2);
        let encoded = corpus.encode().unwrap();
        let d = &encoded.docs()[0];
        assert_eq!(d.words().len(), 2);
        assert_eq!(d.gamma(), &[Gamma::Background, Gamma::Source(0)]);
    }

    #[test]
    fn gamma_serializes_as_integers() {
        let json = serde_json::to_string(&vec![Gamma::Background, Gamma::Source(2)]).unwrap();
        assert_eq!(json, "[-1,2]");
        let back: Vec<Gamma> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Gamma::Background, Gamma::Source(2)]);
        assert!(serde_json::from_str::<Gamma>("-3").is_err());
    }

    #[test]
    fn validation_catches_bad_gamma() {
        let mut doc = plain_document("a", &["x", "y"], 1);
        doc.gamma = vec![Gamma::Source(1), Gamma::Background];
        assert!(doc.validate().is_err());
        doc.gamma.pop();
        assert!(doc.validate().is_err());
    }
}
