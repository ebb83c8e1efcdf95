//! JSONL formats.
//!
//! Parsed input, one document per line:
//!
//! ```json
//! {"doc_id": "a1", "timestamp": "1999-03-02",
//!  "sentences": [{"tokens": [{"surface": "Obey", "lemma": "obey",
//!                             "dep_head": 3, "dep_rel": "nsubj", "ner_tag": "PERSON"}]}],
//!  "coref_chains": [{"id": 0, "mentions": [{"sentence": 0, "start": 0, "end": 1}]}],
//!  "gold_sources": {"0": "government-decision-maker"},
//!  "heldout_sources": {}, "gold_doc_type": 3}
//! ```
//!
//! `dep_head` is 1-based within the sentence with `0` for the root (CoNLL
//! convention). Mention `start`/`end` are 0-based, end-exclusive, within the
//! sentence. `gold_sources` labels are clamped during training;
//! `heldout_sources` labels are only used for evaluation.
//!
//! Extracted output is one serialized [`Document`] per line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    assign_gamma, extract_sources, CorefChain, Document, MentionSpan, ParseAnnotations, SpeakingVerbs, Stopwords,
    Token,
};
use crate::error::{Error, Result};
use crate::par::Execution;

fn outside() -> String {
    "O".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedToken {
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(default)]
    pub dep_head: usize,
    #[serde(default)]
    pub dep_rel: String,
    #[serde(default = "outside")]
    pub ner_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_stopword: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub tokens: Vec<ParsedToken>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedMention {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedChain {
    pub id: usize,
    pub mentions: Vec<ParsedMention>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedDocument {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<NaiveDate>,
    pub sentences: Vec<ParsedSentence>,
    #[serde(default)]
    pub coref_chains: Vec<ParsedChain>,
    #[serde(default)]
    pub gold_sources: BTreeMap<usize, String>,
    #[serde(default)]
    pub heldout_sources: BTreeMap<usize, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_doc_type: Option<usize>,
}

impl ParsedDocument {
    /// Flattens sentences into document-indexed tokens and annotations.
    pub fn annotations(&self, stopwords: &Stopwords) -> Result<(Vec<Token>, ParseAnnotations)> {
        let bad = |msg: String| Error::MalformedParse(format!("document `{}`: {msg}", self.doc_id));
        let mut tokens = Vec::new();
        let mut parses = ParseAnnotations::default();
        let mut starts = Vec::with_capacity(self.sentences.len());
        for (s, sentence) in self.sentences.iter().enumerate() {
            let start = tokens.len();
            starts.push(start);
            let len = sentence.tokens.len();
            for (i, tok) in sentence.tokens.iter().enumerate() {
                let lemma = tok.lemma.as_deref().unwrap_or(&tok.surface).to_lowercase();
                if tok.dep_head > len {
                    return Err(bad(format!(
                        "sentence {s} token {i} has head {} beyond {len} tokens",
                        tok.dep_head
                    )));
                }
                parses.heads.push((tok.dep_head > 0).then(|| start + tok.dep_head - 1));
                parses.relations.push(tok.dep_rel.clone());
                parses.ner.push(tok.ner_tag.clone());
                tokens.push(Token {
                    surface: tok.surface.clone(),
                    is_stopword: tok.is_stopword.unwrap_or_else(|| stopwords.contains(&lemma)),
                    lemma,
                    sentence_index: s,
                    position: start + i,
                });
            }
        }
        for chain in &self.coref_chains {
            let mut mentions = Vec::with_capacity(chain.mentions.len());
            for m in &chain.mentions {
                let len = self.sentences.get(m.sentence).map(|s| s.tokens.len());
                match len {
                    Some(len) if m.start < m.end && m.end <= len => mentions.push(MentionSpan {
                        start: starts[m.sentence] + m.start,
                        end: starts[m.sentence] + m.end,
                    }),
                    _ => {
                        return Err(bad(format!(
                            "chain {} mention {}:{}..{} is out of range",
                            chain.id, m.sentence, m.start, m.end
                        )))
                    }
                }
            }
            parses.chains.push(CorefChain { id: chain.id, mentions });
        }
        Ok((tokens, parses))
    }

    /// Runs source extraction and switch assignment, attaching gold labels.
    pub fn extract(&self, verbs: &SpeakingVerbs, stopwords: &Stopwords) -> Result<Document> {
        let (tokens, parses) = self.annotations(stopwords)?;
        let mut sources = extract_sources(&tokens, &parses, verbs)?;
        for source in &mut sources {
            if let Some(label) = self.gold_sources.get(&source.chain_id) {
                source.gold_label = Some(label.clone());
                source.clamped = true;
            } else if let Some(label) = self.heldout_sources.get(&source.chain_id) {
                source.gold_label = Some(label.clone());
            }
        }
        let gamma = assign_gamma(&tokens, &sources);
        Ok(Document {
            doc_id: self.doc_id.clone(),
            timestamp: self.timestamp,
            tokens,
            sources,
            gamma,
            gold_doc_type: self.gold_doc_type,
        })
    }
}

/// Extracts every document, in input order.
pub fn extract_all(
    parsed: &[ParsedDocument],
    verbs: &SpeakingVerbs,
    stopwords: &Stopwords,
    exec: Execution,
) -> Result<Vec<Document>> {
    exec.map(parsed.iter().collect(), |doc| doc.extract(verbs, stopwords))
        .into_iter()
        .collect()
}

/// Parses JSONL text; blank lines are skipped, errors carry line numbers.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, origin: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text, &path.display().to_string())
}

pub fn to_jsonl_string<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Gamma;

    const TWO_SENTENCES: &str = r#"{"doc_id":"d1","timestamp":"2001-05-04","sentences":[{"tokens":[{"surface":"Jones","dep_head":2,"dep_rel":"nsubj","ner_tag":"PERSON"},{"surface":"said","lemma":"say","dep_head":0,"dep_rel":"root"},{"surface":"taxes","lemma":"tax","dep_head":2,"dep_rel":"obj"}]},{"tokens":[{"surface":"Markets","lemma":"market","dep_head":2,"dep_rel":"nsubj"},{"surface":"fell","lemma":"fall","dep_head":0,"dep_rel":"root"}]}],"coref_chains":[{"id":7,"mentions":[{"sentence":0,"start":0,"end":1}]}],"gold_sources":{"7":"government-spokesman"}}"#;

    #[test]
    fn extracts_from_jsonl_record() {
        let docs: Vec<ParsedDocument> = parse_jsonl(TWO_SENTENCES, "mem").unwrap();
        let doc = docs[0].extract(&SpeakingVerbs::default(), &Stopwords::default()).unwrap();
        assert_eq!(doc.tokens[0].lemma, "jones");
        assert_eq!(doc.sources.len(), 1);
        assert_eq!(doc.sources[0].chain_id, 7);
        assert!(doc.sources[0].clamped);
        assert_eq!(doc.sources[0].gold_label.as_deref(), Some("government-spokesman"));
        use Gamma::*;
        assert_eq!(doc.gamma, vec![Source(0), Source(0), Source(0), Background, Background]);
        assert_eq!(doc.timestamp, NaiveDate::from_ymd_opt(2001, 5, 4));
        doc.validate().unwrap();

        let line = to_jsonl_string(std::slice::from_ref(&doc)).unwrap();
        let back: Vec<Document> = parse_jsonl(&line, "mem").unwrap();
        assert_eq!(back, vec![doc]);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let text = format!("{TWO_SENTENCES}\n\n{{not json\n");
        let err = parse_jsonl::<ParsedDocument>(&text, "in.jsonl").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn out_of_range_heads_and_mentions() {
        let mut doc: ParsedDocument = parse_jsonl(TWO_SENTENCES, "mem").unwrap().remove(0);
        doc.sentences[1].tokens[0].dep_head = 9;
        assert!(matches!(
            doc.annotations(&Stopwords::default()),
            Err(Error::MalformedParse(_))
        ));
        let mut doc: ParsedDocument = parse_jsonl(TWO_SENTENCES, "mem").unwrap().remove(0);
        doc.coref_chains[0].mentions[0].end = 5;
        assert!(doc.annotations(&Stopwords::default()).is_err());
    }

    #[test]
    fn write_then_read_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docs.jsonl");
        let docs: Vec<ParsedDocument> = parse_jsonl(TWO_SENTENCES, "mem").unwrap();
        write_jsonl(&path, &docs).unwrap();
        let back: Vec<ParsedDocument> = read_jsonl(&path).unwrap();
        assert_eq!(back, docs);
        assert!(matches!(read_jsonl::<ParsedDocument>(dir.path().join("nope")), Err(Error::Io { .. })));
    }
}
