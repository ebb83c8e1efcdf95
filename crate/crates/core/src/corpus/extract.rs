//! Rule-based identification of named sources over pre-parsed text.
//!
//! A source is a PERSON entity that is the nominal subject of a speaking
//! verb (or the object of "according to"), linked to its coreference chain.
//! Its words are the first sentence mentioning it plus every sentence in
//! which it is quoted.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use crate::corpus::{Gamma, SourceMention, Token};
use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Half-open token range `[start, end)` in document positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MentionSpan {
    pub start: usize,
    pub end: usize,
}

impl MentionSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, pos: usize) -> bool {
        (self.start..self.end).contains(&pos)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorefChain {
    pub id: usize,
    pub mentions: Vec<MentionSpan>,
}

/// Parser output for one document, indexed by document token index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParseAnnotations {
    /// Dependency head of each token; `None` marks the root.
    pub heads: Vec<Option<usize>>,
    pub relations: Vec<String>,
    pub ner: Vec<String>,
    pub chains: Vec<CorefChain>,
}

impl ParseAnnotations {
    fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedParse(msg));
        if self.heads.len() != n || self.relations.len() != n || self.ner.len() != n {
            return bad(format!(
                "annotations cover {}/{}/{} tokens (heads/relations/ner), expected {n}",
                self.heads.len(),
                self.relations.len(),
                self.ner.len()
            ));
        }
        if let Some((i, h)) = self
            .heads
            .iter()
            .enumerate()
            .find_map(|(i, h)| h.filter(|&h| h >= n).map(|h| (i, h)))
        {
            return bad(format!("token {i} has head {h}, outside {n} tokens"));
        }
        let mut seen = HashSet::new();
        for chain in &self.chains {
            for m in &chain.mentions {
                if m.is_empty() || m.end > n {
                    return bad(format!("chain {} has invalid mention {}..{}", chain.id, m.start, m.end));
                }
                if !seen.insert(*m) {
                    return bad(format!("mention {}..{} appears in two chains", m.start, m.end));
                }
            }
        }
        let ids: HashSet<usize> = self.chains.iter().map(|c| c.id).collect();
        if ids.len() != self.chains.len() {
            return bad("duplicate coreference chain id".into());
        }
        Ok(())
    }
}

/// Lemmas that introduce a quotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeakingVerbs(BTreeSet<String>);

impl Default for SpeakingVerbs {
    fn default() -> Self {
        Self::new(["say", "recall", "continue", "add", "tell", "accord"])
    }
}

impl SpeakingVerbs {
    pub fn new<S: AsRef<str>>(lemmas: impl IntoIterator<Item = S>) -> Self {
        Self(lemmas.into_iter().map(|s| s.as_ref().trim().to_lowercase()).collect())
    }

    /// One lemma per line, `#` comments.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.0.contains(lemma)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Default for Stopwords {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(str::split_whitespace)
                .map(str::to_lowercase)
                .collect(),
        )
    }

    /// Listed lemmas and anything without an alphanumeric character.
    pub fn contains(&self, lemma: &str) -> bool {
        self.0.contains(lemma) || !lemma.chars().any(char::is_alphanumeric)
    }
}

fn is_person(tag: &str) -> bool {
    matches!(
        tag.to_ascii_uppercase().as_str(),
        "PERSON" | "PER" | "B-PER" | "I-PER" | "B-PERSON" | "I-PERSON"
    )
}

fn base_relation(rel: &str) -> String {
    rel.split(':').next().unwrap_or("").to_ascii_lowercase()
}

/// Speaking verb that makes token `t` a quoted source, if any.
fn trigger_verb(t: usize, tokens: &[Token], parses: &ParseAnnotations, verbs: &SpeakingVerbs) -> Option<usize> {
    if !is_person(&parses.ner[t]) {
        return None;
    }
    let lemma = |i: usize| tokens[i].lemma.to_lowercase();
    let rel = base_relation(&parses.relations[t]);
    if let Some(h) = parses.heads[t] {
        if rel == "nsubj" && verbs.contains(&lemma(h)) {
            return Some(h);
        }
        if verbs.contains("accord") {
            // "according to X" attaches X to "accord" directly or through "to"
            if lemma(h) == "accord" && matches!(rel.as_str(), "obl" | "pobj" | "nmod" | "obj" | "dobj") {
                return Some(h);
            }
            if lemma(h) == "to" {
                if let Some(g) = parses.heads[h].filter(|&g| lemma(g) == "accord") {
                    return Some(g);
                }
            }
        }
    }
    if verbs.contains("accord") {
        // UD style: "according" is a `case` dependent of X
        return (0..tokens.len()).find(|&a| {
            parses.heads[a] == Some(t) && lemma(a) == "accord" && base_relation(&parses.relations[a]) == "case"
        });
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum SourceKey {
    Chain(usize),
    Span(MentionSpan),
}

/// Extracts one [`SourceMention`] per quoted PERSON coreference chain,
/// ordered by first mention.
pub fn extract_sources(
    tokens: &[Token],
    parses: &ParseAnnotations,
    speaking_verbs: &SpeakingVerbs,
) -> Result<Vec<SourceMention>> {
    let n = tokens.len();
    parses.validate(n)?;
    if speaking_verbs.is_empty() {
        return Err(Error::InvalidArgument("speaking-verb set is empty".into()));
    }

    // Innermost chain mention covering each token.
    let mut owner: Vec<Option<(usize, usize)>> = vec![None; n];
    for (ci, chain) in parses.chains.iter().enumerate() {
        for m in &chain.mentions {
            for slot in &mut owner[m.start..m.end] {
                if slot.is_none_or(|(len, _)| m.len() < len) {
                    *slot = Some((m.len(), ci));
                }
            }
        }
    }

    let mut triggers: BTreeMap<SourceKey, Vec<usize>> = BTreeMap::new();
    for t in 0..n {
        let Some(verb) = trigger_verb(t, tokens, parses, speaking_verbs) else {
            continue;
        };
        let key = match owner[t] {
            Some((_, ci)) => SourceKey::Chain(ci),
            None => SourceKey::Span(person_run(t, tokens, parses)),
        };
        triggers.entry(key).or_default().push(verb);
    }

    let next_id = parses.chains.iter().map(|c| c.id + 1).max().unwrap_or(0);
    let mut pseudo = 0;
    let mut sources = Vec::with_capacity(triggers.len());
    for (key, mut verbs) in triggers {
        let (chain_id, mut mentions) = match key {
            SourceKey::Chain(ci) => (parses.chains[ci].id, parses.chains[ci].mentions.clone()),
            SourceKey::Span(span) => {
                pseudo += 1;
                (next_id + pseudo - 1, vec![span])
            }
        };
        mentions.sort();
        verbs.sort_unstable();
        verbs.dedup();
        let first_sentence = tokens[mentions[0].start].sentence_index;
        let sentence_indices: BTreeSet<usize> = std::iter::once(first_sentence)
            .chain(verbs.iter().map(|&v| tokens[v].sentence_index))
            .collect();
        let mention_positions: BTreeSet<usize> = mentions
            .iter()
            .flat_map(|m| (m.start..m.end).map(|i| tokens[i].position))
            .collect();
        sources.push((
            mentions[0].start,
            SourceMention {
                canonical_name: canonical_name(&mentions, tokens, parses),
                chain_id,
                sentence_indices: sentence_indices.into_iter().collect(),
                gold_label: None,
                clamped: false,
                quote_verbs: verbs.iter().map(|&v| tokens[v].position).collect(),
                mention_positions: mention_positions.into_iter().collect(),
            },
        ));
    }
    sources.sort_by_key(|(first, s)| (*first, s.chain_id));
    Ok(sources.into_iter().map(|(_, s)| s).collect())
}

/// Maximal run of PERSON tokens around `t` within its sentence.
fn person_run(t: usize, tokens: &[Token], parses: &ParseAnnotations) -> MentionSpan {
    let same = |i: usize| tokens[i].sentence_index == tokens[t].sentence_index && is_person(&parses.ner[i]);
    let mut start = t;
    while start > 0 && same(start - 1) {
        start -= 1;
    }
    let mut end = t + 1;
    while end < tokens.len() && same(end) {
        end += 1;
    }
    MentionSpan { start, end }
}

/// PERSON tokens of the mention with the most of them (earliest on ties).
fn canonical_name(mentions: &[MentionSpan], tokens: &[Token], parses: &ParseAnnotations) -> String {
    let person_tokens = |m: &MentionSpan| -> Vec<usize> { (m.start..m.end).filter(|&i| is_person(&parses.ner[i])).collect() };
    let best = mentions
        .iter()
        .map(person_tokens)
        .enumerate()
        .max_by_key(|(i, p)| (p.len(), std::cmp::Reverse(*i)))
        .map(|(_, p)| p)
        .unwrap_or_default();
    let chosen: Vec<usize> = if best.is_empty() {
        (mentions[0].start..mentions[0].end).collect()
    } else {
        best
    };
    chosen
        .iter()
        .map(|&i| tokens[i].surface.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Switch value of every token.
///
/// Sentences owned by one source go to it wholesale. When several sources
/// claim a sentence, each token goes to the source with the nearest anchor
/// (its speaking verbs in that sentence, else its mentions there), ties to
/// the earlier-mentioned source.
pub fn assign_gamma(tokens: &[Token], sources: &[SourceMention]) -> Vec<Gamma> {
    let num_sentences = tokens.iter().map(|t| t.sentence_index + 1).max().unwrap_or(0);
    let mut claims: Vec<Vec<usize>> = vec![Vec::new(); num_sentences];
    for (n, source) in sources.iter().enumerate() {
        for &s in &source.sentence_indices {
            if let Some(c) = claims.get_mut(s) {
                if c.last() != Some(&n) {
                    c.push(n);
                }
            }
        }
    }
    let sentence_of = |pos: usize| -> Option<usize> {
        tokens
            .binary_search_by_key(&pos, |t| t.position)
            .ok()
            .map(|i| tokens[i].sentence_index)
    };
    let sentence_start = |s: usize| tokens.iter().find(|t| t.sentence_index == s).map(|t| t.position);

    tokens
        .iter()
        .map(|token| {
            let claimants = &claims[token.sentence_index];
            match claimants.as_slice() {
                [] => Gamma::Background,
                [only] => Gamma::Source(*only),
                many => {
                    let s = token.sentence_index;
                    let distance = |n: usize| -> usize {
                        let in_sentence = |ps: &[usize]| -> Vec<usize> {
                            ps.iter().copied().filter(|&p| sentence_of(p) == Some(s)).collect()
                        };
                        let mut anchors = in_sentence(&sources[n].quote_verbs);
                        if anchors.is_empty() {
                            anchors = in_sentence(&sources[n].mention_positions);
                        }
                        if anchors.is_empty() {
                            anchors.extend(sentence_start(s));
                        }
                        anchors
                            .iter()
                            .map(|&a| a.abs_diff(token.position))
                            .min()
                            .unwrap_or(usize::MAX)
                    };
                    let best = many
                        .iter()
                        .copied()
                        .min_by_key(|&n| (distance(n), n))
                        .expect("at least two claimants");
                    Gamma::Source(best)
                }
            }
        })
        .collect()
}
