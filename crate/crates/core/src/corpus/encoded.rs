use crate::corpus::Gamma;
use crate::error::{Error, Result};

/// One document as the sampler sees it: word ids, switch values and
/// per-source clamps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedDoc {
    words: Vec<u32>,
    gamma: Vec<Gamma>,
    clamps: Vec<Option<u32>>,
    source_tokens: Vec<Vec<u32>>,
    background_tokens: Vec<u32>,
}

impl EncodedDoc {
    /// `clamps[n]` is the fixed source-type of source `n`, if labeled.
    pub fn new(words: Vec<u32>, gamma: Vec<Gamma>, clamps: Vec<Option<u32>>) -> Result<Self> {
        if words.len() != gamma.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} words but {} gamma values",
                words.len(),
                gamma.len()
            )));
        }
        let mut source_tokens = vec![Vec::new(); clamps.len()];
        let mut background_tokens = Vec::new();
        for (j, g) in gamma.iter().enumerate() {
            match g {
                Gamma::Background => background_tokens.push(j as u32),
                Gamma::Source(n) => source_tokens
                    .get_mut(*n)
                    .ok_or_else(|| Error::ShapeMismatch(format!("gamma references missing source {n}")))?
                    .push(j as u32),
            }
        }
        Ok(Self {
            words,
            gamma,
            clamps,
            source_tokens,
            background_tokens,
        })
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub fn gamma(&self) -> &[Gamma] {
        &self.gamma
    }

    pub fn clamps(&self) -> &[Option<u32>] {
        &self.clamps
    }

    pub fn num_sources(&self) -> usize {
        self.clamps.len()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Token indices attributed to source `n`.
    pub fn source_tokens(&self, n: usize) -> &[u32] {
        &self.source_tokens[n]
    }

    pub fn background_tokens(&self) -> &[u32] {
        &self.background_tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCorpus {
    docs: Vec<EncodedDoc>,
    vocab_size: usize,
    num_labels: usize,
    token_offsets: Vec<usize>,
    source_offsets: Vec<usize>,
}

impl EncodedCorpus {
    pub fn new(docs: Vec<EncodedDoc>, vocab_size: usize, num_labels: usize) -> Result<Self> {
        let mut token_offsets = Vec::with_capacity(docs.len() + 1);
        let mut source_offsets = Vec::with_capacity(docs.len() + 1);
        let (mut tokens, mut sources) = (0, 0);
        for doc in &docs {
            token_offsets.push(tokens);
            source_offsets.push(sources);
            tokens += doc.len();
            sources += doc.num_sources();
            if let Some(&w) = doc.words.iter().find(|&&w| w as usize >= vocab_size) {
                return Err(Error::ShapeMismatch(format!(
                    "word id {w} outside vocabulary of size {vocab_size}"
                )));
            }
            if let Some(c) = doc.clamps.iter().flatten().find(|&&c| c as usize >= num_labels) {
                return Err(Error::LabelOutOfRange {
                    index: *c as usize,
                    size: num_labels,
                });
            }
        }
        token_offsets.push(tokens);
        source_offsets.push(sources);
        Ok(Self {
            docs,
            vocab_size,
            num_labels,
            token_offsets,
            source_offsets,
        })
    }

    pub fn docs(&self) -> &[EncodedDoc] {
        &self.docs
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Size of the label space the clamps index into.
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_tokens(&self) -> usize {
        *self.token_offsets.last().unwrap_or(&0)
    }

    pub fn num_sources(&self) -> usize {
        *self.source_offsets.last().unwrap_or(&0)
    }

    /// Offset of document `d`'s first token in flat per-token arrays.
    pub fn token_offset(&self, d: usize) -> usize {
        self.token_offsets[d]
    }

    /// Offset of document `d`'s first source in flat per-source arrays.
    pub fn source_offset(&self, d: usize) -> usize {
        self.source_offsets[d]
    }

    /// Flat clamp vector over all sources.
    pub fn flat_clamps(&self) -> Vec<Option<u32>> {
        self.docs.iter().flat_map(|d| d.clamps.iter().copied()).collect()
    }

    /// Same documents with every clamp replaced by `clamps` (flat order).
    pub fn with_clamps(&self, clamps: &[Option<u32>]) -> Result<Self> {
        if clamps.len() != self.num_sources() {
            return Err(Error::ShapeMismatch(format!(
                "{} clamps for {} sources",
                clamps.len(),
                self.num_sources()
            )));
        }
        let docs = self
            .docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                let start = self.source_offset(d);
                EncodedDoc {
                    clamps: clamps[start..start + doc.num_sources()].to_vec(),
                    ..doc.clone()
                }
            })
            .collect();
        Self::new(docs, self.vocab_size, self.num_labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_tokens_by_gamma() {
        let doc = EncodedDoc::new(
            vec![0, 1, 2, 1],
            vec![Gamma::Source(1), Gamma::Background, Gamma::Source(0), Gamma::Source(1)],
            vec![None, Some(2)],
        )
        .unwrap();
        assert_eq!(doc.source_tokens(0), &[2]);
        assert_eq!(doc.source_tokens(1), &[0, 3]);
        assert_eq!(doc.background_tokens(), &[1]);
        assert!(EncodedDoc::new(vec![0], vec![Gamma::Source(3)], vec![None]).is_err());
    }

    #[test]
    fn corpus_offsets_and_range_checks() {
        let a = EncodedDoc::new(vec![0, 1], vec![Gamma::Background; 2], vec![None]).unwrap();
        let b = EncodedDoc::new(vec![2], vec![Gamma::Source(0)], vec![Some(1), None]).unwrap();
        let corpus = EncodedCorpus::new(vec![a.clone(), b.clone()], 3, 2).unwrap();
        assert_eq!(corpus.num_tokens(), 3);
        assert_eq!(corpus.num_sources(), 3);
        assert_eq!(corpus.token_offset(1), 2);
        assert_eq!(corpus.source_offset(1), 1);
        assert_eq!(corpus.flat_clamps(), vec![None, Some(1), None]);
        assert!(EncodedCorpus::new(vec![a.clone()], 1, 2).is_err());
        assert!(matches!(
            EncodedCorpus::new(vec![b], 3, 1),
            Err(Error::LabelOutOfRange { index: 1, size: 1 })
        ));
        let unclamped = corpus.with_clamps(&[None, None, None]).unwrap();
        assert!(unclamped.flat_clamps().iter().all(Option::is_none));
    }
}
