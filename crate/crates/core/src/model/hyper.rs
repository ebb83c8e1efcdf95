use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DOC_TYPE_PRIOR: f64 = 1.0;
pub const DEFAULT_SOURCE_TYPE_PRIOR: f64 = 0.1;
pub const DEFAULT_TOPIC_PRIOR: f64 = 0.1;
pub const DEFAULT_WORD_PRIOR: f64 = 0.01;
pub const DEFAULT_DOC_TYPES: usize = 20;
pub const DEFAULT_TOPICS: usize = 25;

/// Dirichlet concentrations. The vector lengths fix the number of
/// document-types, source-types and topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub doc_type: Vec<f64>,
    pub source_type: Vec<f64>,
    pub topic: Vec<f64>,
    pub word: f64,
}

impl Hyperparameters {
    pub fn new(doc_type: Vec<f64>, source_type: Vec<f64>, topic: Vec<f64>, word: f64) -> Result<Self> {
        let hyper = Self {
            doc_type,
            source_type,
            topic,
            word,
        };
        hyper.validate()?;
        Ok(hyper)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn symmetric(
        num_doc_types: usize,
        num_source_types: usize,
        num_topics: usize,
        doc_type: f64,
        source_type: f64,
        topic: f64,
        word: f64,
    ) -> Result<Self> {
        Self::new(
            vec![doc_type; num_doc_types],
            vec![source_type; num_source_types],
            vec![topic; num_topics],
            word,
        )
    }

    /// Default concentrations for the given shape.
    pub fn with_defaults(num_doc_types: usize, num_source_types: usize, num_topics: usize) -> Result<Self> {
        Self::symmetric(
            num_doc_types,
            num_source_types,
            num_topics,
            DEFAULT_DOC_TYPE_PRIOR,
            DEFAULT_SOURCE_TYPE_PRIOR,
            DEFAULT_TOPIC_PRIOR,
            DEFAULT_WORD_PRIOR,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("document-type", &self.doc_type),
            ("source-type", &self.source_type),
            ("topic", &self.topic),
        ] {
            if v.is_empty() {
                return Err(Error::InvalidHyperparameters(format!("{name} prior has no components")));
            }
            if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(Error::InvalidHyperparameters(format!(
                    "{name} concentration {x} is not strictly positive"
                )));
            }
        }
        if !(self.word.is_finite() && self.word > 0.0) {
            return Err(Error::InvalidHyperparameters(format!(
                "word concentration {} is not strictly positive",
                self.word
            )));
        }
        Ok(())
    }

    pub fn num_doc_types(&self) -> usize {
        self.doc_type.len()
    }

    pub fn num_source_types(&self) -> usize {
        self.source_type.len()
    }

    pub fn num_topics(&self) -> usize {
        self.topic.len()
    }
}
