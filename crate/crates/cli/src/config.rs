//! Run configuration file.
//!
//! A single TOML file; every key is optional and command-line flags win
//! over file values. Schema:
//!
//! ```toml
//! seed = 7
//! labels_file = "labels.txt"      # source-type label space, one label per line
//!
//! [model]
//! doc_types = 20
//! topics = 25
//! source_types = 8                # keep only the first N labels
//! doc_type_prior = 1.0            # scalar or one value per document-type
//! source_type_prior = 0.1         # scalar or one value per source-type
//! topic_prior = 0.1               # scalar or one value per topic
//! word_prior = 0.01
//! exact_block = false
//!
//! [train]
//! sweeps = 2000
//! burn_in = 500
//! lag = 10
//! chains = 1
//! min_count = 1
//! keep_stopwords = false
//!
//! [generate]
//! documents = 100
//! separation = 3.0
//! clamp_fraction = 0.0
//! doc_type_distribution = [0.5, 0.5]   # fixed instead of drawn; must sum to 1
//!
//! [generate.shape]
//! vocab_size = 1000
//! sources_per_doc = { kind = "poisson", mean = 3.0, offset = 1 }
//! words_per_doc = { kind = "fixed", value = 200 }
//! source_word_fraction = 0.5
//! sentence_length = 20
//! blocked_gamma = false
//! start_date = "1999-01-01"
//! span_days = 1461
//!
//! [extract]
//! speaking_verbs = "verbs.txt"
//!
//! [evaluate]
//! align_fraction = 0.1
//!
//! [analyze]
//! bucket_months = 18
//! top = 3
//! labels = ["government-decision-maker"]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stm_core::synth::SynthOptions;
use toml::Spanned;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Prior {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub labels_file: Option<PathBuf>,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub generate: GenerateConfig,
    pub extract: ExtractConfig,
    pub evaluate: EvaluateConfig,
    pub analyze: AnalyzeConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub doc_types: Option<usize>,
    pub topics: Option<usize>,
    pub source_types: Option<usize>,
    pub doc_type_prior: Option<Prior>,
    pub source_type_prior: Option<Prior>,
    pub topic_prior: Option<Prior>,
    pub word_prior: Option<f64>,
    pub exact_block: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub sweeps: Option<u64>,
    pub burn_in: Option<u64>,
    pub lag: Option<u64>,
    pub chains: Option<u64>,
    pub min_count: Option<usize>,
    pub keep_stopwords: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub documents: usize,
    pub separation: f64,
    pub clamp_fraction: f64,
    pub doc_type_distribution: Option<Spanned<Vec<f64>>>,
    pub shape: SynthOptions,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            documents: 100,
            separation: 3.0,
            clamp_fraction: 0.0,
            doc_type_distribution: None,
            shape: SynthOptions::default(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub speaking_verbs: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub align_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub bucket_months: Option<u32>,
    pub top: Option<usize>,
    pub labels: Vec<String>,
}

/// A parsed config plus its source text for line-precise messages.
#[derive(Debug, Default)]
pub struct LoadedConfig {
    pub config: Config,
    origin: String,
    text: String,
}

impl LoadedConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let config: Config = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            let message = e.message().trim().to_string();
            match line {
                Some(line) => CliError::validation(format!("{origin}:{line}: {message}")),
                None => CliError::validation(format!("{origin}: {message}")),
            }
        })?;
        let loaded = Self {
            config,
            origin: origin.to_string(),
            text: text.to_string(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(dist) = &self.config.generate.doc_type_distribution {
            let values = dist.get_ref();
            let total: f64 = values.iter().sum();
            let valid = !values.is_empty()
                && values.iter().all(|p| p.is_finite() && *p >= 0.0)
                && (total - 1.0).abs() <= 1e-9;
            if !valid {
                return Err(self.error_at(
                    dist.span().start,
                    format!("generate.doc_type_distribution is not a probability simplex (entries sum to {total})"),
                ));
            }
        }
        Ok(())
    }

    pub fn error_at(&self, offset: usize, message: String) -> CliError {
        CliError::validation(format!("{}:{}: {message}", self.origin, line_of(&self.text, offset)))
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Expands a scalar or vector prior to `n` components. A vector fixes `n`
/// when no count was given elsewhere.
pub fn expand_prior(name: &str, prior: Option<&Prior>, n: Option<usize>, default: f64) -> Result<Vec<f64>, CliError> {
    match (prior, n) {
        (Some(Prior::Vector(v)), Some(n)) if v.len() != n => Err(CliError::validation(format!(
            "model.{name} has {} entries but {n} are required",
            v.len()
        ))),
        (Some(Prior::Vector(v)), _) => Ok(v.clone()),
        (Some(Prior::Scalar(x)), Some(n)) => Ok(vec![*x; n]),
        (None, Some(n)) => Ok(vec![default; n]),
        (_, None) => Err(CliError::validation(format!("model.{name}: number of components is unknown"))),
    }
}
