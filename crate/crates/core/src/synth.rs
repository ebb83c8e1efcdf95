//! Forward simulation of the generative story with known latent assignments.

use std::collections::HashMap;
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocabulary, Corpus, Document, Gamma, SourceMention, StopwordPolicy, Token};
use crate::error::{Error, Result};
use crate::model::{Hyperparameters, LatentState};
use crate::ontology::LabelSpace;
use crate::par::Execution;
use crate::rng::{stream_rng, StmRng, CLAMP, DOC_BASE, PARAMETERS};
use crate::sampling::sample_weights;

/// Distribution of a non-negative count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CountDistribution {
    /// `offset + Poisson(mean)`
    Poisson { mean: f64, offset: usize },
    Fixed { value: usize },
}

impl CountDistribution {
    pub fn validate(&self, what: &str) -> Result<()> {
        if let CountDistribution::Poisson { mean, .. } = self {
            if !(mean.is_finite() && *mean >= 0.0) {
                return Err(Error::InvalidArgument(format!("{what}: Poisson mean {mean} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            CountDistribution::Fixed { value } => value,
            CountDistribution::Poisson { mean, offset } if mean == 0.0 => offset,
            CountDistribution::Poisson { mean, offset } => {
                let draw: f64 = Poisson::new(mean).expect("validated mean").sample(rng);
                offset + draw as usize
            }
        }
    }
}

/// Observable shape of generated documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthOptions {
    pub vocab_size: usize,
    pub sources_per_doc: CountDistribution,
    pub words_per_doc: CountDistribution,
    /// Probability that a token (or a sentence, when blocked) belongs to a source.
    pub source_word_fraction: f64,
    /// Tokens per rendered sentence.
    pub sentence_length: usize,
    /// Draw gamma once per sentence instead of once per token.
    pub blocked_gamma: bool,
    /// Document `d` is dated `start_date + floor(d * span_days / D)` days.
    pub start_date: NaiveDate,
    pub span_days: u32,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            vocab_size: 1000,
            sources_per_doc: CountDistribution::Poisson { mean: 3.0, offset: 1 },
            words_per_doc: CountDistribution::Poisson { mean: 200.0, offset: 0 },
            source_word_fraction: 0.5,
            sentence_length: 20,
            blocked_gamma: false,
            start_date: NaiveDate::from_ymd_opt(1999, 1, 1).expect("valid date"),
            span_days: 1461,
        }
    }
}

impl SynthOptions {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 {
            return Err(Error::InvalidArgument("vocab_size must be at least 1".into()));
        }
        if self.sentence_length == 0 {
            return Err(Error::InvalidArgument("sentence_length must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.source_word_fraction) {
            return Err(Error::InvalidArgument(format!(
                "source_word_fraction {} must lie in [0, 1]",
                self.source_word_fraction
            )));
        }
        self.sources_per_doc.validate("sources_per_doc")?;
        self.words_per_doc.validate("words_per_doc")
    }
}

/// Fixed distributions of the generative story.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParameters {
    /// `[T]`
    pub p_t: Vec<f64>,
    /// `[T][S]`
    pub p_s: Vec<Vec<f64>>,
    /// `[S][K]`
    pub p_z_source: Vec<Vec<f64>>,
    /// `[T][K]`
    pub p_z_background: Vec<Vec<f64>>,
    /// `[K][V]`
    pub topics: Vec<Vec<f64>>,
    pub options: SynthOptions,
}

impl TrueParameters {
    pub fn num_doc_types(&self) -> usize {
        self.p_t.len()
    }

    pub fn num_source_types(&self) -> usize {
        self.p_z_source.len()
    }

    pub fn num_topics(&self) -> usize {
        self.topics.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.options.validate()?;
        let (t, s, k, v) = (
            self.num_doc_types(),
            self.num_source_types(),
            self.num_topics(),
            self.options.vocab_size,
        );
        let checks: [(&str, Vec<&Vec<f64>>, usize, usize); 5] = [
            ("p_t", vec![&self.p_t], 1, t),
            ("p_s", self.p_s.iter().collect(), t, s),
            ("p_z_source", self.p_z_source.iter().collect(), s, k),
            ("p_z_background", self.p_z_background.iter().collect(), t, k),
            ("topics", self.topics.iter().collect(), k, v),
        ];
        for (name, rows, n_rows, width) in checks {
            if rows.len() != n_rows || width == 0 {
                return Err(Error::ShapeMismatch(format!("{name} has {} rows, expected {n_rows}", rows.len())));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::ShapeMismatch(format!("{name} row {i} has {} entries, expected {width}", row.len())));
                }
                let total: f64 = row.iter().sum();
                if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("{name} row {i} is not a probability vector")));
                }
            }
        }
        Ok(())
    }
}

/// Ground truth for one generated document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub doc_id: String,
    pub doc_type: usize,
    /// Canonical labels, one per source in document order.
    pub source_types: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub truth: Vec<TruthRecord>,
    /// True assignments, aligned with `corpus.encode()`.
    pub latent: LatentState,
}

/// Symmetric Dirichlet draw sharpened by `p^separation`, renormalized.
///
/// Works in log space so tiny concentrations do not underflow to all-zero rows.
pub fn sharpened_dirichlet<R: Rng + ?Sized>(alpha: f64, dim: usize, separation: f64, rng: &mut R) -> Vec<f64> {
    let gamma = GammaDist::new(alpha + 1.0, 1.0).expect("positive shape");
    let logs: Vec<f64> = (0..dim)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let u: f64 = rng.random::<f64>();
            separation * (g.ln() + (1.0 - u).ln() / alpha)
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = p.iter().sum();
    for x in &mut p {
        *x /= total;
    }
    p
}

/// Draws every distribution from its symmetric Dirichlet (the first entry of
/// each concentration vector), then sharpens with `separation`.
pub fn sample_parameters(
    hyper: &Hyperparameters,
    options: &SynthOptions,
    seed: u64,
    separation: f64,
) -> Result<TrueParameters> {
    hyper.validate()?;
    options.validate()?;
    if !(separation.is_finite() && separation >= 1.0) {
        return Err(Error::InvalidArgument(format!("separation {separation} must be >= 1")));
    }
    let (t, s, k, v) = (
        hyper.num_doc_types(),
        hyper.num_source_types(),
        hyper.num_topics(),
        options.vocab_size,
    );
    let mut rng = stream_rng(seed, PARAMETERS);
    let mut rows = |alpha: f64, n: usize, dim: usize| -> Vec<Vec<f64>> {
        (0..n).map(|_| sharpened_dirichlet(alpha, dim, separation, &mut rng)).collect()
    };
    let p_t = rows(hyper.doc_type[0], 1, t).remove(0);
    let p_s = rows(hyper.source_type[0], t, s);
    let p_z_source = rows(hyper.topic[0], s, k);
    let p_z_background = rows(hyper.topic[0], t, k);
    let topics = rows(hyper.word, k, v);
    Ok(TrueParameters {
        p_t,
        p_s,
        p_z_source,
        p_z_background,
        topics,
        options: options.clone(),
    })
}

/// Lemma rendering of vocabulary id `w`.
pub fn word_form(w: usize, vocab_size: usize) -> String {
    let width = vocab_size.saturating_sub(1).to_string().len();
    format!("w{w:0width$}")
}

struct GeneratedDoc {
    document: Document,
    doc_type: usize,
    source_types: Vec<usize>,
    topics: Vec<u32>,
}

fn generate_document(params: &TrueParameters, d: usize, num_docs: usize, rng: &mut StmRng) -> Result<GeneratedDoc> {
    let opts = &params.options;
    let t = sample_weights(&params.p_t, rng, "document-type")?;
    let n_sources = opts.sources_per_doc.sample(rng);
    let source_types = (0..n_sources)
        .map(|_| sample_weights(&params.p_s[t], rng, "source-type"))
        .collect::<Result<Vec<_>>>()?;
    let n_words = opts.words_per_doc.sample(rng);
    let mut tokens = Vec::with_capacity(n_words);
    let mut gamma = Vec::with_capacity(n_words);
    let mut topics = Vec::with_capacity(n_words);
    let mut sentences: Vec<Vec<usize>> = vec![Vec::new(); n_sources];
    let mut current = Gamma::Background;
    for j in 0..n_words {
        let sentence = j / opts.sentence_length;
        if !opts.blocked_gamma || j % opts.sentence_length == 0 {
            current = if n_sources > 0 && rng.random::<f64>() < opts.source_word_fraction {
                Gamma::Source(rng.random_range(0..n_sources))
            } else {
                Gamma::Background
            };
        }
        let z = match current {
            Gamma::Source(n) => {
                if sentences[n].last() != Some(&sentence) {
                    sentences[n].push(sentence);
                }
                sample_weights(&params.p_z_source[source_types[n]], rng, "topic")?
            }
            Gamma::Background => sample_weights(&params.p_z_background[t], rng, "topic")?,
        };
        let w = sample_weights(&params.topics[z], rng, "word")?;
        let lemma = word_form(w, opts.vocab_size);
        tokens.push(Token {
            surface: lemma.clone(),
            lemma,
            sentence_index: sentence,
            position: j,
            is_stopword: false,
        });
        gamma.push(current);
        topics.push(z as u32);
    }
    let sources = sentences
        .into_iter()
        .enumerate()
        .map(|(n, sentence_indices)| SourceMention {
            canonical_name: format!("person {n}"),
            chain_id: n,
            sentence_indices: if sentence_indices.is_empty() { vec![0] } else { sentence_indices },
            gold_label: None,
            clamped: false,
            quote_verbs: Vec::new(),
            mention_positions: Vec::new(),
        })
        .collect();
    let offset = d as u64 * opts.span_days as u64 / num_docs.max(1) as u64;
    let timestamp = opts.start_date.checked_add_days(chrono::Days::new(offset));
    Ok(GeneratedDoc {
        document: Document {
            doc_id: format!("doc{d:06}"),
            timestamp,
            tokens,
            sources,
            gamma,
            gold_doc_type: None,
        },
        doc_type: t,
        source_types,
        topics,
    })
}

/// Runs the generative story for `num_docs` documents. Document `d` draws
/// from its own stream, so the output does not depend on `exec`.
pub fn generate_corpus(
    params: &TrueParameters,
    label_space: &LabelSpace,
    num_docs: usize,
    seed: u64,
    exec: Execution,
) -> Result<SyntheticCorpus> {
    params.validate()?;
    if num_docs == 0 {
        return Err(Error::InvalidArgument("at least one document is required".into()));
    }
    if label_space.len() != params.num_source_types() {
        return Err(Error::ShapeMismatch(format!(
            "label space has {} labels but the parameters have {} source-types",
            label_space.len(),
            params.num_source_types()
        )));
    }
    let generated = exec.map_range(num_docs, |d| {
        let mut rng = stream_rng(seed, DOC_BASE + d as u64);
        generate_document(params, d, num_docs, &mut rng)
    });
    let generated = generated.into_iter().collect::<Result<Vec<_>>>()?;
    let mut truth = Vec::with_capacity(num_docs);
    let mut latent = LatentState {
        doc_type: Vec::with_capacity(num_docs),
        source_type: Vec::new(),
        word_topic: Vec::new(),
        clamped: Vec::new(),
    };
    let mut documents = Vec::with_capacity(num_docs);
    for g in generated {
        truth.push(TruthRecord {
            doc_id: g.document.doc_id.clone(),
            doc_type: g.doc_type,
            source_types: g.source_types.iter().map(|&s| label_space.members()[s].label()).collect(),
        });
        latent.doc_type.push(g.doc_type as u32);
        latent.source_type.extend(g.source_types.iter().map(|&s| s as u32));
        latent.clamped.extend(std::iter::repeat_n(false, g.source_types.len()));
        latent.word_topic.extend(g.topics);
        documents.push(g.document);
    }
    let vocabulary = build_vocabulary(&documents, 1, StopwordPolicy::Keep)?;
    let corpus = Corpus::new(documents, vocabulary, label_space.clone())?;
    Ok(SyntheticCorpus { corpus, truth, latent })
}

/// Clamps `round(fraction * N)` sources chosen uniformly without replacement
/// to their true labels; every other source is left unlabeled.
pub fn clamp_fraction(corpus: &Corpus, truth: &[TruthRecord], fraction: f64, seed: u64) -> Result<Corpus> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("clamp fraction {fraction} must lie in [0, 1]")));
    }
    let by_id: HashMap<&str, &TruthRecord> = truth.iter().map(|r| (r.doc_id.as_str(), r)).collect();
    let mut labels = Vec::new();
    for doc in &corpus.documents {
        let record = by_id
            .get(doc.doc_id.as_str())
            .ok_or_else(|| Error::InvalidArgument(format!("no truth record for document `{}`", doc.doc_id)))?;
        if record.source_types.len() != doc.sources.len() {
            return Err(Error::ShapeMismatch(format!(
                "document `{}` has {} sources but its truth record lists {}",
                doc.doc_id,
                doc.sources.len(),
                record.source_types.len()
            )));
        }
        labels.extend(record.source_types.iter().cloned());
    }
    let total = labels.len();
    let chosen_count = ((fraction * total as f64).round() as usize).min(total);
    let mut rng = stream_rng(seed, CLAMP);
    let mut chosen = vec![false; total];
    for i in index::sample(&mut rng, total, chosen_count) {
        chosen[i] = true;
    }
    let mut out = corpus.clone();
    let mut i = 0;
    for doc in &mut out.documents {
        for source in &mut doc.sources {
            source.clamped = chosen[i];
            source.gold_label = chosen[i].then(|| labels[i].clone());
            i += 1;
        }
    }
    Corpus::new(out.documents, out.vocabulary, out.label_space)
}

/// Matches truth records to documents by id.
///
/// Returns the true document-types and the flat true source labels (label
/// indices) in corpus order. Records for sourceless documents that are
/// absent from `doc_ids` are skipped, since corpus building drops such
/// documents; any other unknown id is an error.
pub fn align_truth(
    doc_ids: &[String],
    sources_per_doc: &[usize],
    truth: &[TruthRecord],
    labels: &LabelSpace,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let position: HashMap<&str, usize> = doc_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut doc_types = vec![None; doc_ids.len()];
    let mut sources: Vec<Option<Vec<usize>>> = vec![None; doc_ids.len()];
    for record in truth {
        let Some(&d) = position.get(record.doc_id.as_str()) else {
            if record.source_types.is_empty() {
                continue;
            }
            return Err(Error::InvalidArgument(format!(
                "truth references unknown document `{}`",
                record.doc_id
            )));
        };
        if record.source_types.len() != sources_per_doc[d] {
            return Err(Error::ShapeMismatch(format!(
                "document `{}` has {} sources but its truth record lists {}",
                record.doc_id,
                sources_per_doc[d],
                record.source_types.len()
            )));
        }
        doc_types[d] = Some(record.doc_type);
        sources[d] = Some(
            record
                .source_types
                .iter()
                .map(|l| labels.parse(l).map(|st| st.index))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let mut flat_types = Vec::with_capacity(doc_ids.len());
    let mut flat_sources = Vec::new();
    for (d, id) in doc_ids.iter().enumerate() {
        match (doc_types[d], sources[d].take()) {
            (Some(t), Some(s)) => {
                flat_types.push(t);
                flat_sources.extend(s);
            }
            _ => return Err(Error::InvalidArgument(format!("no truth record for document `{id}`"))),
        }
    }
    Ok((flat_types, flat_sources))
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<Vec<TruthRecord>> {
    crate::corpus::io::read_jsonl(path)
}

pub fn write_truth(path: impl AsRef<Path>, truth: &[TruthRecord]) -> Result<()> {
    crate::corpus::io::write_jsonl(path, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::make_default_label_space;

    fn small_options() -> SynthOptions {
        SynthOptions {
            vocab_size: 30,
            sources_per_doc: CountDistribution::Fixed { value: 2 },
            words_per_doc: CountDistribution::Fixed { value: 12 },
            ..SynthOptions::default()
        }
    }

    #[test]
    fn separation_one_is_a_plain_dirichlet_draw() {
        // same stream, same draws: only the exponent differs
        let mut a = stream_rng(5, 0);
        let mut b = stream_rng(5, 0);
        let plain = sharpened_dirichlet(0.5, 6, 1.0, &mut a);
        let sharp = sharpened_dirichlet(0.5, 6, 4.0, &mut b);
        let powered: Vec<f64> = plain.iter().map(|p| p.powi(4)).collect();
        let total: f64 = powered.iter().sum();
        for (x, y) in powered.iter().zip(&sharp) {
            assert!((x / total - y).abs() < 1e-12);
        }
    }

    #[test]
    fn large_separation_is_nearly_one_hot() {
        for seed in 0..20 {
            let mut last = 0.0;
            for separation in [1.0, 10.0, 1e3, 1e6] {
                let p = sharpened_dirichlet(1.0, 5, separation, &mut stream_rng(seed, 0));
                let max = p.iter().cloned().fold(0.0, f64::max);
                assert!(max >= last);
                last = max;
            }
            assert!(last > 0.99, "{last}");
        }
    }

    #[test]
    fn rows_are_stochastic() {
        let hyper = Hyperparameters::with_defaults(4, 5, 6).unwrap();
        let params = sample_parameters(&hyper, &small_options(), 3, 2.0).unwrap();
        params.validate().unwrap();
        assert_eq!(params.p_s.len(), 4);
        assert_eq!(params.topics[0].len(), 30);
        assert!(sample_parameters(&hyper, &small_options(), 3, 0.5).is_err());
    }

    #[test]
    fn one_hot_doc_type_prior() {
        let hyper = Hyperparameters::with_defaults(3, 2, 2).unwrap();
        let mut params = sample_parameters(&hyper, &small_options(), 3, 1.0).unwrap();
        params.p_t = vec![0.0, 1.0, 0.0];
        let labels = make_default_label_space().truncated(2).unwrap();
        let synth = generate_corpus(&params, &labels, 50, 9, Execution::Sequential).unwrap();
        assert!(synth.truth.iter().all(|r| r.doc_type == 1));
    }

    #[test]
    fn zero_source_fraction_gives_background_only() {
        let hyper = Hyperparameters::with_defaults(2, 2, 2).unwrap();
        let options = SynthOptions {
            source_word_fraction: 0.0,
            ..small_options()
        };
        let params = sample_parameters(&hyper, &options, 3, 1.0).unwrap();
        let labels = make_default_label_space().truncated(2).unwrap();
        let synth = generate_corpus(&params, &labels, 20, 9, Execution::Sequential).unwrap();
        assert!(synth.corpus.documents.iter().all(|d| d.gamma.iter().all(|g| *g == Gamma::Background)));
    }

    #[test]
    fn blocked_gamma_is_constant_within_sentences() {
        let hyper = Hyperparameters::with_defaults(2, 3, 2).unwrap();
        let options = SynthOptions {
            blocked_gamma: true,
            sentence_length: 5,
            words_per_doc: CountDistribution::Fixed { value: 40 },
            ..small_options()
        };
        let params = sample_parameters(&hyper, &options, 3, 1.0).unwrap();
        let labels = make_default_label_space().truncated(3).unwrap();
        let synth = generate_corpus(&params, &labels, 10, 4, Execution::Sequential).unwrap();
        for doc in &synth.corpus.documents {
            for block in doc.gamma.chunks(5) {
                assert!(block.iter().all(|g| *g == block[0]));
            }
            doc.validate().unwrap();
        }
    }

    #[test]
    fn generation_is_seeded_and_mode_independent() {
        let hyper = Hyperparameters::with_defaults(3, 4, 5).unwrap();
        let params = sample_parameters(&hyper, &small_options(), 3, 2.0).unwrap();
        let labels = make_default_label_space().truncated(4).unwrap();
        let a = generate_corpus(&params, &labels, 30, 8, Execution::Sequential).unwrap();
        let b = generate_corpus(&params, &labels, 30, 8, Execution::Parallel).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.latent, b.latent);
        let c = generate_corpus(&params, &labels, 30, 9, Execution::Sequential).unwrap();
        assert_ne!(a.truth, c.truth);
    }

    #[test]
    fn clamp_extremes_and_count() {
        let hyper = Hyperparameters::with_defaults(2, 3, 4).unwrap();
        let params = sample_parameters(&hyper, &small_options(), 1, 1.0).unwrap();
        let labels = make_default_label_space().truncated(3).unwrap();
        let synth = generate_corpus(&params, &labels, 25, 2, Execution::Sequential).unwrap();
        let none = clamp_fraction(&synth.corpus, &synth.truth, 0.0, 1).unwrap();
        assert!(none.documents.iter().flat_map(|d| &d.sources).all(|s| !s.clamped));
        let all = clamp_fraction(&synth.corpus, &synth.truth, 1.0, 1).unwrap();
        let flat: Vec<String> = all
            .documents
            .iter()
            .flat_map(|d| &d.sources)
            .map(|s| {
                assert!(s.clamped);
                s.gold_label.clone().unwrap()
            })
            .collect();
        let truth: Vec<String> = synth.truth.iter().flat_map(|r| r.source_types.clone()).collect();
        assert_eq!(flat, truth);
        let some = clamp_fraction(&synth.corpus, &synth.truth, 0.3, 1).unwrap();
        assert_eq!(some.documents.iter().flat_map(|d| &d.sources).filter(|s| s.clamped).count(), 15);
        assert!(clamp_fraction(&synth.corpus, &synth.truth, 1.5, 1).is_err());
    }

    #[test]
    fn align_truth_rejects_unknown_documents() {
        let labels = make_default_label_space().truncated(2).unwrap();
        let ids = vec!["a".to_string()];
        let label = labels.members()[1].label();
        let ok = vec![TruthRecord {
            doc_id: "a".into(),
            doc_type: 3,
            source_types: vec![label.clone()],
        }];
        assert_eq!(align_truth(&ids, &[1], &ok, &labels).unwrap(), (vec![3], vec![1]));
        let mut extra = ok.clone();
        extra.push(TruthRecord {
            doc_id: "zzz".into(),
            doc_type: 0,
            source_types: vec![label],
        });
        assert!(align_truth(&ids, &[1], &extra, &labels).is_err());
        assert!(align_truth(&ids, &[1], &[], &labels).is_err());
    }
}
