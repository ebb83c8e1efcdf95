use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedCorpus, Gamma};
use crate::error::{Error, Result};
use crate::model::{CountTables, Hyperparameters};
use crate::rng::{chain_rng, StmRng};

/// Which form of the document- and source-type conditionals to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerVariant {
    /// Each factor reads counts excluding the resampled unit, with no
    /// within-unit increments.
    #[default]
    AsPrinted,
    /// Exact blocked conditional: ascending factorials over repeated
    /// source-types and topics inside the unit.
    ExactBlock,
}

/// All latent assignments, flat in corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentState {
    pub doc_type: Vec<u32>,
    pub source_type: Vec<u32>,
    pub word_topic: Vec<u32>,
    pub clamped: Vec<bool>,
}

/// Per-variable visit counts accumulated after burn-in.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Posterior {
    pub samples: u64,
    /// `[D x T]`
    pub doc_type: Vec<u32>,
    /// `[N_sources x S]`
    pub source_type: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct ModelState {
    pub hyper: Hyperparameters,
    pub latent: LatentState,
    pub counts: CountTables,
    pub variant: SamplerVariant,
    pub rng_seed: u64,
    pub chain: u64,
    pub rng: StmRng,
    pub sweep: u64,
    pub posterior: Posterior,
    /// Log joint after each completed sweep.
    pub trace: Vec<f64>,
    pub(crate) scratch: Vec<f64>,
}

impl PartialEq for ModelState {
    fn eq(&self, other: &Self) -> bool {
        self.hyper == other.hyper
            && self.latent == other.latent
            && self.counts == other.counts
            && self.variant == other.variant
            && self.rng_seed == other.rng_seed
            && self.chain == other.chain
            && self.rng == other.rng
            && self.sweep == other.sweep
            && self.posterior == other.posterior
            && self.trace.len() == other.trace.len()
            && self.trace.iter().zip(&other.trace).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl ModelState {
    pub fn num_doc_types(&self) -> usize {
        self.hyper.num_doc_types()
    }

    pub fn num_source_types(&self) -> usize {
        self.hyper.num_source_types()
    }

    pub fn num_topics(&self) -> usize {
        self.hyper.num_topics()
    }

    /// Posterior-mode document-types (current assignment before any sample).
    pub fn doc_type_modes(&self) -> Vec<usize> {
        modes(&self.posterior.doc_type, self.num_doc_types(), &self.latent.doc_type, self.posterior.samples)
    }

    /// Posterior-mode source-types; clamped sources keep their labels.
    pub fn source_type_modes(&self) -> Vec<usize> {
        let mut out = modes(
            &self.posterior.source_type,
            self.num_source_types(),
            &self.latent.source_type,
            self.posterior.samples,
        );
        for (i, mode) in out.iter_mut().enumerate() {
            if self.latent.clamped[i] {
                *mode = self.latent.source_type[i] as usize;
            }
        }
        out
    }

    pub(crate) fn accumulate_posterior(&mut self) {
        let (t, s) = (self.num_doc_types(), self.num_source_types());
        for (d, &td) in self.latent.doc_type.iter().enumerate() {
            self.posterior.doc_type[d * t + td as usize] += 1;
        }
        for (i, &si) in self.latent.source_type.iter().enumerate() {
            self.posterior.source_type[i * s + si as usize] += 1;
        }
        self.posterior.samples += 1;
    }

    /// Checks the incremental tables against a from-scratch recount.
    pub fn check_counts(&self, corpus: &EncodedCorpus) -> Result<()> {
        let rebuilt = rebuild_counts(&self.latent, corpus, &self.hyper)?;
        if rebuilt != self.counts {
            return Err(Error::Inconsistent("incremental counts diverge from rebuilt counts".into()));
        }
        Ok(())
    }
}

fn modes(hist: &[u32], width: usize, current: &[u32], samples: u64) -> Vec<usize> {
    if samples == 0 {
        return current.iter().map(|&x| x as usize).collect();
    }
    hist.chunks(width)
        .map(|row| {
            let mut best = 0;
            for (i, &c) in row.iter().enumerate() {
                if c > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Random initial state for chain 0 of `seed`.
pub fn init_state(corpus: &EncodedCorpus, hyper: &Hyperparameters, seed: u64) -> Result<ModelState> {
    init_chain(corpus, hyper, seed, 0, SamplerVariant::default())
}

/// Uniform random doc-types, unclamped source-types and topics drawn from
/// the chain's stream; clamped sources take their labels.
pub fn init_chain(
    corpus: &EncodedCorpus,
    hyper: &Hyperparameters,
    seed: u64,
    chain: u64,
    variant: SamplerVariant,
) -> Result<ModelState> {
    hyper.validate()?;
    if corpus.num_docs() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let (t, s, k) = (hyper.num_doc_types(), hyper.num_source_types(), hyper.num_topics());
    if let Some(&c) = corpus.flat_clamps().iter().flatten().find(|&&c| c as usize >= s) {
        return Err(Error::LabelOutOfRange { index: c as usize, size: s });
    }
    let mut rng = chain_rng(seed, chain);
    let doc_type: Vec<u32> = (0..corpus.num_docs()).map(|_| rng.random_range(0..t) as u32).collect();
    let clamps = corpus.flat_clamps();
    let source_type: Vec<u32> = clamps
        .iter()
        .map(|c| match c {
            Some(label) => *label,
            None => rng.random_range(0..s) as u32,
        })
        .collect();
    let word_topic: Vec<u32> = (0..corpus.num_tokens()).map(|_| rng.random_range(0..k) as u32).collect();
    let latent = LatentState {
        doc_type,
        source_type,
        word_topic,
        clamped: clamps.iter().map(Option::is_some).collect(),
    };
    ModelState::with_rng(corpus, hyper, latent, seed, chain, rng, variant)
}

impl ModelState {
    /// State holding the given assignments, with a fresh stream for `chain`.
    pub fn from_latent(
        corpus: &EncodedCorpus,
        hyper: &Hyperparameters,
        latent: LatentState,
        seed: u64,
        chain: u64,
        variant: SamplerVariant,
    ) -> Result<ModelState> {
        hyper.validate()?;
        Self::with_rng(corpus, hyper, latent, seed, chain, chain_rng(seed, chain), variant)
    }

    fn with_rng(
        corpus: &EncodedCorpus,
        hyper: &Hyperparameters,
        latent: LatentState,
        seed: u64,
        chain: u64,
        rng: StmRng,
        variant: SamplerVariant,
    ) -> Result<ModelState> {
        let (t, s) = (hyper.num_doc_types(), hyper.num_source_types());
        let counts = rebuild_counts(&latent, corpus, hyper)?;
        Ok(ModelState {
            hyper: hyper.clone(),
            posterior: Posterior {
                samples: 0,
                doc_type: vec![0; corpus.num_docs() * t],
                source_type: vec![0; corpus.num_sources() * s],
            },
            latent,
            counts,
            variant,
            rng_seed: seed,
            chain,
            rng,
            sweep: 0,
            trace: Vec::new(),
            scratch: Vec::new(),
        })
    }
}

/// Recomputes every count table from the latent assignments.
pub fn rebuild_counts(latent: &LatentState, corpus: &EncodedCorpus, hyper: &Hyperparameters) -> Result<CountTables> {
    let (t, s, k) = (hyper.num_doc_types(), hyper.num_source_types(), hyper.num_topics());
    let shape_ok = latent.doc_type.len() == corpus.num_docs()
        && latent.source_type.len() == corpus.num_sources()
        && latent.clamped.len() == corpus.num_sources()
        && latent.word_topic.len() == corpus.num_tokens();
    if !shape_ok {
        return Err(Error::ShapeMismatch(format!(
            "latent arrays ({} docs, {} sources, {} tokens) do not match corpus ({}, {}, {})",
            latent.doc_type.len(),
            latent.source_type.len(),
            latent.word_topic.len(),
            corpus.num_docs(),
            corpus.num_sources(),
            corpus.num_tokens()
        )));
    }
    let out_of_range = latent.doc_type.iter().any(|&x| x as usize >= t)
        || latent.source_type.iter().any(|&x| x as usize >= s)
        || latent.word_topic.iter().any(|&x| x as usize >= k);
    if out_of_range {
        return Err(Error::ShapeMismatch("latent assignment outside its range".into()));
    }
    let mut counts = CountTables::zeros(t, s, k, corpus.vocab_size());
    for (d, doc) in corpus.docs().iter().enumerate() {
        let td = latent.doc_type[d] as usize;
        counts.document(td, true);
        let src0 = corpus.source_offset(d);
        for n in 0..doc.num_sources() {
            counts.source(td, latent.source_type[src0 + n] as usize, true);
        }
        let tok0 = corpus.token_offset(d);
        for (j, (&w, g)) in doc.words().iter().zip(doc.gamma()).enumerate() {
            let z = latent.word_topic[tok0 + j] as usize;
            counts.word(w as usize, z, true);
            match g {
                Gamma::Background => counts.background_word(td, z, true),
                Gamma::Source(n) => counts.source_word(latent.source_type[src0 + n] as usize, z, true),
            }
        }
    }
    Ok(counts)
}
