//! Collapsed Gibbs updates for document-types, source-types and word-topics.

use crate::corpus::{EncodedCorpus, Gamma};
use crate::error::{Error, Result};
use crate::model::{CountTables, Hyperparameters, LatentState, ModelState, SamplerVariant};
use crate::sampling::{normalize_log_weights, sample_log_weights, sample_weights};

/// Sparse histogram of small category ids.
fn histogram(ids: impl Iterator<Item = usize>, width: usize) -> Vec<(usize, u32)> {
    let mut dense = vec![0u32; width];
    for id in ids {
        dense[id] += 1;
    }
    dense
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .collect()
}

/// `ln` of the product of `m` factors `base, base+1, ...` (exact) or
/// `m * ln(base)` (as printed).
#[inline]
fn log_rising(base: f64, m: u32, variant: SamplerVariant) -> f64 {
    match variant {
        SamplerVariant::AsPrinted => m as f64 * base.ln(),
        SamplerVariant::ExactBlock => (0..m).map(|i| (base + i as f64).ln()).sum(),
    }
}

// --- document-type ---------------------------------------------------------

fn doc_contribution(counts: &mut CountTables, latent: &LatentState, corpus: &EncodedCorpus, d: usize, inc: bool) {
    let doc = &corpus.docs()[d];
    let td = latent.doc_type[d] as usize;
    counts.document(td, inc);
    let src0 = corpus.source_offset(d);
    for n in 0..doc.num_sources() {
        counts.source(td, latent.source_type[src0 + n] as usize, inc);
    }
    let tok0 = corpus.token_offset(d);
    for &j in doc.background_tokens() {
        counts.background_word(td, latent.word_topic[tok0 + j as usize] as usize, inc);
    }
}

/// Log-weights over document-types for `d`; `counts` must exclude `d`.
fn doc_type_log_weights(
    counts: &CountTables,
    hyper: &Hyperparameters,
    variant: SamplerVariant,
    latent: &LatentState,
    corpus: &EncodedCorpus,
    d: usize,
    out: &mut Vec<f64>,
) {
    let doc = &corpus.docs()[d];
    let (t_n, s_n, k_n) = (hyper.num_doc_types(), hyper.num_source_types(), hyper.num_topics());
    let src0 = corpus.source_offset(d);
    let tok0 = corpus.token_offset(d);
    let sources = histogram(
        (0..doc.num_sources()).map(|n| latent.source_type[src0 + n] as usize),
        s_n,
    );
    let topics = histogram(
        doc.background_tokens().iter().map(|&j| latent.word_topic[tok0 + j as usize] as usize),
        k_n,
    );
    let num_sources = doc.num_sources() as u32;
    let num_bg = doc.background_tokens().len() as u32;
    let source_mass: f64 = hyper.source_type.iter().sum();
    let topic_mass: f64 = hyper.topic.iter().sum();

    out.clear();
    for t in 0..t_n {
        let mut lw = (hyper.doc_type[t] + counts.doc_type[t] as f64).ln();
        for &(s, m) in &sources {
            lw += log_rising(hyper.source_type[s] + counts.src_by_doc(t, s) as f64, m, variant);
        }
        lw -= log_rising(counts.src_total_by_doc[t] as f64 + source_mass, num_sources, variant);
        for &(k, m) in &topics {
            lw += log_rising(hyper.topic[k] + counts.topic_by_doc(t, k) as f64, m, variant);
        }
        lw -= log_rising(counts.bg_total_by_doc[t] as f64 + topic_mass, num_bg, variant);
        out.push(lw);
    }
}

/// Resamples the document-type of document `d`.
pub fn sample_doc_type(state: &mut ModelState, corpus: &EncodedCorpus, d: usize) -> Result<()> {
    let ModelState {
        hyper,
        latent,
        counts,
        variant,
        rng,
        scratch,
        ..
    } = state;
    doc_contribution(counts, latent, corpus, d, false);
    doc_type_log_weights(counts, hyper, *variant, latent, corpus, d, scratch);
    let t = sample_log_weights(scratch, rng, "document-type")?;
    latent.doc_type[d] = t as u32;
    doc_contribution(counts, latent, corpus, d, true);
    Ok(())
}

/// Normalized conditional over document-types for `d` given everything else.
pub fn doc_type_conditional(state: &ModelState, corpus: &EncodedCorpus, d: usize) -> Result<Vec<f64>> {
    let mut counts = state.counts.clone();
    doc_contribution(&mut counts, &state.latent, corpus, d, false);
    let mut w = Vec::new();
    doc_type_log_weights(&counts, &state.hyper, state.variant, &state.latent, corpus, d, &mut w);
    normalize_log_weights(&mut w, "document-type")?;
    Ok(w)
}

// --- source-type -----------------------------------------------------------

fn source_contribution(
    counts: &mut CountTables,
    latent: &LatentState,
    corpus: &EncodedCorpus,
    d: usize,
    n: usize,
    inc: bool,
) {
    let td = latent.doc_type[d] as usize;
    let s = latent.source_type[corpus.source_offset(d) + n] as usize;
    counts.source(td, s, inc);
    let tok0 = corpus.token_offset(d);
    for &j in corpus.docs()[d].source_tokens(n) {
        counts.source_word(s, latent.word_topic[tok0 + j as usize] as usize, inc);
    }
}

/// Log-weights over source-types for source `n` of `d`; `counts` must
/// exclude that source.
#[allow(clippy::too_many_arguments)]
fn source_type_log_weights(
    counts: &CountTables,
    hyper: &Hyperparameters,
    variant: SamplerVariant,
    latent: &LatentState,
    corpus: &EncodedCorpus,
    d: usize,
    n: usize,
    out: &mut Vec<f64>,
) {
    let (s_n, k_n) = (hyper.num_source_types(), hyper.num_topics());
    let td = latent.doc_type[d] as usize;
    let tok0 = corpus.token_offset(d);
    let words = corpus.docs()[d].source_tokens(n);
    let topics = histogram(words.iter().map(|&j| latent.word_topic[tok0 + j as usize] as usize), k_n);
    let num_words = words.len() as u32;
    let topic_mass: f64 = hyper.topic.iter().sum();

    out.clear();
    for s in 0..s_n {
        let mut lw = (hyper.source_type[s] + counts.src_by_doc(td, s) as f64).ln();
        for &(k, m) in &topics {
            lw += log_rising(hyper.topic[k] + counts.topic_by_src(s, k) as f64, m, variant);
        }
        lw -= log_rising(counts.srcword_total[s] as f64 + topic_mass, num_words, variant);
        out.push(lw);
    }
}

/// Resamples the source-type of source `n` in document `d`; clamped
/// sources are left untouched.
pub fn sample_source_type(state: &mut ModelState, corpus: &EncodedCorpus, d: usize, n: usize) -> Result<()> {
    let idx = corpus.source_offset(d) + n;
    if state.latent.clamped[idx] {
        return Ok(());
    }
    let ModelState {
        hyper,
        latent,
        counts,
        variant,
        rng,
        scratch,
        ..
    } = state;
    source_contribution(counts, latent, corpus, d, n, false);
    source_type_log_weights(counts, hyper, *variant, latent, corpus, d, n, scratch);
    let s = sample_log_weights(scratch, rng, "source-type")?;
    latent.source_type[idx] = s as u32;
    source_contribution(counts, latent, corpus, d, n, true);
    Ok(())
}

/// Normalized conditional over source-types for source `n` of `d`.
pub fn source_type_conditional(state: &ModelState, corpus: &EncodedCorpus, d: usize, n: usize) -> Result<Vec<f64>> {
    let mut counts = state.counts.clone();
    source_contribution(&mut counts, &state.latent, corpus, d, n, false);
    let mut w = Vec::new();
    source_type_log_weights(&counts, &state.hyper, state.variant, &state.latent, corpus, d, n, &mut w);
    normalize_log_weights(&mut w, "source-type")?;
    Ok(w)
}

// --- word-topic ------------------------------------------------------------

fn token_contribution(
    counts: &mut CountTables,
    latent: &LatentState,
    corpus: &EncodedCorpus,
    d: usize,
    j: usize,
    inc: bool,
) {
    let doc = &corpus.docs()[d];
    let z = latent.word_topic[corpus.token_offset(d) + j] as usize;
    counts.word(doc.words()[j] as usize, z, inc);
    match doc.gamma()[j] {
        Gamma::Background => counts.background_word(latent.doc_type[d] as usize, z, inc),
        Gamma::Source(n) => counts.source_word(latent.source_type[corpus.source_offset(d) + n] as usize, z, inc),
    }
}

/// Linear weights over topics for token `j` of `d`; `counts` must exclude
/// that token. A product of two bounded ratios cannot underflow, so these
/// stay out of log space.
fn word_topic_weights(
    counts: &CountTables,
    hyper: &Hyperparameters,
    latent: &LatentState,
    corpus: &EncodedCorpus,
    d: usize,
    j: usize,
    out: &mut Vec<f64>,
) {
    let k_n = hyper.num_topics();
    let doc = &corpus.docs()[d];
    let w = doc.words()[j] as usize;
    let context = match doc.gamma()[j] {
        Gamma::Background => {
            let t = latent.doc_type[d] as usize;
            &counts.topic_by_doc[t * k_n..(t + 1) * k_n]
        }
        Gamma::Source(n) => {
            let s = latent.source_type[corpus.source_offset(d) + n] as usize;
            &counts.topic_by_src[s * k_n..(s + 1) * k_n]
        }
    };
    let word_row = &counts.word_by_topic[w * k_n..(w + 1) * k_n];
    let beta = hyper.word;
    let v_beta = counts.vocab_size as f64 * beta;
    out.clear();
    out.extend(
        (0..k_n).map(|k| {
            (context[k] as f64 + hyper.topic[k]) * (word_row[k] as f64 + beta) / (counts.topic_total[k] as f64 + v_beta)
        }),
    );
}

/// Resamples the topic of token `j` in document `d`.
pub fn sample_word_topic(state: &mut ModelState, corpus: &EncodedCorpus, d: usize, j: usize) -> Result<()> {
    let ModelState {
        hyper,
        latent,
        counts,
        rng,
        scratch,
        ..
    } = state;
    token_contribution(counts, latent, corpus, d, j, false);
    word_topic_weights(counts, hyper, latent, corpus, d, j, scratch);
    let z = sample_weights(scratch, rng, "word-topic")?;
    latent.word_topic[corpus.token_offset(d) + j] = z as u32;
    token_contribution(counts, latent, corpus, d, j, true);
    Ok(())
}

/// Normalized conditional over topics for token `j` of `d`.
pub fn word_topic_conditional(state: &ModelState, corpus: &EncodedCorpus, d: usize, j: usize) -> Result<Vec<f64>> {
    let mut counts = state.counts.clone();
    token_contribution(&mut counts, &state.latent, corpus, d, j, false);
    let mut w = Vec::new();
    word_topic_weights(&counts, &state.hyper, &state.latent, corpus, d, j, &mut w);
    let total: f64 = w.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::NonFiniteWeight {
            what: "word-topic",
            value: total,
        });
    }
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}

/// One systematic pass: every document-type, then every unclamped
/// source-type, then every word-topic, in corpus order.
pub fn sweep(state: &mut ModelState, corpus: &EncodedCorpus) -> Result<()> {
    check_shapes(state, corpus)?;
    for d in 0..corpus.num_docs() {
        sample_doc_type(state, corpus, d)?;
    }
    for (d, doc) in corpus.docs().iter().enumerate() {
        for n in 0..doc.num_sources() {
            sample_source_type(state, corpus, d, n)?;
        }
    }
    for (d, doc) in corpus.docs().iter().enumerate() {
        for j in 0..doc.len() {
            sample_word_topic(state, corpus, d, j)?;
        }
    }
    state.sweep += 1;
    Ok(())
}

fn check_shapes(state: &ModelState, corpus: &EncodedCorpus) -> Result<()> {
    let l = &state.latent;
    if l.doc_type.len() != corpus.num_docs()
        || l.source_type.len() != corpus.num_sources()
        || l.word_topic.len() != corpus.num_tokens()
        || state.counts.vocab_size != corpus.vocab_size()
    {
        return Err(Error::ShapeMismatch("model state does not match corpus".into()));
    }
    Ok(())
}
