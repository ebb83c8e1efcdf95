//! Model snapshots.
//!
//! A snapshot is a header line followed by a JSON payload:
//!
//! ```text
//! stm-snapshot 1 sha256:<hex digest of the payload bytes>
//! {"format_version":1,"hyper":{...},"labels":[...],...}
//! ```
//!
//! The payload carries hyperparameters, label space, vocabulary and its
//! hash, document ids and shapes, all latent arrays, count tables, the
//! generator position, posterior accumulators and the log-joint trace.

use std::path::Path;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, EncodedCorpus};
use crate::error::{Error, Result};
use crate::model::{CountTables, Hyperparameters, LatentState, ModelState, Posterior, SamplerVariant};
use crate::rng::StmRng;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "stm-snapshot";

/// Corpus-side metadata stored next to the state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotContext {
    pub labels: Vec<String>,
    pub vocabulary: Vec<String>,
    pub doc_ids: Vec<String>,
    pub sources_per_doc: Vec<u32>,
    pub tokens_per_doc: Vec<u32>,
}

impl SnapshotContext {
    pub fn new(corpus: &Corpus, encoded: &EncodedCorpus) -> Self {
        Self {
            labels: corpus.label_space.labels(),
            vocabulary: corpus.vocabulary.terms().to_vec(),
            doc_ids: corpus.documents.iter().map(|d| d.doc_id.clone()).collect(),
            sources_per_doc: encoded.docs().iter().map(|d| d.num_sources() as u32).collect(),
            tokens_per_doc: encoded.docs().iter().map(|d| d.len() as u32).collect(),
        }
    }

    pub fn vocabulary_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for term in &self.vocabulary {
            hasher.update(term.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    /// Errors unless `corpus` has the same vocabulary and shapes.
    pub fn check_corpus(&self, corpus: &Corpus, encoded: &EncodedCorpus) -> Result<()> {
        let other = Self::new(corpus, encoded);
        if other.vocabulary_hash() != self.vocabulary_hash() {
            return Err(Error::SnapshotMismatch("vocabulary hash differs".into()));
        }
        if other.labels != self.labels {
            return Err(Error::SnapshotMismatch("label space differs".into()));
        }
        if other.doc_ids != self.doc_ids
            || other.sources_per_doc != self.sources_per_doc
            || other.tokens_per_doc != self.tokens_per_doc
        {
            return Err(Error::SnapshotMismatch("documents differ".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: ModelState,
    pub context: SnapshotContext,
}

#[derive(Serialize, Deserialize)]
struct RngState {
    seed: String,
    stream: u64,
    word_pos: String,
}

#[derive(Serialize, Deserialize)]
struct Payload {
    format_version: u32,
    hyper: Hyperparameters,
    variant: SamplerVariant,
    #[serde(flatten)]
    context: SnapshotContext,
    vocabulary_hash: String,
    rng_seed: u64,
    chain: u64,
    sweep: u64,
    rng: RngState,
    latent: LatentState,
    counts: CountTables,
    posterior: Posterior,
    trace: Vec<f64>,
}

pub fn to_bytes(state: &ModelState, context: &SnapshotContext) -> Result<Vec<u8>> {
    let payload = Payload {
        format_version: FORMAT_VERSION,
        hyper: state.hyper.clone(),
        variant: state.variant,
        vocabulary_hash: context.vocabulary_hash(),
        context: context.clone(),
        rng_seed: state.rng_seed,
        chain: state.chain,
        sweep: state.sweep,
        rng: RngState {
            seed: hex::encode(state.rng.get_seed()),
            stream: state.rng.get_stream(),
            word_pos: state.rng.get_word_pos().to_string(),
        },
        latent: state.latent.clone(),
        counts: state.counts.clone(),
        posterior: state.posterior.clone(),
        trace: state.trace.clone(),
    };
    let body = serde_json::to_vec(&payload)?;
    let digest = hex::encode(Sha256::digest(&body));
    let mut out = format!("{MAGIC} {FORMAT_VERSION} sha256:{digest}\n").into_bytes();
    out.extend_from_slice(&body);
    out.push(b'\n');
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<Snapshot> {
    let corrupt = || Error::Checksum;
    let newline = bytes.iter().position(|&b| b == b'\n').ok_or_else(corrupt)?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| corrupt())?;
    let mut fields = header.split(' ');
    if fields.next() != Some(MAGIC) {
        return Err(corrupt());
    }
    let version: u32 = fields.next().and_then(|v| v.parse().ok()).ok_or_else(corrupt)?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let digest = fields.next().and_then(|d| d.strip_prefix("sha256:")).ok_or_else(corrupt)?;
    let body = bytes[newline + 1..].strip_suffix(b"\n").ok_or_else(corrupt)?;
    if hex::encode(Sha256::digest(body)) != digest {
        return Err(corrupt());
    }
    let payload: Payload = serde_json::from_slice(body)?;
    if payload.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: payload.format_version,
            expected: FORMAT_VERSION,
        });
    }
    if payload.context.vocabulary_hash() != payload.vocabulary_hash {
        return Err(corrupt());
    }
    payload.hyper.validate()?;

    let mut seed = [0u8; 32];
    hex::decode_to_slice(&payload.rng.seed, &mut seed).map_err(|_| corrupt())?;
    let word_pos: u128 = payload.rng.word_pos.parse().map_err(|_| corrupt())?;
    let mut rng = StmRng::from_seed(seed);
    rng.set_stream(payload.rng.stream);
    rng.set_word_pos(word_pos);

    Ok(Snapshot {
        state: ModelState {
            hyper: payload.hyper,
            latent: payload.latent,
            counts: payload.counts,
            variant: payload.variant,
            rng_seed: payload.rng_seed,
            chain: payload.chain,
            rng,
            sweep: payload.sweep,
            posterior: payload.posterior,
            trace: payload.trace,
            scratch: Vec::new(),
        },
        context: payload.context,
    })
}

pub fn save_state(path: impl AsRef<Path>, state: &ModelState, context: &SnapshotContext) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(state, context)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_state(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
