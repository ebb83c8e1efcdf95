//! Latent state, count tables and the collapsed Gibbs sampler.

mod counts;
mod hyper;
mod joint;
mod sampler;
pub mod snapshot;
mod state;
mod train;

pub use counts::CountTables;
pub use hyper::*;
pub use joint::{log_joint, log_joint_counts};
pub use sampler::{
    doc_type_conditional, sample_doc_type, sample_source_type, sample_word_topic, source_type_conditional, sweep,
    word_topic_conditional,
};
pub use snapshot::{load_state, save_state, Snapshot, SnapshotContext};
pub use state::{init_chain, init_state, rebuild_counts, LatentState, ModelState, Posterior, SamplerVariant};
pub use train::{
    continue_training, train, train_chain, train_chains, Schedule, DEFAULT_BURN_IN, DEFAULT_LAG, DEFAULT_SWEEPS,
};
