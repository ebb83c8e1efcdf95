//! Semi-supervised source topic model.
//!
//! News articles are mixtures of quoted sources. Each article carries a
//! latent document-type, each named source a latent source-type drawn from
//! an affiliation x role ontology, and each word a latent topic whose prior
//! depends on whether the word belongs to a source or to the background.
//! Inference is collapsed Gibbs sampling with optional clamping of labeled
//! sources.

pub mod analytics;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod ontology;
pub mod par;
pub mod rng;
pub mod sampling;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
