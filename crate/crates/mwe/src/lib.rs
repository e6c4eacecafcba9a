//! Multiplex word embeddings.
//!
//! Every word gets one center embedding for its overall semantics plus a
//! small local embedding per dependency relation; per-relation transform
//! matrices lift the locals into the center space, and the composed
//! vector `c + X^T u` scores tuples under that relation. The crate covers
//! the full pipeline: CoNLL-U ingestion ([`conllu`], [`corpus`]),
//! vocabulary construction ([`vocab`]), negative-sampling SGD with an
//! alternating center/relational schedule ([`trainer`]), selectional
//! preference and word-similarity evaluation ([`eval`]), checkpointing
//! and text export ([`persistence`]), and independent verification
//! machinery ([`oracle`]).

pub mod conllu;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod num;
pub mod oracle;
pub mod persistence;
pub mod trainer;
pub mod vocab;

pub use error::{Error, Result};
pub use model::{param_count, ModelParams, Role};
pub use num::Scalar;

/// Single-precision model, for memory-constrained inference.
pub type Model32 = ModelParams<f32>;

/// Double-precision model; training and checkpoints use this.
pub type Model64 = ModelParams<f64>;
