//! Confidence estimation for LLM code generation.
//!
//! Given N programs sampled for one requirement, the estimator measures how
//! much they agree across four modalities (tokens, syntax subtrees, dataflow
//! edges and embeddings). High agreement means high confidence; the gate then
//! either shows the programs or refuses. The crate also carries the baselines
//! and metrics used to evaluate gating quality on labeled benchmarks.

pub mod analysis;
pub mod baselines;
pub mod confidence;
pub mod dataset;
pub mod embeddings;
mod error;
pub mod evaluation;
pub mod gate;
mod http;
pub mod llm;
#[cfg(feature = "mock")]
pub mod mock;
pub mod multiset;
pub mod program;
pub mod similarity;
pub mod synthetic;

pub use error::{Error, Result};
pub use http::{RetryPolicy, API_KEY_ENV};
pub use program::{tokenize, Language, Origin, Program, SampleSet, TokenSequence};
