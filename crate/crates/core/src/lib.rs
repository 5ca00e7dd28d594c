//! FiBiNET click-through-rate model.
//!
//! Feature embeddings are reweighted by a squeeze-excitation block, crossed
//! pairwise with bilinear or Hadamard interactions on both the original and
//! reweighted embeddings, and combined either by a plain sum (shallow) or a
//! ReLU network (deep). Every layer has a hand-written backward pass checked
//! against central finite differences.
//!
//! Modules:
//! - [`numeric`]: dense kernels, SplitMix64 generator, finite-difference oracle
//! - [`data`]: schemas, feature hashing, TSV ingest, synthetic data
//! - [`model`]: forward/backward pass, parameters, checkpoints
//! - [`train`]: Adam, the epoch loop, gradient checks, ablations
//! - [`metrics`]: AUC and log loss
//! - [`cli`]: the `fibinet` command surface

pub mod cli;
pub mod data;
mod error;
pub mod metrics;
pub mod model;
pub mod numeric;
pub mod train;

pub use error::{Error, Result};
