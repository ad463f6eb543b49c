//! Temporal word embeddings trained against a frozen atemporal compass.
//!
//! Training runs in two phases. First, CBOW (or Skip-gram) with negative
//! sampling learns atemporal context and target matrices on the whole
//! diachronic corpus. Then, for each time slice, a fresh context matrix is
//! trained against the frozen atemporal target matrix. Because every slice is
//! scored against the same targets, the per-slice context matrices share one
//! coordinate system and can be compared directly.
//!
//! The crate also provides the static and pairwise-aligned baselines, a
//! temporal-analogy evaluation harness, held-out likelihood and posterior
//! evaluation, and a model directory format.

pub mod baselines;
pub mod compass;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod sgns;
pub mod synthetic;

pub use error::{Error, Result};
