//! Temporal-leakage auditing for click-through-rate ranking models.
//!
//! The crate trains a sparse CTR ranker under strict temporal splits,
//! deliberately injects future information — next clicks, item embeddings
//! from a later model snapshot, posterior similar-item lists — and reports
//! the paired AUC delta with a bootstrap interval. A large delta means the
//! corresponding behavioral signal is worth distilling into a content
//! model; a negligible one means the ranker already carries it. The
//! [`align`] module closes the loop: it distills item embeddings into a
//! content encoder and shows that the encoder, not the raw leaked
//! parameters, transfers to items the original data never contained.
//!
//! Modules:
//! * [`eventlog`] — event data model, JSONL/CSV ingestion, temporal
//!   splitting, and a seeded synthetic behavior generator.
//! * [`ranker`] — hashed logistic regression with user/item embeddings,
//!   chronological SGD, exact tie-aware AUC, embedding snapshots.
//! * [`leakage`] — leak construction and the paired LIS computation.
//! * [`align`] — embedding-to-content distillation and the disjoint-item
//!   downstream evaluation.
//!
//! Everything is deterministic: a (config, seed) pair fixes every byte of
//! every artifact, including bootstrap intervals.

pub mod align;
pub mod error;
pub mod eventlog;
pub mod hash;
pub mod leakage;
pub mod ranker;

pub use error::{Error, Result};
