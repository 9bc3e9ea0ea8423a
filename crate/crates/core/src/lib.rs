//! Low-dimensional explicit word vectors.
//!
//! Every dimension of the vectors built here is a real context word. The
//! crate covers the whole path from a POS-tagged corpus to evaluated
//! vectors:
//!
//! - [`corpus`]: vertical corpus reader and per-POS vocabulary.
//! - [`matrix`]: decay-weighted and windowed co-occurrence counts, PPMI,
//!   cosine and column masking.
//! - [`criteria`]: WS / NZ / WF word features, labeled sets, normalization.
//! - [`rules`]: threshold rule sets, the published rule bases, and a small
//!   Gini decision tree that can be turned back into rules.
//! - [`bpso`]: cardinality-constrained binary PSO over context columns and
//!   golden-word extraction.
//! - [`wordsel`]: leave-one-column-out distance-matrix selection.
//! - [`eval`]: Spearman evaluation on word-similarity test sets.
//! - [`pipeline`]: config-driven orchestration with cached stages.

pub mod bpso;
pub mod corpus;
pub mod criteria;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod matrix;
pub mod pipeline;
pub mod rules;
pub mod wordsel;

pub use error::{Error, Result};
