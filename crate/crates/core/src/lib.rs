//! Runtime-complexity embeddings for programs.
//!
//! The crate profiles candidate programs over graded input sizes, fits each
//! runtime metric series against a discretized grid of complexity basis
//! functions (the r-Theta model `f(n) = r * g(n) + X`), packs the winning
//! fits into a fixed 36-value embedding, and trains tree-based classifiers
//! (single CART tree, bagged forest, gradient boosting) on those embeddings
//! with one-vs-rest multi-label wrappers.
//!
//! The hot paths (candidate fitting, per-tree and per-class training) run
//! data-parallel under the default `parallel` feature and fall back to
//! sequential loops when it is disabled; results are identical either way.

pub mod classify;
pub mod complexity_model;
pub mod dataset;
pub mod embedding;
pub mod fitter;
pub mod harness;
pub mod par;
pub mod pipeline;

pub use complexity_model::{candidate_grid, CandidateBasis, FamilyKind};
pub use embedding::{build_embedding, CodeEmbedding, EMBEDDING_LEN};
pub use fitter::{select_best, FitQuadruple, FitScore, Sample};
