//! Authorship attribution for unsegmented scripts using Burrows' Delta over
//! character features.
//!
//! The pipeline mirrors a standard stylometric experiment on a corpus whose
//! writing system has no word delimiters (the reference use case is classical
//! Chinese poetry): every Unicode character is treated as an atomic token, so
//! no word segmentation is ever attempted.
//!
//! Stages, each usable on its own:
//!
//! - [`corpus`] — ingest author/poem collections from disk, rank authors by
//!   character volume, restrict to the top k.
//! - [`sampler`] — per author, shuffle the poems with a seeded generator and
//!   split the volume in half, producing two named samples; repeat to build
//!   several test corpora.
//! - [`tokenizer`] — character n-gram streams with punctuation filtering.
//! - [`features`] — most-frequent-character selection, relative frequencies,
//!   and per-feature z-scores.
//! - [`delta`] — classic Burrows' Delta (mean absolute z-score difference)
//!   and the full symmetric distance matrix.
//! - [`cluster`] — agglomerative hierarchical clustering with Ward, average,
//!   complete, or single linkage; Newick export; author-purity check.
//! - [`report`] — nearest-neighbor attribution metrics, distance tables,
//!   heatmap and dendrogram SVGs.
//! - [`pipeline`] — the end-to-end run driven by a [`pipeline::RunConfig`],
//!   writing one output directory per shuffled corpus.
//!
//! The numeric kernels are generic over the scalar type via [`Scalar`]
//! (`f32` or `f64`); the aliases below fix `f64`, which is what the command
//! line pipeline uses throughout.
//!
//! Everything is deterministic: the same corpus bytes, seed, and parameters
//! produce byte-identical output files on every platform.

pub mod cli;
pub mod cluster;
pub mod corpus;
pub mod delta;
pub mod error;
pub mod features;
pub mod pipeline;
pub mod report;
pub mod sampler;
pub mod scalar;
pub mod tokenizer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Per-corpus feature profile with `f64` scalars.
pub type Profile = features::CorpusProfile<f64>;
/// Pairwise Delta distance matrix with `f64` scalars.
pub type DeltaMatrix = delta::DeltaMatrix<f64>;
/// Merge tree with `f64` heights.
pub type Dendrogram = cluster::Dendrogram<f64>;
/// Attribution evaluation with `f64` distances.
pub type AttributionReport = report::AttributionReport<f64>;
