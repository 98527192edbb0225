//! sknj-core: a disk-aware k-nearest-neighbor join engine for
//! high-dimensional sparse vectors.
//!
//! The join takes two datasets R and S of sparse vectors (sorted
//! `(dimension, weight)` features with positive weights) and reports, for
//! every vector in R, its k highest-dot-product neighbors in S. Datasets
//! live in a compact binary format ([`format`]) and are processed under a
//! fixed memory budget: a block nested-loop driver ([`driver`]) streams R
//! once and rescans S per R block, delegating each block pair to one of
//! three kernels ([`kernels`]) — brute force, an inverted index built per
//! inner block, or a threshold-indexing variant that leaves provably
//! unhelpful features out of the lists and restores their contribution
//! exactly during scoring.
//!
//! Supporting modules: cost accounting ([`counters`]), an exhaustive
//! reference join ([`oracle`]), seeded synthetic data ([`datagen`]), and a
//! text spectra importer ([`spectra`]).

pub mod counters;
pub mod datagen;
pub mod driver;
pub mod error;
pub mod format;
pub mod kernels;
pub mod oracle;
pub mod sparse;
pub mod spectra;
pub mod state;

pub use counters::CostCounters;
pub use driver::{run_join, Algorithm, JoinConfig, JoinSummary, ResultSink, TsvSink};
pub use error::{Error, Result};
pub use format::{Block, BlockReader, DatasetHeader, DatasetWriter};
pub use sparse::{dot, Feature, SparseVector};
pub use state::{CandidateSet, JoinState, Neighbor};
