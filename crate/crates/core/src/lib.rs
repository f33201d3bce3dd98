//! K-means + hierarchical (K-mH) cluster merging.
//!
//! The data is first over-partitioned with K-means into homogeneous,
//! spherically dispersed *entities*. Entities are then merged with single
//! linkage under a probabilistic distance: one minus the average chance that
//! a point drawn from one entity is closer, in variance-scaled squared
//! distance, to the other entity's center. Multiple candidate partitions
//! (several starting entity counts, several cut points) are combined into a
//! co-association matrix that estimates the number of general-shaped
//! clusters, and the final partition is the candidate with the highest mean
//! Adjusted Rand Index against all the others.
//!
//! The crate is `no_std` + `alloc`. The `std` feature only lifts that
//! restriction; `parallel` additionally fans independent restarts, entity
//! counts and consensus replicates out over rayon without changing results.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod consensus;
pub mod data;
pub mod datagen;
pub mod error;
pub mod gaussdist;
pub mod hierarchy;
pub mod kmeans;
pub mod matrix;
pub mod partition;
pub mod pipeline;
pub mod rng;
pub mod scatter;
pub mod special;

mod math;
mod par;

pub use data::DataMatrix;
pub use error::{Error, Result};
pub use matrix::SymMatrix;
pub use partition::{adjusted_rand_index, contingency, ContingencyTable, Partition, ScatterMode};
