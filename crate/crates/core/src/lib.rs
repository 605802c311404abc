//! Distributed coresets for k-means with outliers in general metric spaces.
//!
//! The pipeline runs in three simulated MapReduce rounds: two rounds build a
//! weighted coreset `(T, w^T)` from `L` partitions of the input, and a third
//! gathers the coreset in one reducer and runs a weighted local-search
//! solver on it. See [`coreset::solve`].
//!
//! With the `parallel` feature (on by default) reducers, swap evaluation
//! and audits run on rayon; [`Exec::Sequential`] forces a single thread and
//! gives identical results.

pub mod coreset;
pub mod cover;
pub mod datagen;
pub mod engine;
mod error;
pub mod exec;
pub mod io;
pub mod metric;
pub mod solvers;
pub mod verify;

pub use coreset::{mr_coreset, solve, CoresetConfig, CoresetOutput, FinalSolver, Variant};
pub use error::{Error, Result};
pub use exec::Exec;
pub use metric::{IndexSubset, PointSet, Proxy, ProxySet, WeightFn};
