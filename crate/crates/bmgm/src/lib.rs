//! Bayesian graphical models over mixed continuous, count, zero-inflated
//! count, and categorical data, with missing-at-random imputation.
//!
//! The model couples arbitrary node-conditional exponential families through
//! pairwise interactions on a bounded transform of each variable. Edges carry
//! spike-and-slab priors; a Metropolis-within-Gibbs sampler (with either
//! truncated normalizing constants or an exchange-algorithm backend) yields
//! posterior inclusion probabilities, which an FDR rule turns into a graph.
//!
//! Modules:
//! - [`types`]: node types/parameters, datasets, edge state
//! - [`model`]: potentials, conditionals, normalizing constants
//! - [`priors`]: hyperparameters and prior densities
//! - [`sampler`]: the Metropolis-within-Gibbs chains
//! - [`exchange`]: the normalizer-free exchange backend
//! - [`inference`]: PPIs, FDR selection, convergence diagnostics, ROC/AUC
//! - [`simulate`]: benchmark scenario generators
//! - [`data`]: CSV input/output for mixed datasets
//! - [`config`]: run configuration
//! - [`output`]: run artifacts (summaries, traces, manifests, DOT)

pub mod config;
pub mod data;
pub(crate) mod draws;
pub mod error;
pub mod exchange;
pub mod inference;
pub mod model;
pub mod output;
pub mod priors;
pub mod sampler;
pub mod simulate;
pub mod types;

pub use error::{Error, Result};
