//! Dual-individual genetic algorithm for feedforward binary classifiers.
//!
//! Two agents, a leader and a follower, each own one parameter set sized for
//! the largest allowed architecture plus a short list of candidate
//! architectures that read sub-blocks of those parameters. Every generation
//! breeds two offspring parameter sets by row crossover and Gaussian
//! mutation, proposes new hidden-layer widths, merges the offspring through
//! masked trim-and-paste, redistributes the best solutions between the
//! agents, and swaps roles when the follower overtakes the leader.
//!
//! A plain full-batch gradient-descent trainer over the same model is
//! included as a baseline.
//!
//! Module map:
//!
//! - [`model`]: architectures, parameter sets, forward pass, cost, prediction
//! - [`arch_search`]: dominance ranking, roulette weights, width proposals
//! - [`variation`]: crossover, mutation and the mutation-rate schedule
//! - [`assimilation`]: masked pasting, offspring merging, agent update
//! - [`engine`]: the generation loop and run records
//! - [`report`]: leader/follower result tables
//! - [`gd`]: gradient-descent baseline
//! - [`data`]: dataset file format and synthetic data
//! - [`exec`]: parallel/sequential fan-out helpers

pub mod arch_search;
pub mod assimilation;
pub mod data;
pub mod engine;
mod error;
pub mod exec;
pub mod gd;
pub mod matrix;
pub mod model;
pub mod report;
pub mod variation;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{ArchSolution, Architecture, Dataset, ParamSet};

/// Seedable generator used for every stochastic step of a run.
pub type RunRng = rand_chacha::ChaCha8Rng;
