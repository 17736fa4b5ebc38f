//! Constructive deep-RL solver for 0-1 knapsack instances.
//!
//! The pipeline: generate or read instances, learn a discretization of the
//! ratio features by Q-learning, train an actor-critic policy that picks one
//! item per step, and compare its best solutions against greedy and exact
//! baselines.

pub mod aggregation;
pub mod baselines;
pub mod cli;
pub mod config;
pub mod dataset_io;
pub mod env;
pub mod error;
pub mod features;
pub mod generate;
pub mod instance;
pub mod metrics;
pub mod neural;
pub mod trainer;

pub use error::{Error, Result};
pub use instance::{Dataset, Family, GenParams, Item, KpInstance, Solution};
