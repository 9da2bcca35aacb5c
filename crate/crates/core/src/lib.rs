//! Joint training of a classifier and an instance allocator that together
//! complement a team of human experts.
//!
//! The allocator scores every team member (the experts in dataset order,
//! then the classifier) and the team answers with the prediction of the
//! highest-scoring member. Training relaxes that hard routing into a
//! softmax-weighted mixture of the members' predicted label distributions
//! and minimises its cross-entropy jointly over both networks.
//!
//! Crate layout:
//!
//! - [`nn`]: dense MLPs, manual backprop, Adam, schedules, early stopping
//! - [`team`]: the team mixture, its loss and gradients, routing, training
//! - [`experts`]: synthetic expert generators and prediction tables
//! - [`data`]: datasets, generators, CSV persistence, splits
//! - [`baselines`]: comparison systems sharing one evaluation contract
//! - [`harness`]: configs, evaluation reports, sweeps, result files

pub mod baselines;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod experts;
pub mod harness;
pub mod nn;
pub mod rng;
pub mod team;

pub use error::{Error, Result};
