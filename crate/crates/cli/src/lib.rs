//! Experiment runner and command line for variational Bayesian phase
//! estimation studies built on `vbqm-core`.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod solve;
