//! Variational Bayesian phase estimation with collective rotations and
//! one-axis twists.
//!
//! Two exact simulation engines are provided: [`collective`] works in the
//! (N+1)-dimensional symmetric subspace and handles noiseless protocols,
//! [`tensornet`] works on the full 2^N space through matrix product operators
//! and permutation-invariant operator tables, which lets it model spatially
//! correlated dephasing and dephasing after every twist.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, the experiment
//! runner and the command line live in the `vbqm` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod circuits;
pub mod collective;
mod combinatorics;
mod error;
pub mod noisemodel;
pub mod objective;
pub mod optimize;
pub mod pinv;
pub mod tensornet;

pub use combinatorics::{binomial, multinomial4};
pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
