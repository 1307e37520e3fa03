//! Mode shaping with a Raman quantum memory.
//!
//! The crate designs driving envelopes that make a memory cell couple to a
//! single Hermite-Gaussian signal mode, analyses the resulting memory
//! kernels, converts signal profiles by writing and reading with different
//! drivings, and checks the four-node cluster state built from the converted
//! beams.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod cli;
pub mod config;
pub mod converter;
pub mod driving;
pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod kernel;
pub mod output;
pub mod schmidt;
pub mod shaper;

pub use error::{Error, Result};
