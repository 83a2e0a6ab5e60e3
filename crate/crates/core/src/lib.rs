//! Entropy, mutual information and market-model risk measures for return series.

// `!(x >= 0.0)` is how NaN gets rejected alongside negatives; the long
// literals are published approximation coefficients kept as printed.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::inconsistent_digit_grouping,
    clippy::excessive_precision
)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod entropy;
pub mod error;
pub mod histogram;
pub mod ingest;
mod linalg;
pub mod market_model;
pub mod mutinfo;
pub mod portfolio;
pub mod report;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
