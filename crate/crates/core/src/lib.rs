//! Ruin probabilities and premium-loading optimization for compound Poisson
//! insurance portfolios, including Lévy-copula dependent claims and
//! copula-dependent policy acquisition.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops read closer to the formulas in the numerical kernels.
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod copulas;
pub mod demand;
pub mod distributions;
pub mod error;
pub mod figures;
pub mod market;
pub mod optimize;
pub mod ruin;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
