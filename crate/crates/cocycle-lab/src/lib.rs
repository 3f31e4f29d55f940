//! Numerics for parameter-dependent random products of SL(2,ℝ) matrices.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod anderson;
pub mod cli;
pub mod config;
pub mod family;
pub mod jumpscan;
pub mod lyapunov;
pub mod mat2;
pub mod output;
pub mod regularity;
pub mod rng;
pub mod rotation;

pub use error::{Error, Result};
