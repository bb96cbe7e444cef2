//! Command-line driver for the spherical curve shortening flow.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod checks;
pub mod config;
pub mod error;
pub mod reflect;
pub mod simulate;
pub mod snapshot;
pub mod sweep;

pub use error::{CliError, Result};
