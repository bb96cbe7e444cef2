//! Curve shortening flow on the unit sphere.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod curve;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod reflection;
pub mod spectral;
pub mod sphere;

pub use error::{Error, Result};
