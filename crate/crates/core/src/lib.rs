//! Image descriptors from Dynamic Mode Decomposition of colour-channel
//! snapshots, with random-feature and SVM classifiers on top.
//!
//! The pipeline: [`color_flow`] turns an image into CIE Lab snapshot columns,
//! [`dmd`] decomposes them and splits off the static background,
//! [`features`] pools both parts into a fixed-length vector, and
//! [`classifiers`] learns on those vectors. [`harness`] drives sweeps and
//! backs the `modeforge` binary.

// `!(x > 0.0)` is the intended way to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifiers;
pub mod color_flow;
pub mod dataset;
pub mod dmd;
pub mod error;
pub mod features;
pub mod harness;
pub mod linalg;
pub mod rff;

pub use error::{Error, Result};
