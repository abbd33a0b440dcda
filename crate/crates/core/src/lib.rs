//! Multi-UAV virtual-array design: Fekete topologies, LoS MIMO channels,
//! secure power-minimizing precoding and trajectory optimization.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod linalg;
pub mod optimizer;
pub mod rng;
pub mod security;
pub mod topology;

pub use error::{ConstraintFamily, Error, Result};
