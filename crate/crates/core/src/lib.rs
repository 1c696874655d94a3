#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod algorithms;
pub mod analysis;
pub mod compressors;
pub mod costs;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod rng;

pub use error::{Error, Result};
