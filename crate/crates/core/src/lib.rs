// `!(x >= 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod descent;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod nns;
pub mod problems;
pub mod rules;
pub mod tracker;

pub use error::{Error, Result};
