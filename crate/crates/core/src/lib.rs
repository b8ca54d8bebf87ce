#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod space;
pub mod learner;
pub mod transport;
pub mod reciprocal;
pub mod bounds;
pub mod harness;
pub mod cli;

pub use error::{Error, Result};
