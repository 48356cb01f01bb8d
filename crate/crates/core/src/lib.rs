// `!(x > 0.0)` is used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod fitting;
pub mod greens;
pub mod io;
pub mod medium;
pub mod parallel;
pub mod presets;
pub mod pulse;
pub mod runner;
pub mod solver;
pub mod stats;
pub mod units;

pub use error::{Error, Result};
