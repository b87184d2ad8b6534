//! Parallel Monte Carlo driver, curve tables, validation suites and the
//! `sinebeta` command line, on top of the `sinebeta-core` engines.

pub mod cli;
pub mod curves;
pub mod error;
pub mod output;
pub mod parallel;
pub mod validate;

pub use error::{Error, Result};
