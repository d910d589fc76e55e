//! Command-line experiments and file formats on top of `ctrlmart-core`.
//!
//! * [`config`]: flat `key = value` configuration files.
//! * [`table`]: CSV tables with 12 significant digits.
//! * [`records`]: JSON certificates, estimates and run summaries.
//! * [`par`]: rayon drivers whose output does not depend on the thread count.
//! * [`cli`]: the `ctrlmart` subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod par;
pub mod records;
pub mod table;

pub use error::{Error, Result};
