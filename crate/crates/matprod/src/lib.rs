//! Command line, file formats and verification batteries for `matprod-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod exact;
pub mod integrate;
pub mod io;
pub mod par;
pub mod stats;
pub mod verify;

pub use error::{CliError, Result};
pub use matprod_core as core;
