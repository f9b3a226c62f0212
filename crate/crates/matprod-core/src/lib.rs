//! Squared singular values of products of truncated Haar orthogonal, unitary and
//! symplectic matrices: exact laws, samplers and the objects built on them.
//!
//! The crate is `no_std` (with `alloc`); everything here is pure numerics on owned
//! buffers. IO, the command line and the verification batteries live in the
//! `matprod` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod config;
pub mod crystal;
pub mod density;
pub mod error;
pub mod haar;
pub mod jack;
pub mod linalg;
pub mod partition;
pub mod pfaffian;
pub mod quad;
pub mod sampler;
pub mod special;

pub use config::{ChainParams, Config, Trajectory};
pub use error::{Error, Result};
pub use partition::Partition;
