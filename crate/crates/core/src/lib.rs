//! Sparse radar imaging from widely distributed sensors.
//!
//! Each sensor sees its own aspect-dependent reflectivity image; the sensors
//! jointly recover a sparse global image with sharing ADMM. The accelerated
//! variant drops pixels that stopped changing from each sensor's local solve,
//! shrinking both the linear systems and the messages exchanged per round.
//!
//! The crate is `no_std` (with `alloc`): file formats, transports and the
//! command-line driver live in the `dradar` crate.

#![no_std]

extern crate alloc;

pub mod admm;
pub mod dist;
pub mod error;
pub mod forward;
pub mod linalg;
pub mod scene;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;
