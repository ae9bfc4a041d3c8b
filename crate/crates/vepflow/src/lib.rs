//! Time-discrete variational solver and certification harness for slightly
//! compressible visco-elasto-plastic flow in plane strain.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod discretization;
pub mod error;
pub mod functionals;
pub mod potentials;
pub mod stepper;
pub mod tensors;
pub mod verify;

pub use error::{Error, Result};
