//! Std companion to `freemul-core`: random-matrix Monte Carlo, file formats
//! and the `freemul` command-line tool.

pub mod cli;
pub mod error;
pub mod io;
pub mod rmt;

pub use error::{Error, Result};
pub use freemul_core as core;
