//! File formats, a pseudospectral Swift-Hohenberg solver and the `shfront`
//! command line on top of [`shfront_core`].

pub mod cli;
pub mod error;
pub mod io;
pub mod pde;

pub use error::{Error, Result};
