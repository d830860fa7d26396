//! Planar pattern interfaces in Swift-Hohenberg-type equations.
//!
//! Spatial-dynamics spectra on hexagonal and square Fourier lattices, the
//! reduced amplitude equations with their Lyapunov function, the equilibrium
//! catalogue and its stability, heteroclinic shooting, marginal-stability
//! front speeds and leading-order pattern reconstruction.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the PDE
//! solver and the command line live in the `shfront` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod amplitude;
pub mod connect;
pub mod equilibria;
mod error;
pub mod frontspeed;
pub mod lattice;
pub mod linalg;
mod math;
pub mod ode;
pub mod pattern;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
