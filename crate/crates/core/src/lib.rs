//! Numerical core for modelling and characterizing type-II parametric
//! down-conversion in multimode periodically poled waveguides.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command-line front end live in the companion `wgspdc` crate.
#![no_std]
// Float supplies math methods in no_std builds; builds that also see the
// inherent float methods leave the import unused.
#![allow(unused_imports)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod model;
pub mod numeric;
pub mod beam;
pub mod phasematch;
pub mod spectra;
pub mod polarization;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
