#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod montecarlo;
pub mod mvncdf;
pub mod outage;
pub mod portgrid;
pub mod rng;
pub mod specfun;

pub use error::{Error, Result};
