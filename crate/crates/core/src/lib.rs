//! Finite-key analysis for GHZ-based conference key agreement with two-block
//! classical advantage distillation (CAD).
//!
//! The crate is `no_std` (it needs `alloc`) and contains only computation:
//!
//! - [`bitcore`]: bit strings, index subsets, binary entropy and Hamming-ball volumes.
//! - [`ghzsim`]: a small dense statevector engine that checks the GHZ identities
//!   the security argument relies on.
//! - [`sampling`]: the fixed-size subset sampling bound and its empirical oracle.
//! - [`protosim`]: classical Monte Carlo simulation of the protocol under i.i.d. noise.
//! - [`keyrate`]: the min-entropy bound, error-correction leakage, key length and
//!   optimisation over the test size.
//!
//! IO, CLI and file formats live in the `qcka` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bitcore;
mod error;
pub mod ghzsim;
pub mod keyrate;
pub mod protosim;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
pub use protosim::{NoiseModel, ProtocolParams};
