//! Total variation flow on finite metric measure spaces, with duality
//! certificates for every implicit step.
//!
//! The space is a finite weighted graph with a vertex measure
//! ([`space`]); [`calculus`] supplies the differential, divergence, pairing
//! and total variation; [`resolvent`] solves one implicit step and certifies
//! it; [`flow`] iterates steps and checks trajectory-level estimates;
//! [`asymptotics`] covers Rayleigh quotients, extinction and profiles; [`io`]
//! holds file formats, generators and experiment orchestration.

pub mod asymptotics;
pub mod calculus;
pub mod error;
pub mod flow;
pub mod io;
pub mod registry;
pub mod resolvent;
pub mod selftest;
pub mod space;

pub use error::{Error, Result};
