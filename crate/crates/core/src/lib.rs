//! Entanglement swapping with SPDC pair sources.
//!
//! Compares a linear-optics Bell measurement with one based on
//! sum-frequency generation, both by exact simulation in a truncated Fock
//! space ([`fock`], [`optics`], [`spdc`], [`sfg`], [`protocol`]) and through
//! closed-form perturbative figures ([`analytic`], [`optimize`]). The
//! [`scenario`] module binds everything into named, config-driven runs.

pub mod analytic;
pub mod error;
pub mod fock;
pub mod optics;
pub mod optimize;
pub mod protocol;
pub mod scenario;
pub mod sfg;
pub mod spdc;

pub use error::{Error, Result};
