//! Subradiant decay in disordered waveguide-coupled qubit chains.
//!
//! The crate covers the whole numerical pipeline: disordered geometries and
//! the effective Hamiltonian ([`model`]), its single-excitation spectrum
//! ([`spectrum`]), seeded disorder ensembles ([`ensemble`]), scaling fits and
//! the moment-based characteristic scale ([`scaling`]), finite-size-scaling
//! data collapse ([`fss`]) and localization diagnostics ([`localization`]).

pub mod ensemble;
pub mod error;
pub mod fss;
pub mod io;
pub mod localization;
pub mod model;
pub mod rng;
pub mod scaling;
pub mod spectrum;

pub use error::{Error, Result};
