//! Simulation and inference toolkit for NV-center detection of nitroxide spin-label pairs.
//!
//! The crate is layered bottom-up:
//!
//! * [`constants`], [`operator`], [`spin`], [`rotation`], [`propagator`]: physical constants,
//!   dense spin operators, tensor rotations and exact propagators.
//! * [`nitroxide`]: nitroxide Hamiltonians, analytic energy-transition branches and the
//!   numerical-diagonalization oracle.
//! * [`geometry`], [`quadrature`]: dipolar couplings, rigid molecular tumbling and Gaussian
//!   ensemble averaging.
//! * [`deer`]: the DEER pulse sequence under unitary or Lindblad dynamics.
//! * [`response`]: the closed-form spectrum model used for inference.
//! * [`inference`]: simulated acquisition, likelihood, Metropolis sampling and summaries.
//! * [`config`]: the run-configuration schema and the bundled presets.
//!
//! All energies and rates are stored as angular frequencies in rad/s, times in seconds,
//! fields in mT and distances in nm. Use [`units`] to convert at the boundaries.

pub mod config;
pub mod constants;
pub mod deer;
pub mod error;
pub mod geometry;
pub mod inference;
pub mod linalg;
pub mod nitroxide;
pub mod operator;
pub mod propagator;
pub mod quadrature;
pub mod response;
pub mod rotation;
pub mod spin;
pub mod units;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use operator::Operator;
