//! Simulation of protective quantum measurements.
//!
//! A system with Hamiltonian `H_S` (diagonal energies) is coupled to a
//! pointer through `g(t) P ⊗ O`, with `g` a unit-area window on
//! `[-T/2, T/2]`. For each pointer momentum `a` the system evolves under
//! `H_S + a g(t) O`. This crate provides:
//!
//! * [`profiles`]: coupling windows and their Fourier transforms,
//! * [`system`]: the system and the Gaussian pointer,
//! * [`perturbation`]: Dyson-series amplitudes and related closed forms,
//! * [`oracle`]: exact propagation used to check the perturbative results,
//! * [`scaling`]: envelope fits, FWHM and profile-comparison reports.
//!
//! Units have `ħ = 1`.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod config;
pub mod error;
pub mod oracle;
pub mod output;
mod par;
pub mod perturbation;
pub mod profiles;
pub mod quadrature;
pub mod scaling;
pub mod system;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use profiles::{CouplingProfile, ProfileKind};
pub use system::{ApparatusModel, PointerModel, SystemModel};
