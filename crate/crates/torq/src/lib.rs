//! Numerical simulator for the toroidal superconducting flux qubit:
//! circuit quantization of the two-node loop, spectra and circulating
//! currents versus bias, effective two-level parameters, toroidal-moment
//! couplings in SI units, and a seeded fabrication-disorder ensemble.

pub mod circuit;
pub mod config;
pub mod constants;
pub mod disorder;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod observables;
pub mod solve;
pub mod sweep;
pub mod toroidal;

pub use circuit::{Bias, CircuitParams, Design, ModeTransform};
pub use error::{Result, TorqError};
pub use hamiltonian::{BasisTag, ChargeBasisSpec, FluxGridSpec, HamiltonianMatrix};
pub use solve::Spectrum;
