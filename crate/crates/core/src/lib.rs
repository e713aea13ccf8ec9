//! Simulation library for finite-time quantum Otto cycles with a collective
//! spin working fluid.
//!
//! The working fluid is a spin-`j` system (`N = 2j` qubits). The library
//! covers the full cycle machinery:
//!
//! * [`spinops`] — collective angular-momentum operators in the `J_z`
//!   eigenbasis,
//! * [`states`] — density matrices, Gibbs states, entropy, fidelity and the
//!   reference-temperature solver,
//! * [`lindblad`] — dissipative thermalization (full master equation and the
//!   diagonal rate-equation fast path) plus entropy-production diagnostics,
//! * [`unitary`] — driven LMG Hamiltonians and unitarity-preserving
//!   propagation of the work strokes,
//! * [`meanfield`] — closed-form superradiant relaxation,
//! * [`otto`] — cycle orchestration, limit-cycle detection and the
//!   closed-form performance formulas,
//! * [`lmgcrit`] — parity-resolved LMG spectra and criticality scalings.
//!
//! Units: `ħ = k_B = 1`; the parameter `ω` sets the energy scale.

pub mod error;
pub mod fit;
pub mod lindblad;
pub mod lmgcrit;
pub mod meanfield;
pub mod otto;
pub mod spinops;
pub mod states;
pub mod trajectory;
pub mod unitary;

pub use error::{Error, Result};
pub use spinops::{Operator, SpinBasis};
