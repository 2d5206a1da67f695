//! Simulation core for collective weak-value amplification.
//!
//! Everything here is deterministic computation over dense complex vectors
//! and matrices, with no IO. The crate is `no_std`
//! and only needs `alloc`; the `wva-lab` crate layers the CLI and file
//! formats on top.
//!
//! Modules, bottom-up:
//!
//! - [`linalg`]: dense state vectors and operators, plus the Hermitian
//!   eigensolver behind `exp(-i s H)`.
//! - [`spin`]: collective spin-j (Dicke) space with the m-descending basis
//!   convention (index `k` holds `m = j - k`).
//! - [`boson`]: truncated Fock space with coherent states.
//! - [`wva`]: weak values and postselection, plus the strategy presets.
//! - [`circuits`]: full-amplitude simulation of the control-SWAP
//!   preparation and measurement circuits.
//! - [`fisher`]: quantum Fisher information of the joint and postselected
//!   states.
//! - [`dynamics`]: two-photon Tavis-Cummings evolution against the
//!   effective nonlinear Hamiltonian.
//! - [`experiments`]: scaling sweeps and log-log exponent fits.
#![no_std]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod boson;
pub mod circuits;
pub mod dynamics;
mod error;
pub mod experiments;
pub mod fisher;
pub mod linalg;
pub mod spin;
pub mod wva;

pub use boson::FockSpace;
pub use error::{Error, Result};
pub use linalg::{Operator, StateVector, C64};
pub use spin::{HalfInt, SpinSpace};
