//! Desk-scale simulation toolkit for dissipative preparation of steady
//! spin-squeezed states in an ensemble of silicon-vacancy centers
//! strain-coupled to a damped nanomechanical mode.
//!
//! The crate covers four layers:
//!
//! * operator algebra: one collective-spin sector ([`spin`]), a truncated
//!   phonon space ([`fock`]), the full 2^N two-level ensemble ([`ensemble`])
//!   and the four-level emitter model ([`siv`]), all sharing a small CSR
//!   sparse type ([`sparse`]);
//! * dynamics: Lindblad models with static or harmonically time-dependent
//!   Hamiltonians, an adaptive Runge-Kutta propagator, and steady-state
//!   extraction by null space or long-horizon integration ([`lindblad`],
//!   [`rk`], [`steady`]);
//! * closed forms: the analytic dark state and its exact squeezing curve
//!   ([`dark_state`]), linearized moment dynamics with dephasing
//!   ([`moments`]);
//! * device physics: clamped-clamped beam mechanics and strain coupling
//!   ([`beam`], [`orientation`]) and the four-level Zeeman structure
//!   ([`zeeman`]), in SI units bridged by [`units`].

pub mod beam;
pub mod dark_state;
pub mod ensemble;
pub mod error;
pub mod fock;
pub mod lindblad;
pub mod moments;
pub mod orientation;
pub mod rk;
pub mod siv;
pub mod sparse;
pub mod spin;
pub mod steady;
pub mod units;
pub mod zeeman;

pub use error::{Error, Result};
pub use sparse::SpMat;
