//! Pulse-driven exciton-vibration (vibronic) dynamics at desk scale.
//!
//! `N` two-level components (dimers) couple collectively and resonantly to a
//! single vibrational mode. The coupling is ramped up and back down by an
//! external pulse, which sweeps the system twice through the critical point
//! of the underlying Dicke-type model and leaves behind collective W-state
//! coherence. This crate builds the truncated Hilbert space and sparse
//! operators, propagates pure states (Schrödinger) and density operators
//! (Lindblad, damped field mode), and evaluates the reported observables:
//! Dicke-level probabilities, von Neumann entropy, (logarithmic) negativity,
//! vibrational Wigner functions, and the Landau-Zener-Stückelberg predictor.
//! A separate three-boson-mode model verifies that pump phase smearing leaves
//! vibrational populations untouched, which is what licenses the classical
//! time-dependent coupling in the first place.

pub mod dynamics;
mod error;
pub mod hilbert;
pub mod measures;
pub mod model;
pub mod parametric;

pub use error::{Error, Result};
