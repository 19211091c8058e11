//! Two-mode cavity QED with driven two-level atoms.
//!
//! The crate covers the whole chain from the exact interaction-picture
//! Hamiltonians down to the effective beam-splitter (`χ O`) and quadratic
//! beam-splitter (`μ O²`) generators, the analytic entangled-coherent-state
//! construction they imply, and the phase-space observables used to inspect
//! the resulting field states.
//!
//! Units: `ħ = 1`, all frequencies are angular (rad/s), times in seconds.

pub mod ecs;
pub mod error;
pub mod evolve;
pub mod hamiltonian;
pub mod hilbert;
pub mod observables;
pub mod regimes;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
