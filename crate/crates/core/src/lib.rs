//! Truncated Fock-space simulation of a bosonic mode absorbed by a qubit (or an
//! oscillator) through combined linear and nonlinear phase-insensitive
//! Jaynes–Cummings interactions.
//!
//! Each interaction on its own conserves a total excitation number and keeps
//! an initially Fock-diagonal oscillator incoherent. Their sum cannot satisfy
//! both resonance conditions at once, and the oscillator state reached after
//! tracing out the absorber develops Fock-basis coherence together with
//! strongly non-Gaussian, negative Wigner functions.
//!
//! The crate is organised bottom-up:
//!
//! - [`hilbert`]: composite spaces, dense and sparse operators, states,
//!   partial traces.
//! - [`models`]: the interaction Hamiltonians, free Hamiltonians and the
//!   dephasing dissipator, built from a declarative [`models::ModelSpec`].
//! - [`states`]: the incoherent (and pumped) initial states.
//! - [`evolution`]: eigen-propagators, sequential switching with its
//!   closed-form amplitudes, Lindblad integration and sparse propagation.
//! - [`observables`]: entropies, relative entropy of coherence, excitation and
//!   quadrature statistics, Gaussian-shell removal, Wigner grids.
//! - [`experiments`]: config-driven scenarios and parameter sweeps with
//!   persisted CSV/JSON artifacts.
//!
//! Conventions: Fock index 0 is the vacuum, the qubit basis is ordered
//! `(g, e)` so that `σz = diag(-1, +1)`, entropies are in nats, `ħ = 1`,
//! `g^(1) = 1` fixes the time unit and `τ = g^(2) t` is the scaled time.

pub mod error;
pub mod evolution;
pub mod experiments;
pub mod hilbert;
mod linalg;
pub mod models;
pub mod observables;
pub mod states;

pub use error::{Error, Result};
pub use hilbert::{Operator, QuantumState, SpaceLayout, C64};

/// Label of the qubit absorber factor.
pub const QUBIT: &str = "q";
/// Label of the target oscillator mode `b`.
pub const OSCILLATOR: &str = "b";
/// Label of the auxiliary mode `a` (oscillator absorber or pump mode).
pub const AUX_MODE: &str = "a";
