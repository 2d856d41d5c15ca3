//! Simulation of hybrid Rabi + STIRAP state preparation on a three-level
//! ladder, with closed-form adiabatic predictions, control synthesis for a
//! target qutrit state and ancilla-based phase readout.

pub mod adiabatic;
pub mod ancilla;
pub mod config;
pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod propagator;
pub mod run;
pub mod pulses;
mod quad;
pub mod state;
pub mod synthesis;

pub use error::{Error, Result};
pub use hamiltonian::{Hamiltonian, Model, ModelKind, ModelRegistry, ModelSpec, TransmonModel};
pub use propagator::{propagate, IntegratorRegistry, PropagateOptions, TimeGrid, Trajectory};
pub use pulses::{HybridSequence, PulseEnvelope, RabiTransition, SequenceParams, Shape, StirapDrive};
pub use state::{fidelity, QutritState};
