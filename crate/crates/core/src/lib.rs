//! Exact arithmetic for the Weyl discrete-time quantum walk on the
//! body-centred cubic lattice.

pub mod combinatorics;
pub mod error;
pub mod lattice;
pub mod propagator;
pub mod verify;
pub mod walk;
pub mod wire;

pub use combinatorics::{c_coefficient, CoefficientQuery, DEFAULT_BUDGET};
pub use error::{CombinatoricsError, FloatOverflow, LatticeError, WalkError, WireError};
pub use lattice::{Site, StepCode, StepIndex, StringCounts};
pub use propagator::{
    convolve, propagator_brute_force, propagator_closed_form, propagator_from_evolution, Engine, Propagator,
    PropagatorTable,
};
pub use verify::{run_all, run_suite, Scale, Suite, SuiteReport, VerifyConfig};
pub use walk::{evolve, step, Amplitude, Chirality, Evolution, SpinMatrix, Spinor, TransitionTable, WalkState};
