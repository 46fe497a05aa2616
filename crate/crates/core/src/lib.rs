//! Dark-path holonomic gates on qudits.
//!
//! The crate builds the dark–bright basis for a `d`-level qudit, the
//! reverse-engineered pulse schedule of one multi-pulse loop, integrates the
//! Schrödinger equation through it and composes loops into gates. On top of
//! that sit the two-qudit conditional gate and the Rabi-error robustness sweep.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dark_bright;
pub mod error;
pub mod evolution;
mod integrate;
pub mod linalg;
pub mod optimize;
pub mod pulse;
pub mod qudit;
pub mod robustness;
pub mod synthesis;
pub mod two_qudit;

pub use dark_bright::{bare_couplings, build_basis, dark_coefficients, DarkAngles, DarkBrightBasis};
pub use error::{Error, Result};
pub use evolution::{
    dark_path_state, loop_propagator, program_propagator, propagate, simulate_state, IntegratorConfig, Trajectory,
};
pub use pulse::{hamiltonian, rabi, u_v, Frame, LoopParams, PulseSchedule, Segment};
pub use qudit::{fidelity, gate_distance, random_state, LevelSpace, QuditState, Unitary};
pub use robustness::{average_fidelity, population_trace, run_sweep, SweepResult, SweepSpec};
pub use synthesis::{compose, find_parameters, holonomy_one_loop, min_loops, named_gate, GateProgram, NamedGate};
pub use two_qudit::{
    bar_hamiltonian, conditional_gate, effective_hamiltonian, laser_to_couplings, LaserConfig, TwoQuditSpace,
};
