//! Register-level linear algebra and time evolution.

mod evolve;
mod hamiltonian;
mod liouvillian;
mod operator;
mod pauli;
mod state;

pub(crate) use evolve::{checked_sample, renormalize_checked, LindbladRhs, SchrodingerRk4};
pub use evolve::{
    evolve_density, evolve_state, lindblad_rhs, Jump, LindbladModel, TimeGrid, MAX_NEGATIVITY,
    MAX_STEP_NORM_DRIFT,
};
pub use hamiltonian::{Coefficient, Generator, Hamiltonian};
pub use liouvillian::{
    liouvillian_matrix, steady_states, unvectorize, vectorize, SteadyStates,
    MAX_SUPEROPERATOR_QUBITS, NULL_SPACE_RTOL,
};
pub use operator::{DenseOperator, LinearOperator};
pub use pauli::{check_site, excitation_number, pauli_string, site_mask, site_op, Axis};
pub(crate) use state::l2_norm;
pub use state::{expectation, DensityOperator, QuantumState, StateVector};
