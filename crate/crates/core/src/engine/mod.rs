//! Exact operator-size dynamics for brick-wall circuits of locally-scrambled
//! two-qubit gates.
//!
//! Qubits are 1-based everywhere in the public surface; qubit `i` is bit
//! `i - 1` of a [`SupportConfig`].

mod circuit;
mod dynamics;
mod support;
mod transfer;

pub use circuit::{dictionary_matrix, Circuit, CircuitLayout, GateKind, DICTIONARY};
pub use dynamics::{
    apply_gate, apply_in_place, evolve, evolve_matrices, pauli_weight, size_distribution,
    variance_of, WeightMetrics,
};
pub(crate) use transfer::transfer_matrix_unchecked;
pub use support::{SupportConfig, SupportDistribution, MAX_QUBITS};
pub use transfer::{
    pauli_transfer_squared, rational_matrix, rational_mul, rational_to_f64,
    transfer_matrix_from_unitary, RationalMatrix, WeightTransferMatrix, UNITARITY_TOL,
};
