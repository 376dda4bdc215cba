//! Scoring trained generators, the color-code demo, and a statevector check
//! of the weight engine.

mod mc;
mod qec;
mod report;
mod supports;

pub use mc::{
    estimate_pauli_expectation, haar_2x2, mc_estimate_weight, McConfig, PauliEstimate, PauliString, StateSpec,
    StateVector, WeightEstimate, MC_MAX_QUBITS,
};
pub use qec::{cube_vertex, qec_demo, CodeSpec832, QecEntry, QecReport, QEC_REGISTER};
pub use report::{aggregate, evaluate_model, score_support, EvalReport, SizeAggregate, SupportRow};
pub use supports::{binomial, enumerate_supports, parse_size_set, rc_baseline, SHALLOW_BAND};
