//! Two-qubit gates by their nonlocal coordinates: Choi-state purities, the
//! entropy plane, and gradient-based optimization of gate dictionaries.
//!
//! Entropy-plane orientation: `S_AC` pairs input qubit 1 with output qubit 1,
//! so the identity gate sits at `(0, 2)` and SWAP at `(2, 0)`.

mod cartan;
mod choi;
mod classify;
mod optimize;

pub use cartan::{cartan_unitary, CartanCoordinates};
pub use choi::{choi_state, purities, ChoiState, EntropyPair, PurityPair};
pub use classify::{classify_gate, convex_hull_area, region_scatter, GateLabel, DEFAULT_TOL, VERTICES};
pub use optimize::{
    optimize_gates, successive_alpha, successive_support, successive_width, DictOptimRun, GateRole,
    OptimConfig, SuccessiveProblem, MAX_SUCCESSIVE_WIDTH,
};
