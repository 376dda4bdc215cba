//! Exact simulation and learned design of classical-shadow measurement
//! circuits built from locally-scrambled two-qubit gates.

pub mod engine;
pub mod error;
pub mod eval;
pub mod gatelab;
pub mod generator;
pub mod linalg;
pub mod optim;

pub use error::{Error, Result};
