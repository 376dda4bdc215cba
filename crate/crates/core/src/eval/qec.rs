//! Logical-operator readout for the [[8,3,2]] color code embedded in the first
//! eight qubits of a nine-qubit register.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::score_support;
use super::supports::rc_baseline;
use crate::engine::{Circuit, SupportConfig};
use crate::error::{Error, Result};
use crate::generator::Checkpoint;

pub const QEC_REGISTER: usize = 9;

/// Cube vertex `(x, y, z)` as a 1-based qubit index.
pub fn cube_vertex(x: usize, y: usize, z: usize) -> usize {
    1 + x + 2 * y + 4 * z
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodeSpec832 {
    pub register: usize,
    /// Weight-2 logical Z on an edge.
    pub z1: SupportConfig,
    /// Weight-4 logical X on a face.
    pub x1: SupportConfig,
}

impl CodeSpec832 {
    pub fn new() -> Self {
        let edge = [cube_vertex(0, 0, 0), cube_vertex(1, 0, 0)];
        let face = [cube_vertex(0, 0, 0), cube_vertex(1, 0, 0), cube_vertex(0, 1, 0), cube_vertex(1, 1, 0)];
        Self {
            register: QEC_REGISTER,
            z1: SupportConfig::from_qubits(&edge, QEC_REGISTER).expect("edge fits"),
            x1: SupportConfig::from_qubits(&face, QEC_REGISTER).expect("face fits"),
        }
    }

    pub fn operators(&self) -> [(&'static str, SupportConfig); 2] {
        [("Z1", self.z1), ("X1", self.x1)]
    }
}

impl Default for CodeSpec832 {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QecEntry {
    pub operator: &'static str,
    pub support: SupportConfig,
    pub alpha: f64,
    pub greedy_alpha: f64,
    pub baseline: f64,
    pub circuit: Circuit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QecReport {
    pub entries: Vec<QecEntry>,
}

pub fn qec_demo(ckpt: &Checkpoint, samples: usize, seed: u64) -> Result<QecReport> {
    if ckpt.n() != QEC_REGISTER {
        return Err(Error::Incompatible(format!(
            "the color-code demo needs a {QEC_REGISTER}-qubit model, checkpoint has {}",
            ckpt.n()
        )));
    }
    let code = CodeSpec832::new();
    let entries = code
        .operators()
        .iter()
        .enumerate()
        .map(|(i, &(name, q))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let row = score_support(&ckpt.params, q, ckpt.layers(), samples, &mut rng)?;
            Ok(QecEntry {
                operator: name,
                support: q,
                alpha: row.best_alpha,
                greedy_alpha: row.greedy_alpha,
                baseline: rc_baseline(q.size()),
                circuit: row.best_circuit,
            })
        })
        .collect::<Result<_>>()?;
    Ok(QecReport { entries })
}

impl QecReport {
    pub fn entry(&self, operator: &str) -> Option<&QecEntry> {
        self.entries.iter().find(|e| e.operator == operator)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("operator,support,alpha,greedy_alpha,baseline\n");
        for e in &self.entries {
            let _ = writeln!(s, "{},{},{:.12},{:.12},{:.12}", e.operator, e.support, e.alpha, e.greedy_alpha, e.baseline);
        }
        s
    }

    pub fn circuits_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(s, "# {} support={} alpha={:.6} baseline={:.6}", e.operator, e.support, e.alpha, e.baseline);
            s.push_str(&e.circuit.to_string());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{variance_of, GateKind};

    #[test]
    fn code_supports() {
        let c = CodeSpec832::new();
        assert_eq!(c.z1.to_string(), "110000000");
        assert_eq!(c.x1.to_string(), "111100000");
        assert_eq!(c.z1.size(), 2);
        assert_eq!(c.x1.size(), 4);
        assert_eq!(cube_vertex(1, 1, 1), 8);
    }

    #[test]
    fn single_iswap_anchor() {
        let c = CodeSpec832::new();
        let mut circ = Circuit::identity(9, 8).unwrap();
        circ.set_gate(0, 1, GateKind::ISwap).unwrap();
        let a = variance_of(&circ, c.z1).unwrap().alpha;
        assert!((a - (81.0f64 / 17.0).sqrt()).abs() < 1e-12);
        assert!(a <= 2.183);
    }
}
