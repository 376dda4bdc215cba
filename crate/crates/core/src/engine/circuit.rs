use std::fmt;

use super::support::check_width;
use super::transfer::{self, WeightTransferMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat4};

/// A two-qubit gate of the brick-wall circuit. The named variants stand for
/// their locally-scrambled ensembles; `Custom` carries an explicit transfer
/// matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    I,
    Swap,
    ISwap,
    Cz,
    Custom(Option<WeightTransferMatrix>),
}

/// The gate dictionary used by the generator, in token order.
pub const DICTIONARY: [GateKind; 3] = [GateKind::I, GateKind::Swap, GateKind::ISwap];

impl GateKind {
    pub fn token(&self) -> &'static str {
        match self {
            GateKind::I => "I",
            GateKind::Swap => "S",
            GateKind::ISwap => "iS",
            GateKind::Cz => "CZ",
            GateKind::Custom(_) => "U",
        }
    }

    pub fn from_token(tok: &str) -> Result<Self> {
        match tok.trim() {
            "I" => Ok(GateKind::I),
            "S" => Ok(GateKind::Swap),
            "iS" => Ok(GateKind::ISwap),
            "CZ" => Ok(GateKind::Cz),
            other => Err(Error::InvalidGate(format!("unknown gate token {other:?}"))),
        }
    }

    /// Parse the longer names accepted on the command line.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "i" | "id" | "identity" => Ok(GateKind::I),
            "s" | "swap" => Ok(GateKind::Swap),
            "is" | "iswap" => Ok(GateKind::ISwap),
            "cz" => Ok(GateKind::Cz),
            other => Err(Error::InvalidGate(format!("unknown gate name {other:?}"))),
        }
    }

    /// Position in [`DICTIONARY`], if the gate belongs to it.
    pub fn dictionary_index(&self) -> Option<usize> {
        DICTIONARY.iter().position(|g| g == self)
    }

    /// Representative unitary of a named gate.
    pub fn canonical_unitary(&self) -> Result<Mat4> {
        match self {
            GateKind::I => Ok(linalg::identity4()),
            GateKind::Swap => Ok(linalg::swap()),
            GateKind::ISwap => Ok(linalg::iswap()),
            GateKind::Cz => Ok(linalg::cz()),
            GateKind::Custom(_) => Err(Error::InvalidGate("custom gate has no canonical unitary".into())),
        }
    }
}

/// Transfer matrix of a gate; exact rationals for the named gates.
pub fn dictionary_matrix(kind: &GateKind) -> Result<WeightTransferMatrix> {
    match kind {
        GateKind::Custom(Some(t)) => Ok(*t),
        GateKind::Custom(None) => Err(Error::InvalidGate("custom gate without a transfer matrix".into())),
        named => {
            let exact = transfer::rational_matrix(named)
                .ok_or_else(|| Error::Internal("named gate missing from table".into()))?;
            Ok(transfer::rational_to_f64(&exact))
        }
    }
}

/// Brick-wall pairing for `n` qubits. Layer index 0 is the first ("odd")
/// layer, pairing (1,2),(3,4),…; index 1 pairs (2,3),(4,5),….
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CircuitLayout {
    n: usize,
}

impl CircuitLayout {
    pub fn new(n: usize) -> Result<Self> {
        check_width(n)?;
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 1-based qubit pairs of layer `layer` (0-based).
    pub fn pairs(&self, layer: usize) -> Vec<(usize, usize)> {
        let first = if layer.is_multiple_of(2) { 1 } else { 2 };
        (first..self.n).step_by(2).map(|i| (i, i + 1)).collect()
    }

    pub fn gates_in_layer(&self, layer: usize) -> usize {
        if layer.is_multiple_of(2) {
            self.n / 2
        } else {
            (self.n - 1) / 2
        }
    }

    /// Widest layer; the generator emits this many blocks per step.
    pub fn max_gates(&self) -> usize {
        self.n / 2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    layout: CircuitLayout,
    layers: Vec<Vec<GateKind>>,
}

impl Circuit {
    pub fn new(n: usize, layers: Vec<Vec<GateKind>>) -> Result<Self> {
        let layout = CircuitLayout::new(n)?;
        for (t, layer) in layers.iter().enumerate() {
            let want = layout.gates_in_layer(t);
            if layer.len() != want {
                return Err(Error::Config(format!(
                    "layer {} has {} gates but the brick-wall layout has {want} slots",
                    t + 1,
                    layer.len()
                )));
            }
        }
        Ok(Self { layout, layers })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    /// `depth` layers of the identity gate.
    pub fn identity(n: usize, depth: usize) -> Result<Self> {
        let layout = CircuitLayout::new(n)?;
        let layers = (0..depth).map(|t| vec![GateKind::I; layout.gates_in_layer(t)]).collect();
        Ok(Self { layout, layers })
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn layout(&self) -> CircuitLayout {
        self.layout
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<GateKind>] {
        &self.layers
    }

    /// Replace the gate on the slot containing the pair `(i, i+1)` of layer `layer`.
    pub fn set_gate(&mut self, layer: usize, i: usize, gate: GateKind) -> Result<()> {
        let pairs = self.layout.pairs(layer);
        let slot = pairs
            .iter()
            .position(|&(a, _)| a == i)
            .ok_or(Error::QubitIndex { i, j: i + 1, n: self.layout.n })?;
        let row = self
            .layers
            .get_mut(layer)
            .ok_or_else(|| Error::Config(format!("layer {} does not exist", layer + 1)))?;
        row[slot] = gate;
        Ok(())
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.layers.iter().flatten().filter(|g| **g == kind).count()
    }

    /// Parse the text format: one line per layer, comma-separated tokens in
    /// pair order. A layer with no slots is written `-`. Lines starting with
    /// `#` are ignored.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut layers = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let layer = if line == "-" {
                Vec::new()
            } else {
                line.split(',')
                    .map(GateKind::from_token)
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?
            };
            layers.push(layer);
        }
        Self::new(n, layers)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for layer in &self.layers {
            if layer.is_empty() {
                writeln!(f, "-")?;
                continue;
            }
            let toks: Vec<&str> = layer.iter().map(GateKind::token).collect();
            writeln!(f, "{}", toks.join(","))?;
        }
        Ok(())
    }
}
