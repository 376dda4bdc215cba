use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 16;

/// Support of a Pauli string: bit `i - 1` is set when qubit `i` carries a
/// non-identity factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportConfig {
    bits: u32,
    n: usize,
}

impl SupportConfig {
    pub fn new(bits: u32, n: usize) -> Result<Self> {
        check_width(n)?;
        if (bits as u64) >= (1u64 << n) {
            return Err(Error::InvalidSupport(format!(
                "bits {bits:#b} do not fit in {n} qubits"
            )));
        }
        Ok(Self { bits, n })
    }

    /// Build from 1-based qubit indices.
    pub fn from_qubits(qubits: &[usize], n: usize) -> Result<Self> {
        check_width(n)?;
        let mut bits = 0u32;
        for &q in qubits {
            if q == 0 || q > n {
                return Err(Error::InvalidSupport(format!("qubit {q} outside 1..={n}")));
            }
            bits |= 1 << (q - 1);
        }
        Ok(Self { bits, n })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Operator size, the number of qubits in the support.
    pub fn size(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn contains(&self, qubit: usize) -> bool {
        qubit >= 1 && qubit <= self.n && self.bits & (1 << (qubit - 1)) != 0
    }

    /// 1-based qubits in ascending order.
    pub fn qubits(&self) -> Vec<usize> {
        (1..=self.n).filter(|&q| self.contains(q)).collect()
    }

    /// Parse an `n`-character bitstring with qubit 1 leftmost.
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let s = s.trim();
        if s.chars().count() != n {
            return Err(Error::InvalidSupport(format!(
                "bitstring {s:?} has length {} but the register has {n} qubits",
                s.chars().count()
            )));
        }
        s.parse::<SupportConfig>()
    }
}

impl FromStr for SupportConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let n = s.len();
        check_width(n)?;
        let mut bits = 0u32;
        for (pos, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << pos,
                other => {
                    return Err(Error::InvalidSupport(format!(
                        "unexpected character {other:?} in bitstring {s:?}"
                    )))
                }
            }
        }
        Ok(Self { bits, n })
    }
}

impl fmt::Display for SupportConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 1..=self.n {
            f.write_str(if self.contains(q) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub(crate) fn check_width(n: usize) -> Result<()> {
    if !(2..=MAX_QUBITS).contains(&n) {
        return Err(Error::Config(format!(
            "qubit count {n} outside supported range 2..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Probability distribution over all `2^n` supports.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportDistribution {
    probs: Vec<f64>,
    n: usize,
}

impl SupportDistribution {
    pub fn point(config: SupportConfig) -> Self {
        let mut probs = vec![0.0; 1 << config.n()];
        probs[config.bits() as usize] = 1.0;
        Self { probs, n: config.n() }
    }

    /// Wrap an explicit probability vector, checking normalization.
    pub fn from_probs(probs: Vec<f64>, n: usize) -> Result<Self> {
        check_width(n)?;
        if probs.len() != 1 << n {
            return Err(Error::Shape(format!(
                "expected {} probabilities, got {}",
                1usize << n,
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidSupport("negative or NaN probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidSupport(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, config: SupportConfig) -> f64 {
        self.probs[config.bits() as usize]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub(crate) fn probs_mut(&mut self) -> &mut [f64] {
        &mut self.probs
    }
}
