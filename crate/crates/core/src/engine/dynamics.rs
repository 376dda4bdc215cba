//! Markov dynamics of the operator support under a brick-wall circuit and the
//! resulting Pauli weight, `w = Σ_m π(m) 3^{-m}`, whose inverse is the
//! shadow-estimation variance.

use super::circuit::{dictionary_matrix, Circuit, CircuitLayout};
use super::support::{SupportConfig, SupportDistribution};
use super::transfer::WeightTransferMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightMetrics {
    pub pauli_weight: f64,
    pub variance: f64,
    pub alpha: f64,
}

/// One Markov step on the pair `(i, j)` (1-based, `i < j`).
pub fn apply_gate(
    dist: &SupportDistribution,
    t: &WeightTransferMatrix,
    pair: (usize, usize),
) -> Result<SupportDistribution> {
    let mut out = dist.clone();
    apply_in_place(&mut out, t, pair)?;
    Ok(out)
}

pub fn apply_in_place(
    dist: &mut SupportDistribution,
    t: &WeightTransferMatrix,
    (i, j): (usize, usize),
) -> Result<()> {
    let n = dist.n();
    if i == 0 || i >= j || j > n {
        return Err(Error::QubitIndex { i, j, n });
    }
    apply_raw(dist.probs_mut(), t.as_array(), i - 1, j - 1);
    Ok(())
}

/// Strided update over all configurations with bits `bi` and `bj` cleared.
pub(crate) fn apply_raw(probs: &mut [f64], t: &[[f64; 4]; 4], bi: usize, bj: usize) {
    let (mi, mj) = (1usize << bi, 1usize << bj);
    for base in 0..probs.len() {
        if base & (mi | mj) != 0 {
            continue;
        }
        let idx = [base, base | mj, base | mi, base | mi | mj];
        let v = idx.map(|k| probs[k]);
        if v == [0.0; 4] {
            continue;
        }
        for (row, &k) in t.iter().zip(idx.iter()) {
            probs[k] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
    }
}

pub fn evolve(circuit: &Circuit, initial: SupportConfig) -> Result<SupportDistribution> {
    if initial.n() != circuit.n() {
        return Err(Error::Config(format!(
            "support has {} qubits but the circuit has {}",
            initial.n(),
            circuit.n()
        )));
    }
    let layout = circuit.layout();
    let mut dist = SupportDistribution::point(initial);
    for (t, layer) in circuit.layers().iter().enumerate() {
        for (gate, pair) in layer.iter().zip(layout.pairs(t)) {
            let m = dictionary_matrix(gate)?;
            if m == WeightTransferMatrix::identity() {
                continue;
            }
            apply_in_place(&mut dist, &m, pair)?;
        }
    }
    Ok(dist)
}

/// Evolve with explicit per-slot matrices, `layers[t][slot]`.
pub fn evolve_matrices(
    layout: CircuitLayout,
    layers: &[Vec<WeightTransferMatrix>],
    initial: SupportConfig,
) -> Result<SupportDistribution> {
    let mut dist = SupportDistribution::point(initial);
    for (t, layer) in layers.iter().enumerate() {
        let pairs = layout.pairs(t);
        if pairs.len() != layer.len() {
            return Err(Error::Config(format!(
                "layer {} has {} matrices for {} slots",
                t + 1,
                layer.len(),
                pairs.len()
            )));
        }
        for (m, pair) in layer.iter().zip(pairs) {
            apply_in_place(&mut dist, m, pair)?;
        }
    }
    Ok(dist)
}

pub fn size_distribution(dist: &SupportDistribution) -> Vec<f64> {
    let mut pi = vec![0.0; dist.n() + 1];
    for (config, &p) in dist.probs().iter().enumerate() {
        pi[config.count_ones() as usize] += p;
    }
    pi
}

/// Pauli weight, variance and scaling parameter for an operator of size `k`.
pub fn pauli_weight(pi: &[f64], k: usize) -> Result<WeightMetrics> {
    if k == 0 {
        return Err(Error::DegenerateOperator);
    }
    let mut w = 0.0;
    let mut scale = 1.0;
    for &p in pi {
        w += p * scale;
        scale /= 3.0;
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::Internal(format!("non-positive Pauli weight {w}")));
    }
    let variance = 1.0 / w;
    Ok(WeightMetrics { pauli_weight: w, variance, alpha: variance.powf(1.0 / k as f64) })
}

pub fn variance_of(circuit: &Circuit, q: SupportConfig) -> Result<WeightMetrics> {
    if q.size() == 0 {
        return Err(Error::DegenerateOperator);
    }
    let dist = evolve(circuit, q)?;
    pauli_weight(&size_distribution(&dist), q.size())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::circuit::GateKind;

    fn iswap() -> WeightTransferMatrix {
        dictionary_matrix(&GateKind::ISwap).unwrap()
    }

    #[test]
    fn identity_leaves_distribution() {
        let q = SupportConfig::parse("101", 3).unwrap();
        let d = SupportDistribution::point(q);
        let out = apply_gate(&d, &WeightTransferMatrix::identity(), (1, 2)).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn iswap_on_full_pair() {
        let d = SupportDistribution::point(SupportConfig::parse("11", 2).unwrap());
        let out = apply_gate(&d, &iswap(), (1, 2)).unwrap();
        let p = |s: &str| out.prob(SupportConfig::parse(s, 2).unwrap());
        assert!((p("01") - 2.0 / 9.0).abs() < 1e-15);
        assert!((p("10") - 2.0 / 9.0).abs() < 1e-15);
        assert!((p("11") - 5.0 / 9.0).abs() < 1e-15);
        assert_eq!(p("00"), 0.0);
    }

    #[test]
    fn swap_moves_support() {
        let d = SupportDistribution::point(SupportConfig::parse("110", 3).unwrap());
        let s = dictionary_matrix(&GateKind::Swap).unwrap();
        let out = apply_gate(&d, &s, (2, 3)).unwrap();
        assert_eq!(out.prob(SupportConfig::parse("101", 3).unwrap()), 1.0);
    }

    #[test]
    fn pair_out_of_range() {
        let d = SupportDistribution::point(SupportConfig::parse("110", 3).unwrap());
        assert!(matches!(apply_gate(&d, &iswap(), (3, 4)), Err(Error::QubitIndex { .. })));
        assert!(matches!(apply_gate(&d, &iswap(), (2, 2)), Err(Error::QubitIndex { .. })));
        assert!(matches!(apply_gate(&d, &iswap(), (0, 1)), Err(Error::QubitIndex { .. })));
    }

    #[test]
    fn size_distribution_counts() {
        let d = SupportDistribution::from_probs(vec![0.25; 4], 2).unwrap();
        assert_eq!(size_distribution(&d), vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn weight_arithmetic() {
        let m = pauli_weight(&[0.0, 4.0 / 9.0, 5.0 / 9.0], 2).unwrap();
        assert!((m.pauli_weight - 17.0 / 81.0).abs() < 1e-15);
        assert!((m.variance - 81.0 / 17.0).abs() < 1e-12);
        assert!((m.alpha - 2.182820625326997).abs() < 1e-12);
        let m = pauli_weight(&[0.0, 1.0 / 3.0, 2.0 / 3.0], 1).unwrap();
        assert!((m.pauli_weight - 5.0 / 27.0).abs() < 1e-15);
        assert!((m.variance - 5.4).abs() < 1e-12);
        let m = pauli_weight(&[0.0, 0.0, 0.0, 1.0], 3).unwrap();
        assert!((m.variance - 27.0).abs() < 1e-12);
        assert!((m.alpha - 3.0).abs() < 1e-12);
        assert!(matches!(pauli_weight(&[1.0], 0), Err(Error::DegenerateOperator)));
    }

    #[test]
    fn empty_support_is_degenerate() {
        let c = Circuit::identity(4, 2).unwrap();
        let q = SupportConfig::new(0, 4).unwrap();
        assert!(matches!(variance_of(&c, q), Err(Error::DegenerateOperator)));
    }

    #[test]
    fn width_mismatch() {
        let c = Circuit::identity(4, 2).unwrap();
        let q = SupportConfig::parse("110", 3).unwrap();
        assert!(matches!(evolve(&c, q), Err(Error::Config(_))));
    }
}
