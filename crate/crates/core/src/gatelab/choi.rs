use num_complex::Complex64 as C64;

use crate::engine::UNITARITY_TOL;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat4};

/// Pure state on inputs A, B and outputs C, D of a two-qubit gate, with A↔C and
/// B↔D initially maximally entangled. Amplitude index `8a + 4b + 2c + d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiState {
    amplitudes: [C64; 16],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PurityPair {
    pub p_ac: f64,
    pub p_ad: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyPair {
    pub s_ac: f64,
    pub s_ad: f64,
}

impl ChoiState {
    pub fn amplitudes(&self) -> &[C64; 16] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn choi_state(u: &Mat4) -> Result<ChoiState> {
    let deviation = linalg::unitarity_deviation(u);
    if !(deviation <= UNITARITY_TOL) {
        return Err(Error::NonUnitary { deviation });
    }
    Ok(choi_unchecked(u))
}

pub(crate) fn choi_unchecked(u: &Mat4) -> ChoiState {
    let mut amplitudes = [linalg::ZERO; 16];
    for ab in 0..4 {
        for cd in 0..4 {
            amplitudes[4 * ab + cd] = u[cd][ab] * 0.5;
        }
    }
    ChoiState { amplitudes }
}

/// Purity of the marginal on {A, X} where X is output qubit `out` (0 = C, 1 = D).
fn cut_purity(chi: &ChoiState, out: usize) -> f64 {
    // Reshape as M[(a, x)][(b, y)] with y the other output, then Tr (M M^†)^2.
    let mut m = [[linalg::ZERO; 4]; 4];
    for (idx, &amp) in chi.amplitudes.iter().enumerate() {
        let (a, b, c, d) = (idx >> 3 & 1, idx >> 2 & 1, idx >> 1 & 1, idx & 1);
        let (x, y) = if out == 0 { (c, d) } else { (d, c) };
        m[2 * a + x][2 * b + y] = amp;
    }
    let rho = linalg::mul4(&m, &linalg::dagger4(&m));
    let sq = linalg::mul4(&rho, &rho);
    linalg::trace4(&sq).re
}

pub fn purities(chi: &ChoiState) -> PurityPair {
    PurityPair { p_ac: cut_purity(chi, 0), p_ad: cut_purity(chi, 1) }
}

impl PurityPair {
    pub fn entropies(&self) -> EntropyPair {
        EntropyPair { s_ac: -self.p_ac.log2(), s_ad: -self.p_ad.log2() }
    }
}

impl EntropyPair {
    pub fn of_unitary(u: &Mat4) -> Result<Self> {
        Ok(purities(&choi_state(u)?).entropies())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_purities() {
        let p = purities(&choi_state(&linalg::identity4()).unwrap());
        assert!((p.p_ac - 1.0).abs() < 1e-14);
        assert!((p.p_ad - 0.25).abs() < 1e-14);
        let e = p.entropies();
        assert!(e.s_ac.abs() < 1e-12 && (e.s_ad - 2.0).abs() < 1e-12);
    }

    #[test]
    fn named_gate_purities() {
        let p = purities(&choi_state(&linalg::iswap()).unwrap());
        assert!((p.p_ac - 0.25).abs() < 1e-14 && (p.p_ad - 0.5).abs() < 1e-14);
        let p = purities(&choi_state(&linalg::cz()).unwrap());
        assert!((p.p_ac - 0.5).abs() < 1e-14 && (p.p_ad - 0.25).abs() < 1e-14);
        let p = purities(&choi_state(&linalg::swap()).unwrap());
        assert!((p.p_ac - 0.25).abs() < 1e-14 && (p.p_ad - 1.0).abs() < 1e-14);
    }

    #[test]
    fn normalized() {
        let chi = choi_state(&linalg::iswap()).unwrap();
        assert!((chi.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_unitary() {
        let mut u = linalg::identity4();
        u[1][2] = linalg::ONE;
        assert!(matches!(choi_state(&u), Err(Error::NonUnitary { .. })));
    }
}
