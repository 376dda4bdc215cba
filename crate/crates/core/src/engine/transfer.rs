//! Support-class transfer matrices of locally-scrambled two-qubit gates.
//!
//! Local classes of an ordered pair `(i, j)` are indexed `2*b_i + b_j`, i.e.
//! 00, 01, 10, 11 with the first character for qubit `i`. Entry `t[out][in]`
//! is the probability that a uniformly random Pauli of class `in`, conjugated
//! by the gate, lands in class `out`.

use num_complex::Complex64 as C64;
use num_rational::Ratio;

use super::circuit::GateKind;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat4};

pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightTransferMatrix {
    t: [[f64; 4]; 4],
}

impl WeightTransferMatrix {
    pub fn identity() -> Self {
        let mut t = [[0.0; 4]; 4];
        for (k, row) in t.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        Self { t }
    }

    /// Validate a raw matrix against the transfer-matrix invariants.
    pub fn new(t: [[f64; 4]; 4]) -> Result<Self> {
        for col in 0..4 {
            let sum: f64 = (0..4).map(|row| t[row][col]).sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidGate(format!("column {col} sums to {sum}")));
            }
        }
        if t.iter().flatten().any(|&x| !(-1e-15..=1.0 + 1e-15).contains(&x)) {
            return Err(Error::InvalidGate("entry outside [0, 1]".into()));
        }
        if t[0] != [1.0, 0.0, 0.0, 0.0] || (1..4).any(|r| t[r][0] != 0.0) {
            return Err(Error::InvalidGate(
                "identity class must map to itself and nothing else to it".into(),
            ));
        }
        Ok(Self { t })
    }

    pub fn get(&self, out: usize, input: usize) -> f64 {
        self.t[out][input]
    }

    pub fn as_array(&self) -> &[[f64; 4]; 4] {
        &self.t
    }

    /// Matrix product `self · rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut t = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                t[r][c] = (0..4).map(|k| self.t[r][k] * rhs.t[k][c]).sum();
            }
        }
        Self { t }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.t
            .iter()
            .flatten()
            .zip(other.t.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn pauli_x_bit(p: usize) -> usize {
    usize::from(p == 1 || p == 2)
}

fn pauli_phase(p: usize, col_bit: usize) -> C64 {
    match (p, col_bit) {
        (2, 0) => linalg::I,
        (2, 1) => -linalg::I,
        (3, 1) => -linalg::ONE,
        _ => linalg::ONE,
    }
}

/// Nonzero column structure of the two-qubit Pauli `4*a + b`: row `r` holds
/// `phase[r]` at column `r ^ flip`.
fn pauli_monomial(idx: usize) -> (usize, [C64; 4]) {
    let (p1, p2) = (idx / 4, idx % 4);
    let flip = 2 * pauli_x_bit(p1) + pauli_x_bit(p2);
    let mut phase = [linalg::ONE; 4];
    for (r, ph) in phase.iter_mut().enumerate() {
        // P[r][c] with c = r ^ flip; phase depends on the column bits.
        let c = r ^ flip;
        *ph = pauli_phase(p1, c >> 1) * pauli_phase(p2, c & 1);
    }
    (flip, phase)
}

fn support_class(idx: usize) -> usize {
    2 * usize::from(idx / 4 != 0) + usize::from(!idx.is_multiple_of(4))
}

/// Squared Pauli-transfer coefficients `|Tr(P_a u P_b u^dag) / 4|^2`, row `a`,
/// column `b`.
pub fn pauli_transfer_squared(u: &Mat4) -> [[f64; 16]; 16] {
    let monomials: Vec<(usize, [C64; 4])> = (0..16).map(pauli_monomial).collect();
    let udag = linalg::dagger4(u);
    let mut out = [[0.0; 16]; 16];
    for (b, &(flip_b, phase_b)) in monomials.iter().enumerate() {
        // u · P_b, using P_b[k][c] = phase_b[k] at k = c ^ flip_b.
        let mut up = [[linalg::ZERO; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                let k = c ^ flip_b;
                up[r][c] = u[r][k] * phase_b[k];
            }
        }
        let m = linalg::mul4(&up, &udag);
        for (a, &(flip_a, phase_a)) in monomials.iter().enumerate() {
            // Tr(P_a M) = sum_r P_a[r][r ^ flip] M[r ^ flip][r]
            let tr: C64 = (0..4).map(|r| phase_a[r] * m[r ^ flip_a][r]).sum();
            out[a][b] = (tr / 4.0).norm_sqr();
        }
    }
    out
}

/// Second-moment channel of the locally-scrambled ensemble `(a⊗b) u (c⊗d)` on
/// support classes.
pub fn transfer_matrix_from_unitary(u: &Mat4) -> Result<WeightTransferMatrix> {
    let deviation = linalg::unitarity_deviation(u);
    if !(deviation <= UNITARITY_TOL) {
        return Err(Error::NonUnitary { deviation });
    }
    Ok(transfer_matrix_unchecked(u))
}

pub(crate) fn transfer_matrix_unchecked(u: &Mat4) -> WeightTransferMatrix {
    let r2 = pauli_transfer_squared(u);
    let mut t = [[0.0; 4]; 4];
    for (a, row) in r2.iter().enumerate() {
        for (b, &x) in row.iter().enumerate() {
            t[support_class(a)][support_class(b)] += x;
        }
    }
    for col in 0..4 {
        let weight = 3f64.powi(-((col as u32).count_ones() as i32));
        for row in t.iter_mut() {
            row[col] *= weight;
        }
    }
    // Exact structural zeros: the identity class is fixed by conjugation.
    t[0] = [1.0, 0.0, 0.0, 0.0];
    for row in t.iter_mut().skip(1) {
        row[0] = 0.0;
    }
    WeightTransferMatrix { t }
}

pub type RationalMatrix = [[Ratio<i64>; 4]; 4];

fn rational(entries: [[(i64, i64); 4]; 4]) -> RationalMatrix {
    entries.map(|row| row.map(|(n, d)| Ratio::new(n, d)))
}

/// Exact transfer matrices of the named gates.
pub fn rational_matrix(kind: &GateKind) -> Option<RationalMatrix> {
    let z = (0, 1);
    let o = (1, 1);
    Some(match kind {
        GateKind::I => rational([[o, z, z, z], [z, o, z, z], [z, z, o, z], [z, z, z, o]]),
        GateKind::Swap => rational([[o, z, z, z], [z, z, o, z], [z, o, z, z], [z, z, z, o]]),
        GateKind::ISwap => rational([
            [o, z, z, z],
            [z, z, (1, 3), (2, 9)],
            [z, (1, 3), z, (2, 9)],
            [z, (2, 3), (2, 3), (5, 9)],
        ]),
        GateKind::Cz => rational([
            [o, z, z, z],
            [z, (1, 3), z, (2, 9)],
            [z, z, (1, 3), (2, 9)],
            [z, (2, 3), (2, 3), (5, 9)],
        ]),
        GateKind::Custom(_) => return None,
    })
}

pub fn rational_to_f64(m: &RationalMatrix) -> WeightTransferMatrix {
    let t = m.map(|row| row.map(|x| *x.numer() as f64 / *x.denom() as f64));
    WeightTransferMatrix { t }
}

pub fn rational_mul(a: &RationalMatrix, b: &RationalMatrix) -> RationalMatrix {
    let mut m = [[Ratio::new(0, 1); 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            m[r][c] = (0..4).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_swap_are_permutations() {
        let t = transfer_matrix_from_unitary(&linalg::identity4()).unwrap();
        assert!(t.max_abs_diff(&WeightTransferMatrix::identity()) < 1e-14);
        let s = transfer_matrix_from_unitary(&linalg::swap()).unwrap();
        assert!((s.get(2, 1) - 1.0).abs() < 1e-14);
        assert!((s.get(1, 2) - 1.0).abs() < 1e-14);
        assert!((s.get(3, 3) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn iswap_columns() {
        let t = transfer_matrix_from_unitary(&linalg::iswap()).unwrap();
        let expect = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0 / 3.0, 2.0 / 9.0],
            [0.0, 1.0 / 3.0, 0.0, 2.0 / 9.0],
            [0.0, 2.0 / 3.0, 2.0 / 3.0, 5.0 / 9.0],
        ];
        assert!(t.max_abs_diff(&WeightTransferMatrix { t: expect }) < 1e-14);
    }

    #[test]
    fn cz_columns() {
        let t = transfer_matrix_from_unitary(&linalg::cz()).unwrap();
        assert!((t.get(1, 1) - 1.0 / 3.0).abs() < 1e-14);
        assert!((t.get(3, 1) - 2.0 / 3.0).abs() < 1e-14);
        assert!((t.get(2, 2) - 1.0 / 3.0).abs() < 1e-14);
        assert!((t.get(1, 3) - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_unitary() {
        let mut u = linalg::identity4();
        u[0][0] = C64::new(1.1, 0.0);
        match transfer_matrix_from_unitary(&u) {
            Err(Error::NonUnitary { deviation }) => assert!((deviation - 0.21).abs() < 1e-12),
            other => panic!("expected unitarity error, got {other:?}"),
        }
    }

    #[test]
    fn validation_rejects_bad_columns() {
        let mut t = [[0.0; 4]; 4];
        t[0][0] = 1.0;
        t[1][1] = 0.5;
        t[2][2] = 1.0;
        t[3][3] = 1.0;
        assert!(WeightTransferMatrix::new(t).is_err());
        assert!(WeightTransferMatrix::new(WeightTransferMatrix::identity().t).is_ok());
    }
}
