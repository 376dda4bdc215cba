//! Brute-force reference implementations shared by the integration tests.
//! Everything here works on dense matrices and avoids the library's fast paths.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use shadowgen_core::engine::{Circuit, GateKind, SupportConfig};
use shadowgen_core::eval::haar_2x2;
use shadowgen_core::gatelab::CartanCoordinates;
use shadowgen_core::linalg::{self, Mat4};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_dense(idx: usize) -> Array2<C64> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let m = match idx {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [o, z]],
        2 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    };
    Array2::from_shape_fn((2, 2), |(r, s)| m[r][s])
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(r, s)| a[[r / br, s / bc]] * b[[r % br, s % bc]])
}

pub fn to_dense(u: &Mat4) -> Array2<C64> {
    Array2::from_shape_fn((4, 4), |(r, s)| u[r][s])
}

pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|x| x.conj())
}

pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().sum()
}

/// Two-qubit Pauli `P_a ⊗ P_b` with index `4a + b`.
pub fn pauli2_dense(idx: usize) -> Array2<C64> {
    kron(&pauli_dense(idx / 4), &pauli_dense(idx % 4))
}

/// Support class of a two-qubit Pauli index: `2·[a≠0] + [b≠0]`.
pub fn class_of(idx: usize) -> usize {
    2 * usize::from(idx / 4 != 0) + usize::from(!idx.is_multiple_of(4))
}

/// `|Tr(P' U P U^†)/4|^2` for every pair, by dense multiplication.
pub fn pauli_overlaps(u: &Mat4) -> [[f64; 16]; 16] {
    let ud = to_dense(u);
    let udag = dagger(&ud);
    let mut out = [[0.0; 16]; 16];
    for (p, col) in (0..16).map(|p| (p, pauli2_dense(p))) {
        let conj = ud.dot(&col).dot(&udag);
        for (pp, row) in out.iter_mut().enumerate() {
            row[p] = (trace(&pauli2_dense(pp).dot(&conj)) / 4.0).norm_sqr();
        }
    }
    out
}

/// Locally-scrambled transfer matrix `t[out][in]` from the 16-Pauli
/// conjugation tally.
pub fn oracle_transfer(u: &Mat4) -> [[f64; 4]; 4] {
    let ov = pauli_overlaps(u);
    let mut t = [[0.0; 4]; 4];
    let mut members = [0usize; 4];
    for p in 0..16 {
        members[class_of(p)] += 1;
    }
    for p in 0..16 {
        for pp in 0..16 {
            t[class_of(pp)][class_of(p)] += ov[pp][p] / members[class_of(p)] as f64;
        }
    }
    t
}

/// Exact locally-scrambled evolution over all `4^n` Pauli strings. Before
/// every gate the two touched qubits are scrambled (non-identity factors made
/// uniform over X, Y, Z); the gate then acts by its full Pauli overlap table.
/// Returns the support distribution indexed by support bits.
pub fn oracle_support_distribution(circuit: &Circuit, q: SupportConfig, gates: &[Vec<Mat4>]) -> Vec<f64> {
    let n = circuit.n();
    let dim = 4usize.pow(n as u32);
    // string index: digit for qubit i (1-based) at base-4 position i-1
    let digit = |s: usize, i: usize| (s / 4usize.pow(i as u32 - 1)) % 4;
    let set = |s: usize, i: usize, d: usize| s - digit(s, i) * 4usize.pow(i as u32 - 1) + d * 4usize.pow(i as u32 - 1);
    let mut start = 0;
    for i in q.qubits() {
        start = set(start, i, 3);
    }
    let mut dist = vec![0.0; dim];
    dist[start] = 1.0;
    let layout = circuit.layout();
    for (t, layer) in gates.iter().enumerate() {
        for (u, (i, j)) in layer.iter().zip(layout.pairs(t)) {
            let ov = pauli_overlaps(u);
            let mut next = vec![0.0; dim];
            for (s, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let (a, b) = (digit(s, i), digit(s, j));
                // scramble: spread over every Pauli pair with the same support
                let choices_a: Vec<usize> = if a == 0 { vec![0] } else { vec![1, 2, 3] };
                let choices_b: Vec<usize> = if b == 0 { vec![0] } else { vec![1, 2, 3] };
                let share = p / (choices_a.len() * choices_b.len()) as f64;
                for &a2 in &choices_a {
                    for &b2 in &choices_b {
                        let pin = 4 * a2 + b2;
                        for (pout, row) in ov.iter().enumerate() {
                            let w = row[pin];
                            if w == 0.0 {
                                continue;
                            }
                            let s2 = set(set(s, i, pout / 4), j, pout % 4);
                            next[s2] += share * w;
                        }
                    }
                }
            }
            dist = next;
        }
    }
    let mut supports = vec![0.0; 1 << n];
    for (s, &p) in dist.iter().enumerate() {
        let bits = (1..=n).filter(|&i| digit(s, i) != 0).fold(0usize, |acc, i| acc | 1 << (i - 1));
        supports[bits] += p;
    }
    supports
}

pub fn weight_from_supports(supports: &[f64]) -> f64 {
    supports.iter().enumerate().map(|(bits, p)| p * 3f64.powi(-(bits.count_ones() as i32))).sum()
}

pub fn random_unitary_4(rng: &mut ChaCha8Rng) -> Mat4 {
    let c = CartanCoordinates::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    dress(&c.unitary(), rng)
}

/// `(a⊗b) u (c⊗d)` with Haar single-qubit factors.
pub fn dress(u: &Mat4, rng: &mut ChaCha8Rng) -> Mat4 {
    let left = linalg::kron(&haar_2x2(rng), &haar_2x2(rng));
    let right = linalg::kron(&haar_2x2(rng), &haar_2x2(rng));
    linalg::mul4(&left, &linalg::mul4(u, &right))
}

/// Random brick-wall circuit mixing named gates and random unitaries. Returns
/// the engine circuit and the unitary of every slot.
pub fn random_circuit(n: usize, depth: usize, rng: &mut ChaCha8Rng) -> (Circuit, Vec<Vec<Mat4>>) {
    let layout = shadowgen_core::engine::CircuitLayout::new(n).unwrap();
    let mut kinds = Vec::new();
    let mut mats = Vec::new();
    for t in 0..depth {
        let mut row_k = Vec::new();
        let mut row_m = Vec::new();
        for _ in 0..layout.gates_in_layer(t) {
            let (kind, u) = match rng.random_range(0..5) {
                0 => (GateKind::I, linalg::identity4()),
                1 => (GateKind::Swap, linalg::swap()),
                2 => (GateKind::ISwap, linalg::iswap()),
                3 => (GateKind::Cz, linalg::cz()),
                _ => {
                    let u = random_unitary_4(rng);
                    let t = shadowgen_core::engine::transfer_matrix_from_unitary(&u).unwrap();
                    (GateKind::Custom(Some(t)), u)
                }
            };
            row_k.push(kind);
            row_m.push(u);
        }
        kinds.push(row_k);
        mats.push(row_m);
    }
    (Circuit::new(n, kinds).unwrap(), mats)
}

pub fn random_support(n: usize, rng: &mut ChaCha8Rng) -> SupportConfig {
    loop {
        let bits = rng.random_range(1..(1u32 << n));
        if let Ok(q) = SupportConfig::new(bits, n) {
            return q;
        }
    }
}

/// Choi state of `u` as a dense 16-vector: `(I_AB ⊗ U_CD)` applied to two
/// Bell pairs A–C and B–D. Amplitude index `8a + 4b + 2c + d`.
pub fn oracle_choi(u: &Mat4) -> Array1<C64> {
    let mut bell = Array1::from_elem(16, c(0.0, 0.0));
    for a in 0..2 {
        for b in 0..2 {
            bell[8 * a + 4 * b + 2 * a + b] = c(0.5, 0.0);
        }
    }
    let id4 = Array2::from_shape_fn((4, 4), |(r, s)| if r == s { c(1.0, 0.0) } else { c(0.0, 0.0) });
    kron(&id4, &to_dense(u)).dot(&bell)
}

/// Purity of the two-qubit marginal on `keep` (positions among A, B, C, D),
/// by explicit partial trace of the 16×16 density matrix.
pub fn oracle_purity(psi: &Array1<C64>, keep: [usize; 2]) -> f64 {
    let bit = |idx: usize, pos: usize| idx >> (3 - pos) & 1;
    let mut rho = Array2::from_elem((4, 4), c(0.0, 0.0));
    for r in 0..16 {
        for s in 0..16 {
            let traced_equal = (0..4).filter(|p| !keep.contains(p)).all(|p| bit(r, p) == bit(s, p));
            if !traced_equal {
                continue;
            }
            let ri = 2 * bit(r, keep[0]) + bit(r, keep[1]);
            let si = 2 * bit(s, keep[0]) + bit(s, keep[1]);
            rho[[ri, si]] += psi[r] * psi[s].conj();
        }
    }
    trace(&rho.dot(&rho)).re
}

/// Central finite difference of `f` along every coordinate.
pub fn central_diff(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + h;
            let up = f(&xp);
            xp[i] = orig - h;
            let down = f(&xp);
            xp[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `max |a - b| / max(|b|, floor)` over entries.
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.abs().max(floor)).fold(0.0, f64::max)
}
