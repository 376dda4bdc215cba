//! Monte-Carlo simulation of the shadow pipeline on explicit statevectors:
//! dress every gate with Haar single-qubit unitaries, measure in the
//! computational basis, and estimate Pauli weights and expectations.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::engine::{variance_of, Circuit, SupportConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Mat4};

pub const MC_MAX_QUBITS: usize = 6;
const SHOTS_PER_STREAM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub shots: usize,
    pub seed: u64,
}

/// Haar-random 2×2 unitary: Gram–Schmidt on a complex Ginibre matrix, which
/// leaves a positive diagonal in R and hence the Haar measure on Q.
pub fn haar_2x2<R: Rng>(rng: &mut R) -> Mat2 {
    let mut g = || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    };
    let a = [g(), g()];
    let b = [g(), g()];
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let q0 = [a[0] / na, a[1] / na];
    let proj = q0[0].conj() * b[0] + q0[1].conj() * b[1];
    let r = [b[0] - proj * q0[0], b[1] - proj * q0[1]];
    let nr = (r[0].norm_sqr() + r[1].norm_sqr()).sqrt();
    let q1 = [r[0] / nr, r[1] / nr];
    [[q0[0], q1[0]], [q0[1], q1[1]]]
}

/// Pauli string, one factor per qubit (0 = I, 1 = X, 2 = Y, 3 = Z).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliString {
    pub factors: Vec<usize>,
}

impl PauliString {
    /// `Z` on every qubit of the support.
    pub fn z_on(q: SupportConfig) -> Self {
        Self { factors: (1..=q.n()).map(|i| if q.contains(i) { 3 } else { 0 }).collect() }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let factors = s
            .chars()
            .map(|c| match c {
                'I' => Ok(0),
                'X' => Ok(1),
                'Y' => Ok(2),
                'Z' => Ok(3),
                other => Err(Error::InvalidSupport(format!("unknown Pauli {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { factors })
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn support(&self) -> Result<SupportConfig> {
        let qubits: Vec<usize> = (1..=self.n()).filter(|&i| self.factors[i - 1] != 0).collect();
        SupportConfig::from_qubits(&qubits, self.n())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![linalg::ZERO; 1 << n];
        amps[index] = linalg::ONE;
        Self { n, amps }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n || n == 0 {
            return Err(Error::Shape("statevector length must be a power of two".into()));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Shape(format!("statevector norm² is {norm}")));
        }
        Ok(Self { n, amps })
    }

    /// Product of single-qubit states `cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>`.
    pub fn product(bloch: &[(f64, f64)]) -> Self {
        let n = bloch.len();
        let mut amps = vec![linalg::ONE; 1 << n];
        for (idx, a) in amps.iter_mut().enumerate() {
            for (q, &(theta, phi)) in bloch.iter().enumerate() {
                *a *= if idx >> q & 1 == 0 {
                    C64::new((theta / 2.0).cos(), 0.0)
                } else {
                    C64::from_polar((theta / 2.0).sin(), phi)
                };
            }
        }
        Self { n, amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Apply `m` on qubit `q` (1-based).
    pub fn apply_1q(&mut self, q: usize, m: &Mat2) {
        let mask = 1 << (q - 1);
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            let (a0, a1) = (self.amps[base], self.amps[base | mask]);
            self.amps[base] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[base | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    /// Apply `m` on qubits `(i, j)`; `i` is the first tensor factor.
    pub fn apply_2q(&mut self, i: usize, j: usize, m: &Mat4) {
        let (mi, mj) = (1 << (i - 1), 1 << (j - 1));
        for base in 0..self.amps.len() {
            if base & (mi | mj) != 0 {
                continue;
            }
            let idx = [base, base | mj, base | mi, base | mi | mj];
            let v = idx.map(|k| self.amps[k]);
            for (r, &k) in idx.iter().enumerate() {
                self.amps[k] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
            }
        }
    }

    /// `<ψ|P|ψ>`.
    pub fn pauli_expectation(&self, p: &PauliString) -> f64 {
        let mut flip = 0usize;
        for (q, &f) in p.factors.iter().enumerate() {
            if f == 1 || f == 2 {
                flip |= 1 << q;
            }
        }
        let mut acc = linalg::ZERO;
        for (c, amp) in self.amps.iter().enumerate() {
            // P|c> = phase(c) |c ^ flip>
            let mut phase = linalg::ONE;
            for (q, &f) in p.factors.iter().enumerate() {
                let bit = c >> q & 1;
                phase *= match (f, bit) {
                    (2, 0) => linalg::I,
                    (2, 1) => -linalg::I,
                    (3, 1) => -linalg::ONE,
                    _ => linalg::ONE,
                };
            }
            acc += self.amps[c ^ flip].conj() * phase * amp;
        }
        acc.re
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

enum Op {
    One(usize, Mat2),
    Two(usize, usize, Mat4),
}

/// One draw from the locally-scrambled ensemble of `circuit`: a Haar layer,
/// then every gate dressed as `(u⊗u) Λ (v⊗v)`, then a final Haar layer.
fn sample_dressed(circuit: &Circuit, rng: &mut ChaCha8Rng) -> Result<Vec<Op>> {
    let n = circuit.n();
    let layout = circuit.layout();
    let mut ops = Vec::new();
    for q in 1..=n {
        ops.push(Op::One(q, haar_2x2(rng)));
    }
    for (t, layer) in circuit.layers().iter().enumerate() {
        for (gate, (i, j)) in layer.iter().zip(layout.pairs(t)) {
            let core = gate.canonical_unitary()?;
            let v = linalg::kron(&haar_2x2(rng), &haar_2x2(rng));
            let u = linalg::kron(&haar_2x2(rng), &haar_2x2(rng));
            ops.push(Op::Two(i, j, linalg::mul4(&u, &linalg::mul4(&core, &v))));
        }
    }
    for q in 1..=n {
        ops.push(Op::One(q, haar_2x2(rng)));
    }
    Ok(ops)
}

fn apply_forward(psi: &mut StateVector, ops: &[Op]) {
    for op in ops {
        match op {
            Op::One(q, m) => psi.apply_1q(*q, m),
            Op::Two(i, j, m) => psi.apply_2q(*i, *j, m),
        }
    }
}

fn apply_adjoint(psi: &mut StateVector, ops: &[Op]) {
    for op in ops.iter().rev() {
        match op {
            Op::One(q, m) => psi.apply_1q(*q, &linalg::dagger2(m)),
            Op::Two(i, j, m) => psi.apply_2q(*i, *j, &linalg::dagger4(m)),
        }
    }
}

fn check_width(n: usize) -> Result<()> {
    if n > MC_MAX_QUBITS {
        return Err(Error::TooManyQubits { n, max: MC_MAX_QUBITS });
    }
    Ok(())
}

/// `<b| U P U^† |b>` for one sampled `U` and outcome `b`.
fn snapshot(ops: &[Op], n: usize, b: usize, p: &PauliString) -> f64 {
    let mut psi = StateVector::basis(n, b);
    apply_adjoint(&mut psi, ops);
    psi.pauli_expectation(p)
}

/// Run `shots` independent draws in parallel; each block of shots uses its own
/// stream of `seed`.
fn run_shots<F>(shots: usize, seed: u64, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let blocks = shots.div_ceil(SHOTS_PER_STREAM);
    let parts: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(blk as u64);
            let count = SHOTS_PER_STREAM.min(shots - blk * SHOTS_PER_STREAM);
            (0..count).map(|_| f(&mut rng)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(parts.concat())
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    (mean, var, (var / m).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightEstimate {
    pub w_hat: f64,
    pub stderr: f64,
}

/// Estimate the Pauli weight as the mean of `<b|U P U^†|b>^2` over ensemble
/// draws and uniformly random `b` (maximally mixed input).
pub fn mc_estimate_weight(circuit: &Circuit, q: SupportConfig, mc: &McConfig) -> Result<WeightEstimate> {
    check_width(circuit.n())?;
    if q.size() == 0 {
        return Err(Error::DegenerateOperator);
    }
    if mc.shots == 0 {
        return Err(Error::Config("at least one shot is required".into()));
    }
    let n = circuit.n();
    let p = PauliString::z_on(q);
    let xs = run_shots(mc.shots, mc.seed, |rng| {
        let ops = sample_dressed(circuit, rng)?;
        let b = rng.random_range(0..1usize << n);
        Ok(snapshot(&ops, n, b, &p).powi(2))
    })?;
    let (w_hat, _, stderr) = mean_and_stderr(&xs);
    Ok(WeightEstimate { w_hat, stderr })
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    MaximallyMixed(usize),
    Pure(StateVector),
}

impl StateSpec {
    pub fn n(&self) -> usize {
        match self {
            StateSpec::MaximallyMixed(n) => *n,
            StateSpec::Pure(s) => s.n(),
        }
    }

    /// Exact `Tr(P ρ)`.
    pub fn expectation(&self, p: &PauliString) -> f64 {
        match self {
            StateSpec::MaximallyMixed(_) => {
                if p.factors.iter().all(|&f| f == 0) {
                    1.0
                } else {
                    0.0
                }
            }
            StateSpec::Pure(s) => s.pauli_expectation(p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliEstimate {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    /// Exact Pauli weight used to invert the measurement channel.
    pub weight: f64,
}

/// Classical-shadow estimate of `Tr(P ρ)`: each shot contributes
/// `<b|U P U^†|b> / w` with `b` drawn from the Born rule of `U ρ U^†`.
pub fn estimate_pauli_expectation(state: &StateSpec, circuit: &Circuit, p: &PauliString, mc: &McConfig) -> Result<PauliEstimate> {
    let n = circuit.n();
    check_width(n)?;
    if state.n() != n || p.n() != n {
        return Err(Error::Config("state, circuit and observable widths differ".into()));
    }
    if mc.shots == 0 {
        return Err(Error::Config("at least one shot is required".into()));
    }
    let weight = variance_of(circuit, p.support()?)?.pauli_weight;
    let xs = run_shots(mc.shots, mc.seed, |rng| {
        let ops = sample_dressed(circuit, rng)?;
        let b = match state {
            StateSpec::MaximallyMixed(_) => rng.random_range(0..1usize << n),
            StateSpec::Pure(psi) => {
                let mut phi = psi.clone();
                apply_forward(&mut phi, &ops);
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let probs = phi.probabilities();
                let mut pick = probs.len() - 1;
                for (k, pk) in probs.iter().enumerate() {
                    acc += pk;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                pick
            }
        };
        Ok(snapshot(&ops, n, b, p) / weight)
    })?;
    let (mean, variance, stderr) = mean_and_stderr(&xs);
    Ok(PauliEstimate { mean, variance, stderr, weight })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let u = haar_2x2(&mut rng);
            let p = linalg::mul2(&u, &linalg::dagger2(&u));
            assert!((p[0][0] - linalg::ONE).norm() < 1e-12);
            assert!(p[0][1].norm() < 1e-12);
        }
    }

    #[test]
    fn product_state_expectations() {
        let s = StateVector::product(&[(0.0, 0.0), (std::f64::consts::PI, 0.0)]);
        assert!((s.pauli_expectation(&PauliString::parse("ZI").unwrap()) - 1.0).abs() < 1e-12);
        assert!((s.pauli_expectation(&PauliString::parse("IZ").unwrap()) + 1.0).abs() < 1e-12);
        let plus = StateVector::product(&[(std::f64::consts::FRAC_PI_2, 0.0)]);
        assert!((plus.pauli_expectation(&PauliString::parse("X").unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_wide_registers() {
        let c = Circuit::identity(7, 1).unwrap();
        let q = SupportConfig::parse("1100000", 7).unwrap();
        let mc = McConfig { shots: 10, seed: 0 };
        assert!(matches!(mc_estimate_weight(&c, q, &mc), Err(Error::TooManyQubits { n: 7, max: 6 })));
    }

    #[test]
    fn apply_2q_matches_kron_order() {
        // CNOT-like permutation with qubit i as control (first factor).
        let mut m = [[linalg::ZERO; 4]; 4];
        m[0][0] = linalg::ONE;
        m[1][1] = linalg::ONE;
        m[2][3] = linalg::ONE;
        m[3][2] = linalg::ONE;
        // |q1=1, q2=0> is index 1 (qubit 1 is bit 0)
        let mut s = StateVector::basis(2, 0b01);
        s.apply_2q(1, 2, &m);
        assert_eq!(s.amplitudes()[0b11], linalg::ONE);
    }
}
