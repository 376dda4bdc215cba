//! Joint Adam optimization of every gate's Cartan coordinates to minimize the
//! scaling parameter of a contiguous Pauli operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::FRAC_PI_4;

use super::cartan::{cartan_unitary, CartanCoordinates};
use super::choi::{choi_unchecked, purities, EntropyPair};
use crate::engine::{
    apply_in_place, pauli_weight, size_distribution, CircuitLayout, SupportConfig,
    SupportDistribution, WeightTransferMatrix,
};
use crate::engine::MAX_QUBITS;
use crate::error::{Error, Result};
use crate::optim::Adam;

/// Widest register used when the light cone would need more qubits.
pub const MAX_SUCCESSIVE_WIDTH: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub steps: usize,
    pub fd_step: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self { lr: 0.02, beta1: 0.9, beta2: 0.999, eps: 1e-8, steps: 2000, fd_step: 1e-5 }
    }
}

/// Where a gate sits relative to the forward light cone of the operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateRole {
    /// Both qubits may carry the operator.
    Bulk,
    /// Only one qubit may carry the operator.
    Boundary,
    /// Outside the light cone; the gate cannot affect the result.
    Inactive,
}

impl GateRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            GateRole::Bulk => "bulk",
            GateRole::Boundary => "boundary",
            GateRole::Inactive => "inactive",
        }
    }
}

/// Default register width for a size-`k` operator under `layers` layers.
pub fn successive_width(k: usize, layers: usize) -> usize {
    (k + 2 * layers).clamp(2.max(k), MAX_SUCCESSIVE_WIDTH.max(k))
}

/// Contiguous block of `k` qubits near the middle of the register, shifted
/// left by one if needed so that it starts on an odd qubit (aligned with the
/// first layer's pairs).
pub fn successive_support(k: usize, n: usize) -> Result<SupportConfig> {
    if k == 0 || k > n {
        return Err(Error::Config(format!("operator size {k} must lie in 1..={n}")));
    }
    let mut start = (n - k) / 2 + 1;
    if start.is_multiple_of(2) {
        start -= 1;
    }
    let qubits: Vec<usize> = (start..start + k).collect();
    SupportConfig::from_qubits(&qubits, n)
}

/// The fixed problem: which operator, which brick-wall shape.
#[derive(Clone, Debug)]
pub struct SuccessiveProblem {
    layout: CircuitLayout,
    support: SupportConfig,
    layers: usize,
    roles: Vec<Vec<GateRole>>,
}

impl SuccessiveProblem {
    pub fn new(k: usize, layers: usize, n: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::Config(format!("width {n} exceeds {MAX_QUBITS}")));
        }
        let layout = CircuitLayout::new(n)?;
        let support = successive_support(k, n)?;
        let mut cone = support.bits();
        let mut roles = Vec::with_capacity(layers);
        for t in 0..layers {
            let mut row = Vec::new();
            let mut next = cone;
            for (i, j) in layout.pairs(t) {
                let (a, b) = (cone >> (i - 1) & 1, cone >> (j - 1) & 1);
                row.push(match a + b {
                    2 => GateRole::Bulk,
                    1 => GateRole::Boundary,
                    _ => GateRole::Inactive,
                });
                if a + b > 0 {
                    next |= (1 << (i - 1)) | (1 << (j - 1));
                }
            }
            cone = next;
            roles.push(row);
        }
        Ok(Self { layout, support, layers, roles })
    }

    pub fn k(&self) -> usize {
        self.support.size()
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn support(&self) -> SupportConfig {
        self.support
    }

    pub fn roles(&self) -> &[Vec<GateRole>] {
        &self.roles
    }

    /// Number of gates, i.e. parameters / 3.
    pub fn gate_count(&self) -> usize {
        self.roles.iter().map(Vec::len).sum()
    }

    pub fn param_count(&self) -> usize {
        3 * self.gate_count()
    }

    /// Split a flat parameter vector into per-layer coordinates.
    pub fn unflatten(&self, params: &[f64]) -> Vec<Vec<CartanCoordinates>> {
        let mut it = params.chunks_exact(3).map(CartanCoordinates::from_slice);
        self.roles
            .iter()
            .map(|row| row.iter().map(|_| it.next().expect("parameter count")).collect())
            .collect()
    }

    pub fn flatten(coords: &[Vec<CartanCoordinates>]) -> Vec<f64> {
        coords.iter().flatten().flat_map(|c| c.as_array()).collect()
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} coordinates, got {}",
                self.param_count(),
                params.len()
            )));
        }
        Ok(())
    }

    fn matrices(&self, params: &[f64]) -> Vec<Vec<WeightTransferMatrix>> {
        self.unflatten(params)
            .iter()
            .map(|row| row.iter().map(gate_matrix).collect())
            .collect()
    }

    fn apply_layer(&self, dist: &mut SupportDistribution, t: usize, mats: &[WeightTransferMatrix]) {
        for ((m, pair), role) in mats.iter().zip(self.layout.pairs(t)).zip(&self.roles[t]) {
            if *role != GateRole::Inactive {
                apply_in_place(dist, m, pair).expect("layout pairs are in range");
            }
        }
    }

    fn alpha_of(&self, dist: &SupportDistribution) -> Result<f64> {
        Ok(pauli_weight(&size_distribution(dist), self.k())?.alpha)
    }

    pub fn alpha(&self, params: &[f64]) -> Result<f64> {
        self.check_params(params)?;
        let mats = self.matrices(params);
        let mut dist = SupportDistribution::point(self.support);
        for (t, row) in mats.iter().enumerate() {
            self.apply_layer(&mut dist, t, row);
        }
        self.alpha_of(&dist)
    }

    /// Loss and central finite-difference gradient with spacing `h`.
    pub fn gradient(&self, params: &[f64], h: f64) -> Result<(f64, Vec<f64>)> {
        self.check_params(params)?;
        let mats = self.matrices(params);
        let mut prefix = Vec::with_capacity(self.layers + 1);
        let mut dist = SupportDistribution::point(self.support);
        prefix.push(dist.clone());
        for (t, row) in mats.iter().enumerate() {
            self.apply_layer(&mut dist, t, row);
            prefix.push(dist.clone());
        }
        let loss = self.alpha_of(&dist)?;

        let mut grad = vec![0.0; params.len()];
        let mut offset = 0;
        for t in 0..self.layers {
            for (slot, role) in self.roles[t].iter().enumerate() {
                if *role != GateRole::Inactive {
                    for axis in 0..3 {
                        let eval = |delta: f64| -> Result<f64> {
                            let mut c = params[offset..offset + 3].to_vec();
                            c[axis] += delta;
                            let mut row = mats[t].clone();
                            row[slot] = gate_matrix(&CartanCoordinates::from_slice(&c));
                            let mut d = prefix[t].clone();
                            self.apply_layer(&mut d, t, &row);
                            for (u, later) in mats.iter().enumerate().skip(t + 1) {
                                self.apply_layer(&mut d, u, later);
                            }
                            self.alpha_of(&d)
                        };
                        grad[offset + axis] = (eval(h)? - eval(-h)?) / (2.0 * h);
                    }
                }
                offset += 3;
            }
        }
        Ok((loss, grad))
    }

    /// Whether α responds to each gate. A gate is free when swapping it for
    /// any of the probe gates leaves α unchanged (relative 1e-9); upstream
    /// gates then keep the operator off its qubits.
    pub fn pinned_gates(&self, params: &[f64]) -> Result<Vec<Vec<bool>>> {
        self.check_params(params)?;
        let base = self.alpha(params)?;
        let probes = [
            CartanCoordinates::IDENTITY,
            CartanCoordinates::SWAP,
            CartanCoordinates::ISWAP,
            CartanCoordinates::CZ,
            CartanCoordinates::new(0.61, 0.37, 0.13),
        ];
        let mut out = Vec::with_capacity(self.layers);
        let mut offset = 0;
        for row in &self.roles {
            let mut flags = Vec::with_capacity(row.len());
            for role in row {
                let mut pinned = false;
                if *role != GateRole::Inactive {
                    let mut trial = params.to_vec();
                    for c in &probes {
                        trial[offset..offset + 3].copy_from_slice(&c.as_array());
                        if (self.alpha(&trial)? - base).abs() > 1e-9 * base {
                            pinned = true;
                            break;
                        }
                    }
                }
                flags.push(pinned);
                offset += 3;
            }
            out.push(flags);
        }
        Ok(out)
    }
}

pub(crate) fn gate_matrix(c: &CartanCoordinates) -> WeightTransferMatrix {
    crate::engine::transfer_matrix_unchecked(&cartan_unitary(c))
}

/// Scaling parameter of the centered size-`k` operator under the given gates.
pub fn successive_alpha(coords: &[Vec<CartanCoordinates>], k: usize, layers: usize, n: usize) -> Result<f64> {
    let problem = SuccessiveProblem::new(k, layers, n)?;
    if coords.len() != layers
        || coords.iter().zip(problem.roles()).any(|(c, r)| c.len() != r.len())
    {
        return Err(Error::Shape("coordinates do not match the brick-wall layout".into()));
    }
    problem.alpha(&SuccessiveProblem::flatten(coords))
}

#[derive(Clone, Debug)]
pub struct DictOptimRun {
    pub k: usize,
    pub layers: usize,
    pub n: usize,
    pub seed: u64,
    pub init: usize,
    pub coords: Vec<Vec<CartanCoordinates>>,
    pub roles: Vec<Vec<GateRole>>,
    /// α at the start of each step.
    pub trajectory: Vec<f64>,
    pub final_alpha: f64,
    pub entropies: Vec<Vec<EntropyPair>>,
    /// Gates α still depends on at the final point (see `pinned_gates`).
    pub pinned: Vec<Vec<bool>>,
    pub failure: Option<String>,
}

impl DictOptimRun {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// Run `inits` independent optimizations in parallel. Each init draws its
/// starting point from its own stream, so results do not depend on the
/// number of worker threads.
pub fn optimize_gates(
    k: usize,
    layers: usize,
    n: usize,
    inits: usize,
    cfg: &OptimConfig,
    seed: u64,
) -> Result<Vec<DictOptimRun>> {
    if inits == 0 {
        return Err(Error::Config("at least one initialization is required".into()));
    }
    let problem = SuccessiveProblem::new(k, layers, n)?;
    Ok((0..inits)
        .into_par_iter()
        .map(|init| run_single(&problem, cfg, seed, init))
        .collect())
}

fn run_single(problem: &SuccessiveProblem, cfg: &OptimConfig, seed: u64, init: usize) -> DictOptimRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(init as u64);
    let mut params: Vec<f64> =
        (0..problem.param_count()).map(|_| rng.random_range(0.0..=FRAC_PI_4)).collect();
    let mut adam = Adam::with_betas(params.len(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    let mut trajectory = Vec::new();
    let mut failure = None;

    let steps = if problem.gate_count() == 0 { 0 } else { cfg.steps };
    for step in 0..steps {
        match problem.gradient(&params, cfg.fd_step) {
            Ok((loss, grad)) if loss.is_finite() && grad.iter().all(|g| g.is_finite()) => {
                trajectory.push(loss);
                adam.step(&mut params, &grad);
            }
            Ok((loss, _)) => {
                failure = Some(format!("non-finite loss or gradient at step {step} (loss {loss})"));
                break;
            }
            Err(e) => {
                failure = Some(format!("step {step}: {e}"));
                break;
            }
        }
    }
    let final_alpha = match problem.alpha(&params) {
        Ok(a) if a.is_finite() => a,
        Ok(a) => {
            failure.get_or_insert_with(|| format!("non-finite final loss {a}"));
            f64::NAN
        }
        Err(e) => {
            failure.get_or_insert_with(|| e.to_string());
            f64::NAN
        }
    };
    let coords = problem.unflatten(&params);
    let entropies = coords
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| purities(&choi_unchecked(&cartan_unitary(c))).entropies())
                .collect()
        })
        .collect();
    let pinned = problem
        .pinned_gates(&params)
        .unwrap_or_else(|_| problem.roles().iter().map(|r| vec![false; r.len()]).collect());
    DictOptimRun {
        k: problem.k(),
        layers: problem.layers(),
        n: problem.n(),
        seed,
        init,
        coords,
        roles: problem.roles().to_vec(),
        trajectory,
        final_alpha,
        entropies,
        pinned,
        failure,
    }
}
