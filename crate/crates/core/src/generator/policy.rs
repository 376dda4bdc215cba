//! Sampling circuits from the recurrent policy, the reward, and the two
//! update rules (policy gradient and replay imitation).

use ndarray::Array1;
use rand::Rng;
use rayon::prelude::*;

use super::replay::{Actions, ReplayBuffer};
use super::rnn::{backward, input_vector, log_softmax, rnn_step, softmax, unroll, RnnParams, RnnState, Unrolled, DICT_SIZE};
use crate::engine::{variance_of, Circuit, CircuitLayout, GateKind, SupportConfig, WeightMetrics, DICTIONARY};
use crate::error::{Error, Result};
use crate::optim::Adam;

pub const GRAD_CLIP: f64 = 5.0;
pub const SUPERVISED_BATCH: usize = 64;

/// Conditioning input: 1.0 on each qubit of the support.
pub fn encode_support(q: SupportConfig) -> Vec<f64> {
    (1..=q.n()).map(|i| if q.contains(i) { 1.0 } else { 0.0 }).collect()
}

/// One-hot blocks for a layer; slots beyond the layer's width read as `I`.
pub fn encode_layer(actions: &[usize], gates_per_layer: usize) -> Vec<f64> {
    let mut w = vec![0.0; DICT_SIZE * gates_per_layer];
    for b in 0..gates_per_layer {
        let a = actions.get(b).copied().unwrap_or(0);
        w[DICT_SIZE * b + a] = 1.0;
    }
    w
}

pub fn start_token(gates_per_layer: usize) -> Vec<f64> {
    encode_layer(&[], gates_per_layer)
}

pub fn actions_to_circuit(n: usize, actions: &Actions) -> Result<Circuit> {
    let layers = actions
        .iter()
        .map(|row| row.iter().map(|&a| DICTIONARY[a]).collect())
        .collect();
    Circuit::new(n, layers)
}

pub fn circuit_to_actions(circuit: &Circuit) -> Result<Actions> {
    circuit
        .layers()
        .iter()
        .map(|row| {
            row.iter()
                .map(|g| {
                    g.dictionary_index()
                        .ok_or_else(|| Error::InvalidGate(format!("{} is not in the dictionary", g.token())))
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct PolicySample {
    pub support: SupportConfig,
    pub actions: Actions,
    pub circuit: Circuit,
    pub layer_log_probs: Vec<f64>,
    pub log_prob: f64,
    /// Summed per-block entropy along the trajectory.
    pub entropy: f64,
    pub reward: f64,
    pub metrics: WeightMetrics,
    pub swap_count: usize,
    pub(crate) unrolled: Unrolled,
}

enum Decode<'a, R: Rng> {
    Sample(&'a mut R),
    Greedy,
}

fn check_params(params: &RnnParams, q: SupportConfig) -> Result<CircuitLayout> {
    let layout = CircuitLayout::new(params.n)?;
    if q.n() != params.n {
        return Err(Error::Config(format!(
            "support has {} qubits but the model was built for {}",
            q.n(),
            params.n
        )));
    }
    if layout.max_gates() != params.gates_per_layer {
        return Err(Error::Shape("gates per layer disagrees with the register width".into()));
    }
    Ok(layout)
}

fn decode<R: Rng>(params: &RnnParams, q: SupportConfig, layers: usize, swap_penalty: f64, mut mode: Decode<'_, R>) -> Result<PolicySample> {
    let layout = check_params(params, q)?;
    let ng = params.gates_per_layer;
    let qv = encode_support(q);
    let mut w = start_token(ng);
    let mut state = RnnState::zeros(params.hidden);
    let mut unrolled = Unrolled::new();
    let mut actions = Vec::with_capacity(layers);
    let mut layer_log_probs = Vec::with_capacity(layers);
    let mut entropy = 0.0;
    for t in 0..layers {
        let x = input_vector(&qv, &w);
        let (next, logits) = rnn_step(params, &state, x.view())?;
        let logits_s = logits.as_slice().expect("contiguous");
        let mut row = Vec::with_capacity(ng);
        let mut lp = 0.0;
        for b in 0..layout.gates_in_layer(t) {
            let block = &logits_s[DICT_SIZE * b..DICT_SIZE * (b + 1)];
            let probs = softmax(block);
            let logp = log_softmax(block);
            let a = match &mut mode {
                Decode::Sample(rng) => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = DICT_SIZE - 1;
                    for (k, &p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = k;
                            break;
                        }
                    }
                    pick
                }
                Decode::Greedy => argmax(&probs),
            };
            lp += logp[a];
            entropy -= probs.iter().zip(&logp).map(|(p, l)| if *p > 0.0 { p * l } else { 0.0 }).sum::<f64>();
            row.push(a);
        }
        unrolled.inputs.push(x);
        unrolled.states.push(next.clone());
        unrolled.logits.push(logits);
        w = encode_layer(&row, ng);
        actions.push(row);
        layer_log_probs.push(lp);
        state = next;
    }
    let circuit = actions_to_circuit(params.n, &actions)?;
    let (r, metrics) = reward_with_metrics(q, &circuit, swap_penalty)?;
    Ok(PolicySample {
        support: q,
        log_prob: layer_log_probs.iter().sum(),
        swap_count: circuit.count(GateKind::Swap),
        actions,
        circuit,
        layer_log_probs,
        entropy,
        reward: r,
        metrics,
        unrolled,
    })
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..p.len() {
        if p[k] > p[best] {
            best = k;
        }
    }
    best
}

/// Draw one circuit, feeding each sampled layer back as the next input.
pub fn sample_circuit<R: Rng>(params: &RnnParams, q: SupportConfig, layers: usize, swap_penalty: f64, rng: &mut R) -> Result<PolicySample> {
    decode(params, q, layers, swap_penalty, Decode::Sample(rng))
}

/// Argmax decoding.
pub fn greedy_circuit(params: &RnnParams, q: SupportConfig, layers: usize, swap_penalty: f64) -> Result<PolicySample> {
    decode::<rand_chacha::ChaCha8Rng>(params, q, layers, swap_penalty, Decode::Greedy)
}

/// Per-layer log-probabilities of a given circuit under the policy.
pub fn layer_log_probs(params: &RnnParams, q: SupportConfig, actions: &Actions) -> Result<Vec<f64>> {
    let (unrolled, layout) = teacher_forced(params, q, actions)?;
    Ok(unrolled
        .logits
        .iter()
        .enumerate()
        .map(|(t, logits)| {
            let s = logits.as_slice().expect("contiguous");
            (0..layout.gates_in_layer(t))
                .map(|b| log_softmax(&s[DICT_SIZE * b..DICT_SIZE * (b + 1)])[actions[t][b]])
                .sum()
        })
        .collect())
}

fn teacher_forced(params: &RnnParams, q: SupportConfig, actions: &Actions) -> Result<(Unrolled, CircuitLayout)> {
    let layout = check_params(params, q)?;
    let ng = params.gates_per_layer;
    let qv = encode_support(q);
    let mut inputs = Vec::with_capacity(actions.len());
    let mut w = start_token(ng);
    for (t, row) in actions.iter().enumerate() {
        if row.len() != layout.gates_in_layer(t) || row.iter().any(|&a| a >= DICT_SIZE) {
            return Err(Error::Shape(format!("layer {} does not fit the layout", t + 1)));
        }
        inputs.push(input_vector(&qv, &w));
        w = encode_layer(row, ng);
    }
    Ok((unroll(params, &inputs)?, layout))
}

/// `-α - λ · (number of SWAP gates)`.
pub fn reward(q: SupportConfig, circuit: &Circuit, swap_penalty: f64) -> Result<f64> {
    Ok(reward_with_metrics(q, circuit, swap_penalty)?.0)
}

fn reward_with_metrics(q: SupportConfig, circuit: &Circuit, swap_penalty: f64) -> Result<(f64, WeightMetrics)> {
    let metrics = variance_of(circuit, q)?;
    let r = -metrics.alpha - swap_penalty * circuit.count(GateKind::Swap) as f64;
    Ok((r, metrics))
}

/// d(objective)/d(logits) contributions: `coef · ∇ log p + ent_coef · ∇ H`
/// along a sampled trajectory, negated for descent.
fn trajectory_dlogits(unrolled: &Unrolled, actions: &Actions, n: usize, logp_coef: f64, ent_coef: f64) -> Vec<Array1<f64>> {
    let layout = CircuitLayout::new(n).expect("validated width");
    unrolled
        .logits
        .iter()
        .enumerate()
        .map(|(t, logits)| {
            let s = logits.as_slice().expect("contiguous");
            let mut d = Array1::<f64>::zeros(s.len());
            for b in 0..layout.gates_in_layer(t) {
                let block = &s[DICT_SIZE * b..DICT_SIZE * (b + 1)];
                let p = softmax(block);
                let lp = log_softmax(block);
                let h: f64 = -p.iter().zip(&lp).map(|(a, l)| a * l).sum::<f64>();
                for j in 0..DICT_SIZE {
                    let onehot = if actions[t][b] == j { 1.0 } else { 0.0 };
                    let dlogp = onehot - p[j];
                    let dent = -p[j] * (lp[j] + h);
                    d[DICT_SIZE * b + j] = -(logp_coef * dlogp + ent_coef * dent);
                }
            }
            d
        })
        .collect()
}

/// Gradient of the REINFORCE surrogate
/// `-(1/G) Σ_g (1/n_g) Σ_a [(r_a - b_g) log p_a + β H_a]`, with `b_g` the mean
/// reward of group `g`.
pub fn policy_gradient(params: &RnnParams, groups: &[Vec<PolicySample>], entropy_bonus: f64) -> RnnParams {
    let g = groups.iter().filter(|grp| !grp.is_empty()).count().max(1) as f64;
    let partials: Vec<RnnParams> = groups
        .par_iter()
        .map(|grp| {
            let mut grad = params.zeros_like();
            if grp.is_empty() {
                return grad;
            }
            let na = grp.len() as f64;
            let baseline = grp.iter().map(|s| s.reward).sum::<f64>() / na;
            for s in grp {
                let coef = (s.reward - baseline) / (g * na);
                let ent = entropy_bonus / (g * na);
                if coef == 0.0 && ent == 0.0 {
                    continue;
                }
                let d = trajectory_dlogits(&s.unrolled, &s.actions, params.n, coef, ent);
                backward(params, &s.unrolled, &d, &mut grad);
            }
            grad
        })
        .collect();
    let mut total = params.zeros_like();
    for p in &partials {
        total.add_scaled(p, 1.0);
    }
    total
}

/// The surrogate objective itself, for finite-difference checks. Sampled
/// actions are held fixed.
pub fn surrogate_loss(params: &RnnParams, groups: &[Vec<PolicySample>], entropy_bonus: f64) -> Result<f64> {
    let g = groups.iter().filter(|grp| !grp.is_empty()).count().max(1) as f64;
    let mut loss = 0.0;
    for grp in groups.iter().filter(|grp| !grp.is_empty()) {
        let na = grp.len() as f64;
        let baseline = grp.iter().map(|s| s.reward).sum::<f64>() / na;
        for s in grp {
            let (unrolled, layout) = teacher_forced(params, s.support, &s.actions)?;
            let mut logp = 0.0;
            let mut ent = 0.0;
            for (t, logits) in unrolled.logits.iter().enumerate() {
                let sl = logits.as_slice().expect("contiguous");
                for b in 0..layout.gates_in_layer(t) {
                    let block = &sl[DICT_SIZE * b..DICT_SIZE * (b + 1)];
                    let lp = log_softmax(block);
                    let p = softmax(block);
                    logp += lp[s.actions[t][b]];
                    ent -= p.iter().zip(&lp).map(|(a, l)| a * l).sum::<f64>();
                }
            }
            loss -= ((s.reward - baseline) * logp + entropy_bonus * ent) / (g * na);
        }
    }
    Ok(loss)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UpdateOutcome {
    Applied { grad_norm: f64 },
    Skipped { reason: &'static str },
}

/// Clip to [`GRAD_CLIP`] and take one Adam step; non-finite gradients skip.
pub fn apply_gradient(params: &mut RnnParams, grad: &RnnParams, adam: &mut Adam) -> UpdateOutcome {
    if !grad.is_finite() {
        return UpdateOutcome::Skipped { reason: "non-finite gradient" };
    }
    let norm = grad.norm();
    let mut flat_grad = grad.to_flat();
    if norm > GRAD_CLIP {
        let scale = GRAD_CLIP / norm;
        flat_grad.iter_mut().for_each(|g| *g *= scale);
    }
    let mut flat = params.to_flat();
    adam.step(&mut flat, &flat_grad);
    params.set_flat(&flat).expect("same shape");
    UpdateOutcome::Applied { grad_norm: norm }
}

pub fn policy_gradient_update(
    params: &mut RnnParams,
    groups: &[Vec<PolicySample>],
    entropy_bonus: f64,
    adam: &mut Adam,
) -> UpdateOutcome {
    let grad = policy_gradient(params, groups, entropy_bonus);
    apply_gradient(params, &grad, adam)
}

/// Mean negative log-likelihood of the buffered circuits.
pub fn replay_nll(params: &RnnParams, buffer: &ReplayBuffer) -> Result<f64> {
    if buffer.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (q, e) in buffer.iter() {
        total -= layer_log_probs(params, *q, &e.actions)?.iter().sum::<f64>();
    }
    Ok(total / buffer.len() as f64)
}

/// Fit the policy to the buffer by maximum likelihood, `epochs` passes in
/// minibatches of [`SUPERVISED_BATCH`]. Returns the buffer NLL after each
/// epoch.
pub fn supervised_update(params: &mut RnnParams, buffer: &ReplayBuffer, epochs: usize, adam: &mut Adam) -> Result<Vec<f64>> {
    if buffer.is_empty() {
        return Ok(Vec::new());
    }
    let items: Vec<(SupportConfig, &Actions)> = buffer.iter().map(|(q, e)| (*q, &e.actions)).collect();
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        for chunk in items.chunks(SUPERVISED_BATCH) {
            let m = chunk.len() as f64;
            let partials: Vec<Result<RnnParams>> = chunk
                .par_iter()
                .map(|(q, actions)| {
                    let (unrolled, _) = teacher_forced(params, *q, actions)?;
                    let d = trajectory_dlogits(&unrolled, actions, params.n, 1.0 / m, 0.0);
                    let mut grad = params.zeros_like();
                    backward(params, &unrolled, &d, &mut grad);
                    Ok(grad)
                })
                .collect();
            let mut grad = params.zeros_like();
            for p in partials {
                grad.add_scaled(&p?, 1.0);
            }
            apply_gradient(params, &grad, adam);
        }
        history.push(replay_nll(params, buffer)?);
    }
    Ok(history)
}
