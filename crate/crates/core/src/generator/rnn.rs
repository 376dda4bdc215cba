//! Two-layer tanh recurrent network with per-slot softmax heads and
//! hand-written backpropagation through time.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;

use crate::engine::DICTIONARY;
use crate::error::{Error, Result};

pub const DICT_SIZE: usize = DICTIONARY.len();

/// All trainable parameters. Gradients use the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct RnnParams {
    pub n: usize,
    pub gates_per_layer: usize,
    pub hidden: usize,
    pub w_ih1: Array2<f64>,
    pub w_hh1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w_ih2: Array2<f64>,
    pub w_hh2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w_o: Array2<f64>,
    pub b_o: Array1<f64>,
}

/// Names and shapes in serialization order.
pub const TENSOR_NAMES: [&str; 8] = ["w_ih1", "w_hh1", "b1", "w_ih2", "w_hh2", "b2", "w_o", "b_o"];

impl RnnParams {
    pub fn input_dim(n: usize, gates_per_layer: usize) -> usize {
        n + DICT_SIZE * gates_per_layer
    }

    pub fn zeros(n: usize, gates_per_layer: usize, hidden: usize) -> Self {
        let din = Self::input_dim(n, gates_per_layer);
        let dout = DICT_SIZE * gates_per_layer;
        Self {
            n,
            gates_per_layer,
            hidden,
            w_ih1: Array2::zeros((hidden, din)),
            w_hh1: Array2::zeros((hidden, hidden)),
            b1: Array1::zeros(hidden),
            w_ih2: Array2::zeros((hidden, hidden)),
            w_hh2: Array2::zeros((hidden, hidden)),
            b2: Array1::zeros(hidden),
            w_o: Array2::zeros((dout, hidden)),
            b_o: Array1::zeros(dout),
        }
    }

    /// Uniform in `±1/sqrt(hidden)`.
    pub fn random<R: Rng>(n: usize, gates_per_layer: usize, hidden: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(n, gates_per_layer, hidden);
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut flat = p.to_flat();
        for x in flat.iter_mut() {
            *x = rng.random_range(-bound..bound);
        }
        p.set_flat(&flat).expect("same length");
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.n, self.gates_per_layer, self.hidden)
    }

    pub fn shapes(&self) -> [(usize, usize); 8] {
        let din = Self::input_dim(self.n, self.gates_per_layer);
        let dout = DICT_SIZE * self.gates_per_layer;
        let h = self.hidden;
        [(h, din), (h, h), (h, 1), (h, h), (h, h), (h, 1), (dout, h), (dout, 1)]
    }

    pub fn len(&self) -> usize {
        self.shapes().iter().map(|(r, c)| r * c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn slices(&self) -> [&[f64]; 8] {
        [
            self.w_ih1.as_slice().expect("standard layout"),
            self.w_hh1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w_ih2.as_slice().expect("standard layout"),
            self.w_hh2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
            self.w_o.as_slice().expect("standard layout"),
            self.b_o.as_slice().expect("standard layout"),
        ]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 8] {
        [
            self.w_ih1.as_slice_mut().expect("standard layout"),
            self.w_hh1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w_ih2.as_slice_mut().expect("standard layout"),
            self.w_hh2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
            self.w_o.as_slice_mut().expect("standard layout"),
            self.b_o.as_slice_mut().expect("standard layout"),
        ]
    }

    /// Row-major data of each tensor, in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> [&[f64]; 8] {
        self.slices()
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 8] {
        self.slices_mut()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::Shape(format!("expected {} parameters, got {}", self.len(), flat.len())));
        }
        let mut offset = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
        Ok(())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.slices().iter().flat_map(|s| s.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }
}

/// Hidden state of both layers.
#[derive(Clone, Debug, PartialEq)]
pub struct RnnState {
    pub h1: Array1<f64>,
    pub h2: Array1<f64>,
}

impl RnnState {
    pub fn zeros(hidden: usize) -> Self {
        Self { h1: Array1::zeros(hidden), h2: Array1::zeros(hidden) }
    }
}

/// `[q, w]` as one input vector.
pub fn input_vector(q: &[f64], w: &[f64]) -> Array1<f64> {
    q.iter().chain(w).copied().collect()
}

/// One recurrence step: returns the new state and the flat logits
/// (`gates_per_layer` blocks of [`DICT_SIZE`]).
pub fn rnn_step(params: &RnnParams, state: &RnnState, x: ArrayView1<f64>) -> Result<(RnnState, Array1<f64>)> {
    let din = RnnParams::input_dim(params.n, params.gates_per_layer);
    if x.len() != din || state.h1.len() != params.hidden || state.h2.len() != params.hidden {
        return Err(Error::Shape(format!(
            "input of length {} and state of size {} for a network with input {din} and hidden {}",
            x.len(),
            state.h1.len(),
            params.hidden
        )));
    }
    let h1 = (params.w_ih1.dot(&x) + params.w_hh1.dot(&state.h1) + &params.b1).mapv(f64::tanh);
    let h2 = (params.w_ih2.dot(&h1) + params.w_hh2.dot(&state.h2) + &params.b2).mapv(f64::tanh);
    let logits = params.w_o.dot(&h2) + &params.b_o;
    Ok((RnnState { h1, h2 }, logits))
}

/// Activations of a full unrolled pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct Unrolled {
    pub inputs: Vec<Array1<f64>>,
    /// `states[t]` is the state after step `t`; the initial state is zero.
    pub states: Vec<RnnState>,
    pub logits: Vec<Array1<f64>>,
}

impl Unrolled {
    pub fn new() -> Self {
        Self { inputs: Vec::new(), states: Vec::new(), logits: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

impl Default for Unrolled {
    fn default() -> Self {
        Self::new()
    }
}

/// Unroll over explicit inputs (teacher forcing).
pub fn unroll(params: &RnnParams, inputs: &[Array1<f64>]) -> Result<Unrolled> {
    let mut out = Unrolled::new();
    let mut state = RnnState::zeros(params.hidden);
    for x in inputs {
        let (next, logits) = rnn_step(params, &state, x.view())?;
        out.inputs.push(x.clone());
        out.states.push(next.clone());
        out.logits.push(logits);
        state = next;
    }
    Ok(out)
}

fn add_outer(acc: &mut Array2<f64>, left: &Array1<f64>, right: ArrayView1<f64>) {
    for (mut row, &l) in acc.axis_iter_mut(Axis(0)).zip(left.iter()) {
        if l != 0.0 {
            row.scaled_add(l, &right);
        }
    }
}

/// Backpropagate `d loss / d logits[t]` through the unrolled pass, adding the
/// parameter gradient into `grad`.
pub fn backward(params: &RnnParams, unrolled: &Unrolled, dlogits: &[Array1<f64>], grad: &mut RnnParams) {
    let h = params.hidden;
    let zero = Array1::<f64>::zeros(h);
    let mut dh1_next = Array1::<f64>::zeros(h);
    let mut dh2_next = Array1::<f64>::zeros(h);
    for t in (0..unrolled.len()).rev() {
        let st = &unrolled.states[t];
        let (prev_h1, prev_h2) = if t == 0 {
            (&zero, &zero)
        } else {
            (&unrolled.states[t - 1].h1, &unrolled.states[t - 1].h2)
        };
        let dl = &dlogits[t];
        add_outer(&mut grad.w_o, dl, st.h2.view());
        grad.b_o += dl;
        let dh2 = params.w_o.t().dot(dl) + &dh2_next;
        let dz2 = &dh2 * &st.h2.mapv(|v| 1.0 - v * v);
        add_outer(&mut grad.w_ih2, &dz2, st.h1.view());
        add_outer(&mut grad.w_hh2, &dz2, prev_h2.view());
        grad.b2 += &dz2;
        dh2_next = params.w_hh2.t().dot(&dz2);
        let dh1 = params.w_ih2.t().dot(&dz2) + &dh1_next;
        let dz1 = &dh1 * &st.h1.mapv(|v| 1.0 - v * v);
        add_outer(&mut grad.w_ih1, &dz1, unrolled.inputs[t].view());
        add_outer(&mut grad.w_hh1, &dz1, prev_h1.view());
        grad.b1 += &dz1;
        dh1_next = params.w_hh1.t().dot(&dz1);
    }
}

/// Numerically stable softmax of one logit block.
pub fn softmax(block: &[f64]) -> [f64; DICT_SIZE] {
    let max = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; DICT_SIZE];
    let mut z = 0.0;
    for (pi, &l) in p.iter_mut().zip(block) {
        *pi = (l - max).exp();
        z += *pi;
    }
    p.iter_mut().for_each(|pi| *pi /= z);
    p
}

pub fn log_softmax(block: &[f64]) -> [f64; DICT_SIZE] {
    let max = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + block.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    let mut out = [0.0; DICT_SIZE];
    for (o, &l) in out.iter_mut().zip(block) {
        *o = l - lse;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_give_zero_logits() {
        let p = RnnParams::zeros(3, 1, 4);
        let x = Array1::from(vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let (_, logits) = rnn_step(&p, &RnnState::zeros(4), x.view()).unwrap();
        assert!(logits.iter().all(|&l| l == 0.0));
        let probs = softmax(logits.as_slice().unwrap());
        assert!(probs.iter().all(|&q| (q - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn no_recurrence_means_no_memory() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = RnnParams::random(3, 1, 4, &mut rng);
        p.w_hh1.fill(0.0);
        p.w_hh2.fill(0.0);
        let x = Array1::from(vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let s = RnnState { h1: Array1::from(vec![0.3; 4]), h2: Array1::from(vec![-0.7; 4]) };
        let (_, a) = rnn_step(&p, &RnnState::zeros(4), x.view()).unwrap();
        let (_, b) = rnn_step(&p, &s, x.view()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shape_mismatch() {
        let p = RnnParams::zeros(3, 1, 4);
        let x = Array1::from(vec![1.0; 5]);
        assert!(matches!(rnn_step(&p, &RnnState::zeros(4), x.view()), Err(Error::Shape(_))));
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = RnnParams::random(5, 2, 6, &mut rng);
        let mut q = p.zeros_like();
        q.set_flat(&p.to_flat()).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.len(), p.to_flat().len());
    }

    #[test]
    fn log_softmax_matches_softmax() {
        let b = [0.3, -2.0, 5.0];
        let p = softmax(&b);
        let lp = log_softmax(&b);
        for k in 0..3 {
            assert!((p[k].ln() - lp[k]).abs() < 1e-14);
        }
    }
}
