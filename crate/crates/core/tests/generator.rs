mod common;

use common::*;
use ndarray::Array1;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shadowgen_core::engine::{Circuit, CircuitLayout, GateKind, SupportConfig};
use shadowgen_core::generator::*;
use shadowgen_core::optim::Adam;

fn tiny_params(seed: u64) -> RnnParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = RnnParams::random(3, 1, 4, &mut rng);
    // larger weights than the default init so every tanh is exercised
    let flat: Vec<f64> = p.to_flat().iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    p.set_flat(&flat).unwrap();
    p
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

/// Loss `Σ_t c_t · logits_t` with fixed random `c_t`.
fn linear_readout_check(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = tiny_params(seed);
    let din = RnnParams::input_dim(params.n, params.gates_per_layer);
    let layers = 2;
    let inputs: Vec<Array1<f64>> =
        (0..layers).map(|_| (0..din).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let coefs: Vec<Array1<f64>> = (0..layers)
        .map(|_| (0..3 * params.gates_per_layer).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let loss = |p: &RnnParams| -> f64 {
        let u = unroll(p, &inputs).unwrap();
        u.logits.iter().zip(&coefs).map(|(l, c)| l.dot(c)).sum()
    };
    let u = unroll(&params, &inputs).unwrap();
    let mut grad = params.zeros_like();
    backward(&params, &u, &coefs, &mut grad);
    let mut probe = params.clone();
    let fd = central_diff(&params.to_flat(), 1e-5, |x| {
        probe.set_flat(x).unwrap();
        loss(&probe)
    });
    max_rel_err(&grad.to_flat(), &fd, 1e-3)
}

#[test]
fn bptt_matches_finite_differences() {
    for seed in 0..20 {
        let err = linear_readout_check(seed);
        assert!(err < 1e-5, "seed {seed}: relative error {err}");
    }
}

fn tiny_groups(params: &RnnParams, seed: u64, per_group: usize) -> Vec<Vec<PolicySample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ["110", "011", "111"]
        .iter()
        .map(|s| {
            let q = SupportConfig::parse(s, 3).unwrap();
            (0..per_group).map(|_| sample_circuit(params, q, 2, 0.005, &mut rng).unwrap()).collect()
        })
        .collect()
}

#[test]
fn policy_gradient_matches_surrogate_fd() {
    for seed in 0..5 {
        let params = tiny_params(100 + seed);
        let groups = tiny_groups(&params, seed, 6);
        for bonus in [0.0, 0.05] {
            let grad = policy_gradient(&params, &groups, bonus);
            let mut probe = params.clone();
            let fd = central_diff(&params.to_flat(), 1e-5, |x| {
                probe.set_flat(x).unwrap();
                surrogate_loss(&probe, &groups, bonus).unwrap()
            });
            let err = max_rel_err(&grad.to_flat(), &fd, 1e-3);
            assert!(err < 1e-4, "seed {seed} bonus {bonus}: {err}");
        }
    }
}

#[test]
fn baseline_shift_leaves_gradient_unchanged() {
    let params = tiny_params(7);
    let groups = tiny_groups(&params, 7, 8);
    let base = policy_gradient(&params, &groups, 0.01).to_flat();
    let mut shifted = groups.clone();
    for (g, grp) in shifted.iter_mut().enumerate() {
        for s in grp {
            s.reward += 10.0 * (g as f64 + 1.0);
        }
    }
    let moved = policy_gradient(&params, &shifted, 0.01).to_flat();
    let err = base.iter().zip(&moved).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-10, "{err}");
}

#[test]
fn equal_rewards_without_bonus_give_zero_update() {
    let mut params = tiny_params(8);
    let mut groups = tiny_groups(&params, 8, 4);
    for s in groups.iter_mut().flatten() {
        s.reward = -2.5;
    }
    let grad = policy_gradient(&params, &groups, 0.0);
    assert!(grad.to_flat().iter().all(|&g| g == 0.0));
    let before = params.clone();
    let mut adam = Adam::new(params.len(), 1e-3);
    policy_gradient_update(&mut params, &groups, 0.0, &mut adam);
    assert_eq!(params, before);
}

#[test]
fn better_circuit_gains_probability() {
    let params = tiny_params(21);
    let q = SupportConfig::parse("110", 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let first = sample_circuit(&params, q, 2, 0.0, &mut rng).unwrap();
    let second = loop {
        let s = sample_circuit(&params, q, 2, 0.0, &mut rng).unwrap();
        if s.actions != first.actions {
            break s;
        }
    };
    let mut a = first.clone();
    let mut b = second.clone();
    a.reward = -2.0;
    b.reward = -3.0;
    let mut updated = params.clone();
    let mut adam = Adam::new(params.len(), 1e-3);
    policy_gradient_update(&mut updated, &[vec![a.clone(), b.clone()]], 0.0, &mut adam);
    let lp = |p: &RnnParams, s: &PolicySample| layer_log_probs(p, q, &s.actions).unwrap().iter().sum::<f64>();
    assert!(lp(&updated, &a) > lp(&params, &a));
    assert!(lp(&updated, &b) < lp(&params, &b));
}

#[test]
fn non_finite_gradient_is_skipped() {
    let mut params = tiny_params(3);
    let before = params.clone();
    let mut grad = params.zeros_like();
    grad.b_o[0] = f64::NAN;
    let mut adam = Adam::new(params.len(), 1e-3);
    assert!(matches!(apply_gradient(&mut params, &grad, &mut adam), UpdateOutcome::Skipped { .. }));
    assert_eq!(params, before);
}

#[test]
fn large_gradients_are_clipped() {
    let mut params = tiny_params(3);
    let mut grad = params.zeros_like();
    grad.b_o.fill(1e6);
    let mut adam = Adam::new(params.len(), 1e-3);
    match apply_gradient(&mut params, &grad, &mut adam) {
        UpdateOutcome::Applied { grad_norm } => assert!(grad_norm > GRAD_CLIP),
        other => panic!("{other:?}"),
    }
    assert!(params.is_finite());
}

#[test]
fn sampled_log_prob_matches_replay_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [4usize, 5, 9] {
        let params = RnnParams::random(n, CircuitLayout::new(n).unwrap().max_gates(), 8, &mut rng);
        let q = SupportConfig::new(0b11, n).unwrap();
        for _ in 0..10 {
            let s = sample_circuit(&params, q, 5, 0.0, &mut rng).unwrap();
            // independent replay with explicit products of softmax probabilities
            let layout = CircuitLayout::new(n).unwrap();
            let qv = encode_support(q);
            let mut state = RnnState::zeros(params.hidden);
            let mut w = start_token(params.gates_per_layer);
            let mut prob = 1.0;
            for (t, row) in s.actions.iter().enumerate() {
                let (next, logits) = rnn_step(&params, &state, input_vector(&qv, &w).view()).unwrap();
                for b in 0..layout.gates_in_layer(t) {
                    prob *= softmax(&logits.as_slice().unwrap()[3 * b..3 * b + 3])[row[b]];
                }
                w = encode_layer(row, params.gates_per_layer);
                state = next;
            }
            assert!((s.log_prob.exp() - prob).abs() < 1e-12);
            let replay: f64 = layer_log_probs(&params, q, &s.actions).unwrap().iter().sum();
            assert!((replay - s.log_prob).abs() < 1e-12);
        }
    }
}

#[test]
fn uniform_policy_log_prob() {
    for n in [8usize, 9] {
        let layout = CircuitLayout::new(n).unwrap();
        let params = RnnParams::zeros(n, layout.max_gates(), 6);
        let q = SupportConfig::new(0b111, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_circuit(&params, q, 4, 0.0, &mut rng).unwrap();
        let slots: usize = (0..4).map(|t| layout.gates_in_layer(t)).sum();
        assert!((s.log_prob + slots as f64 * 3f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn saturated_block_is_constant() {
    let mut params = RnnParams::zeros(3, 1, 4);
    params.b_o[0] = 25.0;
    let q = SupportConfig::parse("110", 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let s = sample_circuit(&params, q, 1, 0.0, &mut rng).unwrap();
        assert_eq!(s.actions[0][0], 0);
    }
}

#[test]
fn greedy_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let params = RnnParams::random(9, 4, 16, &mut rng);
    let q = SupportConfig::parse("101100000", 9).unwrap();
    let a = greedy_circuit(&params, q, 8, 0.0).unwrap();
    let b = greedy_circuit(&params, q, 8, 0.0).unwrap();
    assert_eq!(a.actions, b.actions);
}

#[test]
fn reward_examples() {
    let q = SupportConfig::parse("110000000", 9).unwrap();
    let id = Circuit::identity(9, 8).unwrap();
    assert_eq!(reward(q, &id, 0.005).unwrap(), -3.0);
    let mut c = Circuit::identity(9, 8).unwrap();
    c.set_gate(0, 1, GateKind::ISwap).unwrap();
    let a = (81.0f64 / 17.0).sqrt();
    assert!((reward(q, &c, 0.005).unwrap() + a).abs() < 1e-12);
    c.set_gate(0, 7, GateKind::Swap).unwrap();
    assert!((reward(q, &c, 0.005).unwrap() + a + 0.005).abs() < 1e-12);
    assert_eq!(reward(q, &c, 0.005).unwrap(), reward(q, &c, 0.005).unwrap());
}

#[test]
fn supervised_phase_memorizes_one_circuit() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut params = RnnParams::random(5, 2, 16, &mut rng);
    let q = SupportConfig::parse("01110", 5).unwrap();
    let target = sample_circuit(&RnnParams::zeros(5, 2, 16), q, 4, 0.0, &mut rng).unwrap();
    let mut buffer = ReplayBuffer::new(2);
    buffer.insert(q, &target.actions, target.reward);
    let mut adam = Adam::new(params.len(), 1e-3);
    let history = supervised_update(&mut params, &buffer, 500, &mut adam).unwrap();
    assert_eq!(history.len(), 500);
    assert_eq!(greedy_circuit(&params, q, 4, 0.0).unwrap().actions, target.actions);
    for w in history.chunks(10).collect::<Vec<_>>().windows(2) {
        let mean = |c: &[f64]| c.iter().sum::<f64>() / c.len() as f64;
        assert!(mean(w[1]) <= mean(w[0]) + 1e-9);
    }
}

#[test]
fn empty_buffer_is_a_no_op() {
    let mut params = tiny_params(1);
    let before = params.clone();
    let mut adam = Adam::new(params.len(), 1e-3);
    assert!(supervised_update(&mut params, &ReplayBuffer::new(2), 10, &mut adam).unwrap().is_empty());
    assert_eq!(params, before);
}

fn tiny_config(seed: u64) -> TrainConfig {
    TrainConfig {
        n: 5,
        layers: 4,
        hidden: 8,
        samples_per_support: 4,
        supports_per_update: 3,
        updates: 50,
        sizes: vec![2, 3],
        supervised_period: 10,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn single_threaded_training_is_bit_reproducible() {
    let run = || {
        single_thread(|| {
            let out = train(&tiny_config(4), &TrainOptions::default(), |_| {}).unwrap();
            let log: Vec<String> = out.log.iter().map(LogRow::csv_line).collect();
            (out.checkpoint.to_text(), log)
        })
    };
    assert_eq!(run(), run());
}

#[test]
fn replay_best_never_decreases_during_training() {
    let mut trainer = Trainer::new(tiny_config(6)).unwrap();
    let mut best = std::collections::BTreeMap::new();
    for _ in 0..30 {
        trainer.step().unwrap();
        for q in trainer.replay().supports() {
            let r = trainer.replay().best(q).unwrap().reward;
            let prev = best.insert(*q, r).unwrap_or(f64::NEG_INFINITY);
            assert!(r >= prev);
        }
    }
}

#[test]
fn checkpoint_round_trip_preserves_behaviour() {
    let out = train(&TrainConfig { updates: 20, ..tiny_config(9) }, &TrainOptions::default(), |_| {}).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    save_checkpoint(&path, &out.checkpoint).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    let path2 = dir.path().join("again.txt");
    save_checkpoint(&path2, &loaded).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    assert_eq!(loaded, out.checkpoint);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..10 {
        let q = random_support(5, &mut rng);
        let a = greedy_circuit(&out.checkpoint.params, q, 4, 0.0).unwrap();
        let b = greedy_circuit(&loaded.params, q, 4, 0.0).unwrap();
        assert_eq!(a.actions, b.actions);
    }
    let text = std::fs::read_to_string(&path).unwrap().replacen("version 1", "version 7", 1);
    assert!(matches!(Checkpoint::from_text(&text), Err(shadowgen_core::Error::Version { found: 7, .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn checkpoint_text_is_lossless(seed in any::<u64>(), hidden in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = RnnParams::random(4, 2, hidden, &mut rng);
        let flat: Vec<f64> = params.to_flat().iter().map(|_| rng.random::<f64>() * 1e3 - 5e2).collect();
        params.set_flat(&flat).unwrap();
        let ckpt = Checkpoint::new(TrainConfig { n: 4, hidden, ..TrainConfig::default() }, params, 3);
        let back = Checkpoint::from_text(&ckpt.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), ckpt.to_text());
        prop_assert_eq!(back, ckpt);
    }

    #[test]
    fn actions_round_trip_through_circuits(seed in any::<u64>(), n in 2usize..=9, layers in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = CircuitLayout::new(n).unwrap();
        let actions: Actions = (0..layers)
            .map(|t| (0..layout.gates_in_layer(t)).map(|_| rng.random_range(0..3)).collect())
            .collect();
        let c = actions_to_circuit(n, &actions).unwrap();
        prop_assert_eq!(circuit_to_actions(&c).unwrap(), actions);
    }
}
