//! Hybrid training: policy-gradient exploration with a periodic supervised
//! pass over the replay buffer.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::checkpoint::{save_checkpoint, Checkpoint};
use super::policy::{policy_gradient_update, sample_circuit, supervised_update, PolicySample, UpdateOutcome};
use super::replay::ReplayBuffer;
use super::rnn::RnnParams;
use crate::engine::{CircuitLayout, SupportConfig};
use crate::error::{Error, Result};
use crate::optim::Adam;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub n: usize,
    pub layers: usize,
    pub hidden: usize,
    /// Circuits sampled per support in each update (`N_a`).
    pub samples_per_support: usize,
    /// Supports drawn per update (`B_q`).
    pub supports_per_update: usize,
    pub updates: usize,
    pub lr: f64,
    /// Initial entropy bonus, decayed linearly to zero at half the run.
    pub entropy_bonus: f64,
    pub swap_penalty: f64,
    pub supervised_period: usize,
    pub supervised_epochs: usize,
    pub replay_capacity: usize,
    pub sizes: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n: 9,
            layers: 8,
            hidden: 64,
            samples_per_support: 32,
            supports_per_update: 8,
            updates: 5000,
            lr: 1e-3,
            entropy_bonus: 0.01,
            swap_penalty: 0.005,
            supervised_period: 25,
            supervised_epochs: 2,
            replay_capacity: 2,
            sizes: vec![3, 5, 7],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        CircuitLayout::new(self.n)?;
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.layers == 0 {
            return bad("layers must be at least 1");
        }
        if self.hidden == 0 || self.samples_per_support == 0 || self.supports_per_update == 0 {
            return bad("hidden size and batch sizes must be positive");
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|&k| k == 0 || k > self.n) {
            return bad("support sizes must be non-empty and lie in 1..=n");
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return bad("learning rate must be positive");
        }
        if self.entropy_bonus < 0.0 || self.swap_penalty < 0.0 {
            return bad("entropy bonus and swap penalty must be non-negative");
        }
        Ok(())
    }

    pub fn entropy_at(&self, update: usize) -> f64 {
        let half = (self.updates as f64 / 2.0).max(1.0);
        self.entropy_bonus * (1.0 - update as f64 / half).max(0.0)
    }
}

/// Aggregates over the updates since the previous row.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub update: usize,
    pub mean_reward: f64,
    /// Mean α of sampled circuits per configured size (NaN if none drawn).
    pub mean_alpha: Vec<f64>,
    /// Best α seen so far per configured size.
    pub best_alpha: Vec<f64>,
    pub swap_rate: f64,
    /// Mean per-block policy entropy (nats).
    pub entropy: f64,
}

impl LogRow {
    pub fn csv_header(sizes: &[usize]) -> String {
        let mut cols = vec!["update".to_string(), "mean_reward".to_string()];
        cols.extend(sizes.iter().map(|k| format!("mean_alpha_k{k}")));
        cols.extend(sizes.iter().map(|k| format!("best_alpha_k{k}")));
        cols.push("swap_rate".into());
        cols.push("entropy".into());
        cols.join(",")
    }

    pub fn csv_line(&self) -> String {
        let mut cols = vec![self.update.to_string(), fmt6(self.mean_reward)];
        cols.extend(self.mean_alpha.iter().map(|&a| fmt6(a)));
        cols.extend(self.best_alpha.iter().map(|&a| fmt6(a)));
        cols.push(fmt6(self.swap_rate));
        cols.push(fmt6(self.entropy));
        cols.join(",")
    }
}

fn fmt6(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        "nan".to_string()
    }
}

#[derive(Clone, Debug)]
pub struct TrainOptions {
    pub log_every: usize,
    pub checkpoint_path: Option<PathBuf>,
    pub checkpoint_every: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { log_every: 10, checkpoint_path: None, checkpoint_every: 100 }
    }
}

#[derive(Default)]
struct Window {
    updates: usize,
    reward_sum: f64,
    samples: usize,
    alpha_sum: BTreeMap<usize, (f64, usize)>,
    swaps: usize,
    slots: usize,
    entropy_sum: f64,
    blocks: usize,
}

pub struct Trainer {
    cfg: TrainConfig,
    params: RnnParams,
    rl_adam: Adam,
    sup_adam: Adam,
    rng: ChaCha8Rng,
    replay: ReplayBuffer,
    updates_done: usize,
    best_alpha: BTreeMap<usize, f64>,
    window: Window,
    skipped: usize,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let ng = CircuitLayout::new(cfg.n)?.max_gates();
        let params = RnnParams::random(cfg.n, ng, cfg.hidden, &mut rng);
        let dim = params.len();
        Ok(Self {
            rl_adam: Adam::new(dim, cfg.lr),
            sup_adam: Adam::new(dim, cfg.lr),
            replay: ReplayBuffer::new(cfg.replay_capacity),
            params,
            rng,
            updates_done: 0,
            best_alpha: BTreeMap::new(),
            window: Window::default(),
            skipped: 0,
            cfg,
        })
    }

    pub fn params(&self) -> &RnnParams {
        &self.params
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn updates_done(&self) -> usize {
        self.updates_done
    }

    /// Updates skipped because of a non-finite gradient.
    pub fn skipped_updates(&self) -> usize {
        self.skipped
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(self.cfg.clone(), self.params.clone(), self.updates_done)
    }

    fn draw_support(&mut self) -> SupportConfig {
        let k = self.cfg.sizes[self.rng.random_range(0..self.cfg.sizes.len())];
        let mut qubits: Vec<usize> = index::sample(&mut self.rng, self.cfg.n, k).into_iter().map(|i| i + 1).collect();
        qubits.sort_unstable();
        SupportConfig::from_qubits(&qubits, self.cfg.n).expect("sampled inside the register")
    }

    /// One policy-gradient update, plus the supervised phase when due.
    pub fn step(&mut self) -> Result<UpdateOutcome> {
        let supports: Vec<SupportConfig> = (0..self.cfg.supports_per_update).map(|_| self.draw_support()).collect();
        let seeds: Vec<Vec<u64>> = supports
            .iter()
            .map(|_| (0..self.cfg.samples_per_support).map(|_| self.rng.next_u64()).collect())
            .collect();
        let params = &self.params;
        let (layers, penalty) = (self.cfg.layers, self.cfg.swap_penalty);
        let groups: Vec<Vec<PolicySample>> = supports
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(&q, seeds)| {
                seeds
                    .iter()
                    .map(|&s| sample_circuit(params, q, layers, penalty, &mut ChaCha8Rng::seed_from_u64(s)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;

        self.record(&groups);
        for grp in &groups {
            for s in grp {
                self.replay.insert(s.support, &s.actions, s.reward);
            }
        }

        let bonus = self.cfg.entropy_at(self.updates_done);
        let outcome = policy_gradient_update(&mut self.params, &groups, bonus, &mut self.rl_adam);
        if let UpdateOutcome::Skipped { .. } = outcome {
            self.skipped += 1;
        }
        self.updates_done += 1;
        if self.cfg.supervised_period > 0 && self.updates_done.is_multiple_of(self.cfg.supervised_period) {
            supervised_update(&mut self.params, &self.replay, self.cfg.supervised_epochs, &mut self.sup_adam)?;
        }
        Ok(outcome)
    }

    fn record(&mut self, groups: &[Vec<PolicySample>]) {
        let w = &mut self.window;
        w.updates += 1;
        for s in groups.iter().flatten() {
            let k = s.support.size();
            w.reward_sum += s.reward;
            w.samples += 1;
            let e = w.alpha_sum.entry(k).or_insert((0.0, 0));
            e.0 += s.metrics.alpha;
            e.1 += 1;
            w.swaps += s.swap_count;
            let slots: usize = s.actions.iter().map(Vec::len).sum();
            w.slots += slots;
            w.entropy_sum += s.entropy;
            w.blocks += slots;
            let best = self.best_alpha.entry(k).or_insert(f64::INFINITY);
            if s.metrics.alpha < *best {
                *best = s.metrics.alpha;
            }
        }
    }

    /// Close the current logging window.
    pub fn flush_log(&mut self) -> LogRow {
        let w = std::mem::take(&mut self.window);
        let div = |a: f64, b: usize| if b == 0 { f64::NAN } else { a / b as f64 };
        LogRow {
            update: self.updates_done,
            mean_reward: div(w.reward_sum, w.samples),
            mean_alpha: self
                .cfg
                .sizes
                .iter()
                .map(|k| w.alpha_sum.get(k).map_or(f64::NAN, |&(s, c)| div(s, c)))
                .collect(),
            best_alpha: self
                .cfg
                .sizes
                .iter()
                .map(|k| self.best_alpha.get(k).copied().unwrap_or(f64::NAN))
                .collect(),
            swap_rate: div(w.swaps as f64, w.slots),
            entropy: div(w.entropy_sum, w.blocks),
        }
    }
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<LogRow>,
    pub replay: ReplayBuffer,
    pub skipped_updates: usize,
}

/// Run the full schedule. `on_log` sees every row as it is produced.
pub fn train(cfg: &TrainConfig, opts: &TrainOptions, mut on_log: impl FnMut(&LogRow)) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(cfg.clone())?;
    let mut log = Vec::new();
    let log_every = opts.log_every.max(1);
    for _ in 0..cfg.updates {
        trainer.step()?;
        let done = trainer.updates_done();
        if done % log_every == 0 || done == cfg.updates {
            let row = trainer.flush_log();
            on_log(&row);
            log.push(row);
        }
        if let Some(path) = &opts.checkpoint_path {
            if opts.checkpoint_every > 0 && done % opts.checkpoint_every == 0 {
                save_checkpoint(path, &trainer.checkpoint())?;
            }
        }
    }
    let checkpoint = trainer.checkpoint();
    if let Some(path) = &opts.checkpoint_path {
        save_checkpoint(path, &checkpoint)?;
    }
    Ok(TrainOutcome { checkpoint, log, skipped_updates: trainer.skipped_updates(), replay: trainer.replay })
}
