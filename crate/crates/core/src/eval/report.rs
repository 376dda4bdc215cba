//! Scoring a trained policy over every support of the requested sizes.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::supports::{enumerate_supports, rc_baseline, SHALLOW_BAND};
use crate::engine::{Circuit, SupportConfig};
use crate::error::{Error, Result};
use crate::generator::{greedy_circuit, sample_circuit, Checkpoint, RnnParams};

#[derive(Clone, Debug, PartialEq)]
pub struct SupportRow {
    pub support: SupportConfig,
    pub k: usize,
    /// Best α among the sampled circuits and the greedy circuit.
    pub best_alpha: f64,
    /// Mean α over the sampled circuits.
    pub mean_alpha: f64,
    pub greedy_alpha: f64,
    pub best_circuit: Circuit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SizeAggregate {
    pub k: usize,
    pub count: usize,
    /// Mean over supports of the per-support best α.
    pub alpha_mean: f64,
    /// Minimum over supports of the per-support best α.
    pub alpha_min: f64,
    pub sampled_mean: f64,
    pub greedy_mean: f64,
    pub rc_baseline: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub samples: usize,
    pub rows: Vec<SupportRow>,
    pub aggregates: Vec<SizeAggregate>,
}

/// Best, mean and greedy α for one support.
pub fn score_support(params: &RnnParams, q: SupportConfig, layers: usize, samples: usize, rng: &mut ChaCha8Rng) -> Result<SupportRow> {
    let greedy = greedy_circuit(params, q, layers, 0.0)?;
    let mut best_alpha = greedy.metrics.alpha;
    let mut best_circuit = greedy.circuit.clone();
    let mut sum = 0.0;
    for _ in 0..samples {
        let s = sample_circuit(params, q, layers, 0.0, rng)?;
        sum += s.metrics.alpha;
        if s.metrics.alpha < best_alpha {
            best_alpha = s.metrics.alpha;
            best_circuit = s.circuit;
        }
    }
    Ok(SupportRow {
        support: q,
        k: q.size(),
        best_alpha,
        mean_alpha: if samples == 0 { greedy.metrics.alpha } else { sum / samples as f64 },
        greedy_alpha: greedy.metrics.alpha,
        best_circuit,
    })
}

/// Support `i` of the flattened list draws from stream `i` of `seed`, so the
/// report does not depend on thread count.
pub fn evaluate_model(ckpt: &Checkpoint, sizes: &[usize], samples: usize, seed: u64) -> Result<EvalReport> {
    let n = ckpt.n();
    let layers = ckpt.layers();
    let mut supports = Vec::new();
    for &k in sizes {
        supports.extend(enumerate_supports(n, k)?);
    }
    let rows: Vec<SupportRow> = supports
        .par_iter()
        .enumerate()
        .map(|(i, &q)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            score_support(&ckpt.params, q, layers, samples, &mut rng)
        })
        .collect::<Result<_>>()?;
    let aggregates = aggregate(&rows, sizes)?;
    Ok(EvalReport { n, samples, rows, aggregates })
}

pub fn aggregate(rows: &[SupportRow], sizes: &[usize]) -> Result<Vec<SizeAggregate>> {
    sizes
        .iter()
        .map(|&k| {
            let sel: Vec<&SupportRow> = rows.iter().filter(|r| r.k == k).collect();
            if sel.is_empty() {
                return Err(Error::Internal(format!("no rows for k = {k}")));
            }
            let c = sel.len() as f64;
            Ok(SizeAggregate {
                k,
                count: sel.len(),
                alpha_mean: sel.iter().map(|r| r.best_alpha).sum::<f64>() / c,
                alpha_min: sel.iter().map(|r| r.best_alpha).fold(f64::INFINITY, f64::min),
                sampled_mean: sel.iter().map(|r| r.mean_alpha).sum::<f64>() / c,
                greedy_mean: sel.iter().map(|r| r.greedy_alpha).sum::<f64>() / c,
                rc_baseline: rc_baseline(k),
            })
        })
        .collect()
}

impl EvalReport {
    pub fn aggregate_for(&self, k: usize) -> Option<&SizeAggregate> {
        self.aggregates.iter().find(|a| a.k == k)
    }

    /// Per-support rows; the quoted circuit column joins layers with `;`.
    pub fn rows_csv(&self) -> String {
        let mut s = String::from("support,k,best_alpha,mean_alpha,greedy_alpha,best_circuit\n");
        for r in &self.rows {
            let circ = r.best_circuit.to_string().trim_end().replace('\n', ";");
            let _ = writeln!(
                s,
                "{},{},{:.12},{:.12},{:.12},\"{}\"",
                r.support, r.k, r.best_alpha, r.mean_alpha, r.greedy_alpha, circ
            );
        }
        s
    }

    pub fn aggregates_csv(&self) -> String {
        let mut s = String::from("k,n_k,alpha_mean,alpha_min,sampled_mean,greedy_mean,alpha_rc,band_low,band_high\n");
        for a in &self.aggregates {
            let _ = writeln!(
                s,
                "{},{},{:.12},{:.12},{:.12},{:.12},{:.12},{},{}",
                a.k, a.count, a.alpha_mean, a.alpha_min, a.sampled_mean, a.greedy_mean, a.rc_baseline, SHALLOW_BAND.0, SHALLOW_BAND.1
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "evaluation over {} supports, {} samples per support (+ greedy), n = {}", self.rows.len(), self.samples, self.n);
        for a in &self.aggregates {
            let _ = writeln!(
                s,
                "k={:<2} n_k={:<4} mean={:.4} min={:.4} rc={:.4} sampled_mean={:.4} greedy_mean={:.4}{}",
                a.k,
                a.count,
                a.alpha_mean,
                a.alpha_min,
                a.rc_baseline,
                a.sampled_mean,
                a.greedy_mean,
                if a.alpha_min < a.rc_baseline { "  (min beats rc)" } else { "" }
            );
        }
        s
    }
}
