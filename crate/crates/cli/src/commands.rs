//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, LevelFilter};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use shadowgen_core::engine::{dictionary_matrix, variance_of, Circuit, GateKind, SupportConfig};
use shadowgen_core::eval::{
    evaluate_model, mc_estimate_weight, parse_size_set, qec_demo, rc_baseline, score_support, McConfig,
    MC_MAX_QUBITS,
};
use shadowgen_core::gatelab::{
    classify_gate, convex_hull_area, optimize_gates, region_scatter, successive_width, CartanCoordinates,
    EntropyPair, GateLabel, GateRole, OptimConfig, DEFAULT_TOL, VERTICES,
};
use shadowgen_core::generator::{load_checkpoint, train, Checkpoint, LogRow, TrainConfig, TrainOptions};

use crate::config::{self, render_resolved, FileConfig, GlobalResolved};
use crate::run::{attach_log_file, RunDir};
use crate::{Cli, Command};

/// Invalid arguments that clap itself cannot detect.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    let usage_like = e.chain().any(|c| {
        c.is::<UsageError>()
            || matches!(c.downcast_ref::<shadowgen_core::Error>(), Some(shadowgen_core::Error::InvalidSupport(_)))
    });
    if usage_like {
        2
    } else {
        1
    }
}

struct Ctx {
    global: GlobalResolved,
    dir: RunDir,
}

impl Ctx {
    fn seed(&self) -> u64 {
        self.global.seed
    }

    fn write_resolved<T: Serialize>(&self, section: &str, cmd: &T) -> Result<()> {
        self.dir.write("config-resolved", &render_resolved(&self.global, section, cmd)?)?;
        Ok(())
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::DictOptimize(_) => "dict-optimize",
        Command::RegionScatter(_) => "region-scatter",
        Command::Train(_) => "train",
        Command::Eval(_) => "eval",
        Command::Predict(_) => "predict",
        Command::QecDemo(_) => "qec-demo",
        Command::McVerify(_) => "mc-verify",
        Command::Baseline(_) => "baseline",
        Command::GateInfo(_) => "gate-info",
    }
}

fn parse_level(s: &str) -> Result<LevelFilter> {
    s.parse::<LevelFilter>().map_err(|_| usage(format!("unknown log level {s:?}")))
}

pub fn dispatch(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => config::load(p).map_err(|e| usage(format!("{e:#}")))?,
        None => FileConfig::default(),
    };
    let log_level = cli.log_level.clone().or(file.log_level.clone()).unwrap_or_else(|| "info".into());
    log::set_max_level(parse_level(&log_level)?);

    let name = command_name(&cli.command);
    let threads = cli.threads.or(file.threads).unwrap_or(0);
    let threads = if threads == 0 { rayon::current_num_threads() } else { threads };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().ok();

    let out = cli
        .out
        .clone()
        .or(file.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("shadowgen-out").join(name));
    let dir = RunDir::create(&out)?;
    attach_log_file(&dir)?;
    let global = GlobalResolved {
        command: name.to_string(),
        seed: cli.seed.or(file.seed).unwrap_or(0),
        threads,
        out: out.display().to_string(),
        log_level,
    };
    info!("{name}: seed {} threads {} output {}", global.seed, global.threads, dir.root().display());
    let ctx = Ctx { global, dir };

    match cli.command {
        Command::DictOptimize(a) => dict_optimize(&ctx, a, &file.dict_optimize),
        Command::RegionScatter(a) => region(&ctx, a, &file.region_scatter),
        Command::Train(a) => cmd_train(&ctx, a, &file.train),
        Command::Eval(a) => cmd_eval(&ctx, a, &file.eval),
        Command::Predict(a) => predict(&ctx, a, &file.predict),
        Command::QecDemo(a) => cmd_qec(&ctx, a, &file.qec_demo),
        Command::McVerify(a) => mc_verify(&ctx, a, &file.mc_verify),
        Command::Baseline(a) => baseline(&ctx, a.k),
        Command::GateInfo(a) => gate_info(&ctx, &a.gate),
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| usage(format!("missing required argument --{flag}")))
}

#[derive(Serialize)]
struct DictOptimizeResolved {
    k: usize,
    layers: usize,
    n: usize,
    inits: usize,
    steps: usize,
    lr: f64,
    fd_step: f64,
    tol: f64,
}

fn dict_optimize(ctx: &Ctx, a: crate::DictOptimizeArgs, f: &config::DictOptimizeFile) -> Result<()> {
    let defaults = OptimConfig::default();
    let k = required(a.k.or(f.k), "k")?;
    let layers = a.layers.or(f.layers).unwrap_or(4);
    if k < 1 || layers < 1 {
        return Err(usage("--k and --layers must be positive"));
    }
    let r = DictOptimizeResolved {
        k,
        layers,
        n: successive_width(k, layers),
        inits: a.inits.or(f.inits).unwrap_or(10),
        steps: a.steps.or(f.steps).unwrap_or(defaults.steps),
        lr: a.lr.or(f.lr).unwrap_or(defaults.lr),
        fd_step: a.fd_step.or(f.fd_step).unwrap_or(defaults.fd_step),
        tol: a.tol.or(f.tol).unwrap_or(DEFAULT_TOL),
    };
    ctx.write_resolved("dict_optimize", &r)?;
    let cfg = OptimConfig { lr: r.lr, steps: r.steps, fd_step: r.fd_step, ..defaults };
    info!("optimizing k={} L={} on {} qubits, {} inits", r.k, r.layers, r.n, r.inits);
    let runs = optimize_gates(r.k, r.layers, r.n, r.inits, &cfg, ctx.seed())?;

    let mut traj = String::from("init,step,alpha\n");
    let mut gates = String::from("init,gate,layer,position,role,pinned,cx,cy,cz,s_ac,s_ad,label\n");
    for run in &runs {
        for (step, a) in run.trajectory.iter().enumerate() {
            let _ = writeln!(traj, "{},{},{:.12}", run.init, step, a);
        }
        let mut g = 0;
        for (t, layer) in run.coords.iter().enumerate() {
            for (pos, c) in layer.iter().enumerate() {
                let e = run.entropies[t][pos];
                let _ = writeln!(
                    gates,
                    "{},{},{},{},{},{},{:.9},{:.9},{:.9},{:.9},{:.9},{}",
                    run.init,
                    g,
                    t + 1,
                    pos + 1,
                    run.roles[t][pos].as_str(),
                    run.pinned[t][pos],
                    c.cx,
                    c.cy,
                    c.cz,
                    e.s_ac,
                    e.s_ad,
                    classify_gate(&e, r.tol)
                );
                g += 1;
            }
        }
    }
    ctx.dir.write("trajectories.csv", &traj)?;
    ctx.dir.write("gates.csv", &gates)?;

    let rc = rc_baseline(r.k);
    let mut s = String::new();
    let _ = writeln!(s, "k={} layers={} n={} inits={} steps={}", r.k, r.layers, r.n, r.inits, r.steps);
    let _ = writeln!(s, "alpha_rc={rc:.6}");
    let mut best: Option<&shadowgen_core::gatelab::DictOptimRun> = None;
    for run in &runs {
        match &run.failure {
            Some(why) => {
                let _ = writeln!(s, "init {}: failed ({why})", run.init);
            }
            None => {
                let (hit, total, free) = bulk_vertex_fraction(run, r.tol);
                let _ = writeln!(
                    s,
                    "init {}: alpha={:.6} converged bulk gates at a vertex {hit}/{total} (free bulk gates: {free})",
                    run.init, run.final_alpha
                );
                if best.is_none_or(|b| run.final_alpha < b.final_alpha) {
                    best = Some(run);
                }
            }
        }
    }
    let best = best.ok_or_else(|| anyhow!("every initialization failed"))?;
    let _ = writeln!(s, "best init {} alpha={:.6} beats_rc={}", best.init, best.final_alpha, best.final_alpha < rc);
    for (t, layer) in best.entropies.iter().enumerate() {
        let labels: Vec<String> = layer
            .iter()
            .zip(&best.roles[t])
            .zip(&best.pinned[t])
            .map(|((e, role), pinned)| {
                let free = if *pinned || *role == GateRole::Inactive { "" } else { ",free" };
                format!("{}({}{free})", classify_gate(e, r.tol), role.as_str())
            })
            .collect();
        let _ = writeln!(s, "layer {}: {}", t + 1, labels.join(" "));
    }
    ctx.dir.write("summary.txt", &s)?;
    print!("{s}");
    Ok(())
}

/// Vertex hits among bulk gates that α depends on, their count, and the
/// number of free bulk gates.
fn bulk_vertex_fraction(run: &shadowgen_core::gatelab::DictOptimRun, tol: f64) -> (usize, usize, usize) {
    let (mut hit, mut total, mut free) = (0, 0, 0);
    for ((layer, roles), pinned) in run.entropies.iter().zip(&run.roles).zip(&run.pinned) {
        for ((e, role), pinned) in layer.iter().zip(roles).zip(pinned) {
            if *role != GateRole::Bulk {
                continue;
            }
            if !pinned {
                free += 1;
            } else {
                total += 1;
                hit += usize::from(classify_gate(e, tol).is_vertex());
            }
        }
    }
    (hit, total, free)
}

#[derive(Serialize)]
struct RegionResolved {
    samples: usize,
}

fn region(ctx: &Ctx, a: crate::RegionScatterArgs, f: &config::RegionScatterFile) -> Result<()> {
    let r = RegionResolved { samples: a.samples.or(f.samples).unwrap_or(2000) };
    ctx.write_resolved("region_scatter", &r)?;
    let pts = region_scatter(r.samples, ctx.seed());
    let mut csv = String::from("s_ac,s_ad,label\n");
    for e in &pts {
        let _ = writeln!(csv, "{:.9},{:.9},{}", e.s_ac, e.s_ad, classify_gate(e, DEFAULT_TOL));
    }
    ctx.dir.write("scatter.csv", &csv)?;
    let mut v = String::from("label,s_ac,s_ad\n");
    for (label, (x, y)) in VERTICES {
        let _ = writeln!(v, "{label},{x},{y}");
    }
    ctx.dir.write("vertices.csv", &v)?;
    let s = format!("samples={} hull_area={:.6}\n", pts.len(), convex_hull_area(&pts));
    ctx.dir.write("summary.txt", &s)?;
    print!("{s}");
    Ok(())
}

#[derive(Serialize)]
struct TrainResolved {
    n: usize,
    layers: usize,
    supports: String,
    sizes: Vec<usize>,
    updates: usize,
    hidden: usize,
    samples_per_support: usize,
    supports_per_update: usize,
    lr: f64,
    entropy_bonus: f64,
    swap_penalty: f64,
    supervised_period: usize,
    supervised_epochs: usize,
    replay_capacity: usize,
    log_every: usize,
    checkpoint_every: usize,
}

fn cmd_train(ctx: &Ctx, a: crate::TrainArgs, f: &config::TrainFile) -> Result<()> {
    let d = TrainConfig::default();
    let n = a.n.or(f.n).unwrap_or(d.n);
    let supports = a.supports.clone().or(f.supports.clone()).unwrap_or_else(|| "odd".into());
    let sizes = parse_size_set(&supports, n).map_err(|e| usage(e.to_string()))?;
    let r = TrainResolved {
        n,
        layers: a.layers.or(f.layers).unwrap_or(d.layers),
        supports,
        sizes,
        updates: a.updates.or(f.updates).unwrap_or(d.updates),
        hidden: a.hidden.or(f.hidden).unwrap_or(d.hidden),
        samples_per_support: f.samples_per_support.unwrap_or(d.samples_per_support),
        supports_per_update: f.supports_per_update.unwrap_or(d.supports_per_update),
        lr: a.lr.or(f.lr).unwrap_or(d.lr),
        entropy_bonus: f.entropy_bonus.unwrap_or(d.entropy_bonus),
        swap_penalty: f.swap_penalty.unwrap_or(d.swap_penalty),
        supervised_period: f.supervised_period.unwrap_or(d.supervised_period),
        supervised_epochs: f.supervised_epochs.unwrap_or(d.supervised_epochs),
        replay_capacity: f.replay_capacity.unwrap_or(d.replay_capacity),
        log_every: a.log_every.or(f.log_every).unwrap_or(TrainOptions::default().log_every),
        checkpoint_every: f.checkpoint_every.unwrap_or(TrainOptions::default().checkpoint_every),
    };
    ctx.write_resolved("train", &r)?;
    let cfg = TrainConfig {
        n: r.n,
        layers: r.layers,
        hidden: r.hidden,
        samples_per_support: r.samples_per_support,
        supports_per_update: r.supports_per_update,
        updates: r.updates,
        lr: r.lr,
        entropy_bonus: r.entropy_bonus,
        swap_penalty: r.swap_penalty,
        supervised_period: r.supervised_period,
        supervised_epochs: r.supervised_epochs,
        replay_capacity: r.replay_capacity,
        sizes: r.sizes.clone(),
        seed: ctx.seed(),
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let opts = TrainOptions {
        log_every: r.log_every,
        checkpoint_path: Some(ctx.dir.path("checkpoint.txt")),
        checkpoint_every: r.checkpoint_every,
    };
    let mut csv = LogRow::csv_header(&cfg.sizes);
    csv.push('\n');
    let outcome = train(&cfg, &opts, |row| {
        csv.push_str(&row.csv_line());
        csv.push('\n');
        info!(
            "update {} mean_reward {:.4} mean_alpha {:?} entropy {:.4}",
            row.update,
            row.mean_reward,
            row.mean_alpha.iter().map(|a| (a * 1e4).round() / 1e4).collect::<Vec<_>>(),
            row.entropy
        );
    })?;
    ctx.dir.write("train_log.csv", &csv)?;
    if outcome.skipped_updates > 0 {
        log::warn!("{} updates skipped on non-finite gradients", outcome.skipped_updates);
    }
    let mut s = format!("updates={} skipped={}\n", outcome.checkpoint.updates_done, outcome.skipped_updates);
    if let Some(last) = outcome.log.last() {
        for (i, k) in cfg.sizes.iter().enumerate() {
            let _ = writeln!(
                s,
                "k={k} window_mean_alpha={:.6} best_alpha={:.6} rc={:.6}",
                last.mean_alpha[i],
                last.best_alpha[i],
                rc_baseline(*k)
            );
        }
    }
    ctx.dir.write("summary.txt", &s)?;
    print!("{s}");
    Ok(())
}

fn load_ckpt(path: &Path) -> Result<Checkpoint> {
    load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

#[derive(Serialize)]
struct EvalResolved {
    checkpoint: String,
    supports: String,
    sizes: Vec<usize>,
    samples: usize,
}

fn cmd_eval(ctx: &Ctx, a: crate::EvalArgs, f: &config::EvalFile) -> Result<()> {
    let path = required(a.checkpoint.or(f.checkpoint.as_ref().map(PathBuf::from)), "checkpoint")?;
    let ckpt = load_ckpt(&path)?;
    let default_sizes = ckpt.config.sizes.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
    let supports = a.supports.or(f.supports.clone()).unwrap_or(format!("ks={default_sizes}"));
    let sizes = parse_size_set(&supports, ckpt.n()).map_err(|e| usage(e.to_string()))?;
    let r = EvalResolved {
        checkpoint: path.display().to_string(),
        supports,
        sizes,
        samples: a.samples.or(f.samples).unwrap_or(32),
    };
    ctx.write_resolved("eval", &r)?;
    let report = evaluate_model(&ckpt, &r.sizes, r.samples, ctx.seed())?;
    ctx.dir.write("eval_rows.csv", &report.rows_csv())?;
    ctx.dir.write("eval_aggregates.csv", &report.aggregates_csv())?;
    let s = report.summary();
    ctx.dir.write("eval_summary.txt", &s)?;
    print!("{s}");
    Ok(())
}

#[derive(Serialize)]
struct PredictResolved {
    checkpoint: String,
    support: String,
    samples: usize,
}

fn predict(ctx: &Ctx, a: crate::PredictArgs, f: &config::PredictFile) -> Result<()> {
    let path = required(a.checkpoint.or(f.checkpoint.as_ref().map(PathBuf::from)), "checkpoint")?;
    let support = required(a.support.or(f.support.clone()), "support")?;
    let ckpt = load_ckpt(&path)?;
    let q = SupportConfig::parse(&support, ckpt.n())?;
    let r = PredictResolved { checkpoint: path.display().to_string(), support, samples: a.samples.or(f.samples).unwrap_or(32) };
    ctx.write_resolved("predict", &r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
    let row = score_support(&ckpt.params, q, ckpt.layers(), r.samples, &mut rng)?;
    let k = q.size();
    let mut s = format!(
        "# support={} k={k} alpha={:.9} greedy_alpha={:.9} rc={:.9}\n",
        q,
        row.best_alpha,
        row.greedy_alpha,
        rc_baseline(k)
    );
    s.push_str(&row.best_circuit.to_string());
    ctx.dir.write("predict.txt", &s)?;
    print!("{s}");
    Ok(())
}

#[derive(Serialize)]
struct QecResolved {
    checkpoint: String,
    samples: usize,
}

fn cmd_qec(ctx: &Ctx, a: crate::QecDemoArgs, f: &config::QecDemoFile) -> Result<()> {
    let path = required(a.checkpoint.or(f.checkpoint.as_ref().map(PathBuf::from)), "checkpoint")?;
    let r = QecResolved { checkpoint: path.display().to_string(), samples: a.samples.or(f.samples).unwrap_or(32) };
    ctx.write_resolved("qec_demo", &r)?;
    let ckpt = load_ckpt(&path)?;
    let report = qec_demo(&ckpt, r.samples, ctx.seed())?;
    ctx.dir.write("qec.csv", &report.csv())?;
    ctx.dir.write("qec_circuits.txt", &report.circuits_text())?;
    print!("{}", report.csv());
    Ok(())
}

#[derive(Serialize)]
struct McResolved {
    n: usize,
    circuit: String,
    support: String,
    shots: usize,
}

fn mc_verify(ctx: &Ctx, a: crate::McVerifyArgs, f: &config::McVerifyFile) -> Result<()> {
    let n = required(a.n.or(f.n), "n")?;
    if n > MC_MAX_QUBITS {
        return Err(usage(format!("mc-verify handles at most {MC_MAX_QUBITS} qubits, got {n}")));
    }
    let support = required(a.support.or(f.support.clone()), "support")?;
    let q = SupportConfig::parse(&support, n)?;
    let circuit_path = a.circuit.or(f.circuit.as_ref().map(PathBuf::from));
    let circuit = match &circuit_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading circuit {}", p.display()))?;
            Circuit::parse(&text, n)?
        }
        None => Circuit::empty(n)?,
    };
    let r = McResolved {
        n,
        circuit: circuit_path.map(|p| p.display().to_string()).unwrap_or_default(),
        support,
        shots: a.shots.or(f.shots).unwrap_or(100_000),
    };
    if r.shots == 0 {
        return Err(usage("--shots must be positive"));
    }
    ctx.write_resolved("mc_verify", &r)?;
    let exact = variance_of(&circuit, q)?.pauli_weight;
    let est = mc_estimate_weight(&circuit, q, &McConfig { shots: r.shots, seed: ctx.seed() })?;
    let z = if est.stderr > 0.0 { (est.w_hat - exact) / est.stderr } else { 0.0 };
    let csv = format!("w_exact,w_hat,stderr,z_score\n{exact:.12},{:.12},{:.12},{z:.6}\n", est.w_hat, est.stderr);
    ctx.dir.write("mc.csv", &csv)?;
    print!("{csv}");
    if z.abs() > 3.0 {
        log::warn!("estimate deviates from the exact weight by {z:.2} standard errors");
    }
    Ok(())
}

#[derive(Serialize)]
struct BaselineResolved {
    k: usize,
}

fn baseline(ctx: &Ctx, k: usize) -> Result<()> {
    if k == 0 {
        bail!(usage("--k must be at least 1"));
    }
    ctx.write_resolved("baseline", &BaselineResolved { k })?;
    let s = format!("k={k} alpha_rc={:.6}\n", rc_baseline(k));
    ctx.dir.write("baseline.txt", &s)?;
    print!("{s}");
    Ok(())
}

#[derive(Serialize)]
struct GateInfoResolved {
    gate: String,
}

fn gate_coordinates(g: &GateKind) -> Option<CartanCoordinates> {
    match g {
        GateKind::I => Some(CartanCoordinates::IDENTITY),
        GateKind::Swap => Some(CartanCoordinates::SWAP),
        GateKind::ISwap => Some(CartanCoordinates::ISWAP),
        GateKind::Cz => Some(CartanCoordinates::CZ),
        GateKind::Custom(_) => None,
    }
}

fn gate_info(ctx: &Ctx, name: &str) -> Result<()> {
    let g = GateKind::from_name(name).map_err(|e| usage(e.to_string()))?;
    ctx.write_resolved("gate_info", &GateInfoResolved { gate: name.to_string() })?;
    let t = dictionary_matrix(&g)?;
    let mut s = format!("gate {}\ntransfer matrix (rows: out class 00 01 10 11, columns: in class)\n", g.token());
    for out in 0..4 {
        let row: Vec<String> = (0..4).map(|inp| format!("{:.6}", t.get(out, inp))).collect();
        let _ = writeln!(s, "  {}", row.join("  "));
    }
    if let Some(c) = gate_coordinates(&g) {
        let e = EntropyPair::of_unitary(&c.unitary())?;
        let _ = writeln!(s, "cartan ({:.6}, {:.6}, {:.6})", c.cx, c.cy, c.cz);
        let label: GateLabel = classify_gate(&e, DEFAULT_TOL);
        let _ = writeln!(s, "entropies s_ac={:.6} s_ad={:.6} ({label})", e.s_ac, e.s_ad);
    }
    ctx.dir.write("gate_info.txt", &s)?;
    print!("{s}");
    Ok(())
}
