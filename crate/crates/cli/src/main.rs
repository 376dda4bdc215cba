//! `shadowgen`: experiments on learned measurement circuits for classical
//! shadows.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "shadowgen", version, about = "Generate and score shallow shadow-tomography circuits")]
pub struct Cli {
    /// Master random seed.
    #[arg(long, global = true, env = "SHADOWGEN_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Use 1 for bit-reproducible runs.
    #[arg(long, global = true, env = "SHADOWGEN_THREADS")]
    pub threads: Option<usize>,
    /// Output directory for this run.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// off, error, warn, info, debug or trace.
    #[arg(long, global = true)]
    pub log_level: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimize continuous two-qubit gates for the successive support.
    DictOptimize(DictOptimizeArgs),
    /// Sample the Choi-entropy region of random two-qubit gates.
    RegionScatter(RegionScatterArgs),
    /// Train the circuit generator.
    Train(TrainArgs),
    /// Score a checkpoint on every support of the requested sizes.
    Eval(EvalArgs),
    /// Best circuit for one support.
    Predict(PredictArgs),
    /// Logical operators of the [[8,3,2]] color code.
    QecDemo(QecDemoArgs),
    /// Compare the exact Pauli weight with a statevector simulation.
    McVerify(McVerifyArgs),
    /// Random-Clifford scaling parameter for size-k operators.
    Baseline(BaselineArgs),
    /// Weight-transfer matrix and entangling data of a named gate.
    GateInfo(GateInfoArgs),
}

#[derive(Args, Debug)]
pub struct DictOptimizeArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub inits: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Classification tolerance in the entropy plane.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RegionScatterArgs {
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// `odd`, `even` or `ks=3,5`.
    #[arg(long)]
    pub supports: Option<String>,
    #[arg(long)]
    pub updates: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub log_every: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// `odd`, `even` or `ks=2,4`; defaults to the training sizes.
    #[arg(long)]
    pub supports: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Support bitstring, qubit 1 first.
    #[arg(long)]
    pub support: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct QecDemoArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct McVerifyArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Circuit text file; the empty circuit when omitted.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    #[arg(long)]
    pub support: Option<String>,
    #[arg(long)]
    pub shots: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[arg(long)]
    pub k: usize,
}

#[derive(Args, Debug)]
pub struct GateInfoArgs {
    /// i, swap, iswap or cz.
    #[arg(long)]
    pub gate: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    run::init_logger(log::LevelFilter::Info);
    match commands::dispatch(cli) {
        Ok(()) => {
            run::flush_log();
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e:#}");
            run::flush_log();
            if log::max_level() < log::LevelFilter::Error {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
