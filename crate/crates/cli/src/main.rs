//! `spectral-scope`: generate networks, simulate outputs, estimate and verify
//! spectra, and run the seeded demo scenarios.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "spectral-scope", version, about = "Observable eigenvalues of a network from a short output sequence")]
struct Cli {
    /// JSON file with default values for any flag (keys use `_`).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a weighted graph and its matrix.
    Generate(GenerateArgs),
    /// Simulate an output sequence from a matrix file.
    Simulate(SimulateArgs),
    /// Estimate the observable spectrum from an output sequence.
    Estimate(EstimateArgs),
    /// Compare an estimate against the eigenvalues of a matrix.
    Verify(VerifyArgs),
    /// Run a seeded scenario end to end.
    Demo(DemoArgs),
    /// Run scenarios over a batch of seeds and tabulate success rates.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// `pa` (preferential attachment) or `ring`.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Edges per new node for `pa`.
    #[arg(long)]
    pub m: Option<usize>,
    /// Directed ring (`ring` only).
    #[arg(long)]
    pub directed: bool,
    /// Uniform weight range `lo,hi`; unit weights when omitted.
    #[arg(long, allow_hyphen_values = true, value_name = "LO,HI")]
    pub weights: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// adjacency | degree | laplacian | normalized-laplacian.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub graph_out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub matrix_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Matrix CSV written by `generate`.
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// dt | ct | dt-networked | ct-networked.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Number of samples (default 2n).
    #[arg(long)]
    pub k: Option<usize>,
    /// `node:I`, `subset:I=W,J=W`, `random` or `vector:C0,C1,...`.
    #[arg(long)]
    pub observe: Option<String>,
    /// `random` (Uniform[0,1]^n) or `X0,X1,...`.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Agent state dimension for networked modes (random symmetric dynamics).
    #[arg(long)]
    pub node_d: Option<usize>,
    #[arg(long)]
    pub node_seed: Option<u64>,
    /// Agent dynamics as JSON `{"a": [[..]], "beta": [..], "gamma": [..]}`.
    #[arg(long, value_name = "FILE")]
    pub node_file: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV; the JSON sidecar goes next to it.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Output-sequence CSV (its JSON sidecar is read when present).
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub rank_tolerance: Option<f64>,
    #[arg(long)]
    pub cluster_tol: Option<f64>,
    /// auto | on | off.
    #[arg(long)]
    pub prescale: Option<String>,
    /// Read samples only until the Hankel rank stops growing (discrete time).
    #[arg(long)]
    pub online: bool,
    /// Agent dynamics JSON; overrides the sidecar.
    #[arg(long, value_name = "FILE")]
    pub node_file: Option<PathBuf>,
    /// Write the JSON here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// Spectrum JSON written by `estimate`.
    #[arg(long, value_name = "FILE")]
    pub estimate: Option<PathBuf>,
    /// Output-sequence CSV or sidecar JSON providing `c` and `x0`.
    #[arg(long, value_name = "FILE")]
    pub setup: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// fig1 | fig2 | fig3.
    pub name: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Simulate `-G` (continuous-time ring only).
    #[arg(long)]
    pub negate: bool,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub rank_tolerance: Option<f64>,
    #[arg(long)]
    pub prescale: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// fig1 | fig2 | fig3 | all.
    #[arg(long, default_value = "all")]
    pub scenario: String,
    #[arg(long)]
    pub seeds: Option<u64>,
    /// First seed of the batch.
    #[arg(long)]
    pub start: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Print the table as JSON.
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cfg = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a, &cfg),
        Command::Simulate(a) => commands::simulate(a, &cfg),
        Command::Estimate(a) => commands::estimate(a, &cfg),
        Command::Verify(a) => commands::verify(a, &cfg),
        Command::Demo(a) => commands::demo(a, &cfg),
        Command::Bench(a) => commands::bench(a, &cfg),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
