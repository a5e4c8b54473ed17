use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dfpp::experiment::{
    exit_code, run_blackface, run_geodesic_dump, run_simulate, run_tunnel_demo, BlackfaceParams, DumpOutcome,
    DumpParams, ExperimentConfig, Threads, TunnelParams,
};
use dfpp::proofcheck::FaceSpec;
use dfpp::stats::{DEFAULT_WINDOW_EXPONENT, DEFAULT_WINDOW_FACTOR};
use dfpp::Result;

#[derive(Parser)]
#[command(name = "dfpp", version, about = "Directed first passage percolation on layered Poisson clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo grid over (alpha, n).
    Simulate(SimulateArgs),
    /// Compute one geodesic and write its path dump.
    Geodesic(GeodesicArgs),
    /// Estimate black-face probabilities over a sweep of c1.
    Blackface(BlackfaceArgs),
    /// Build a tunneling tube and check the forced jump.
    Tunnel(TunnelArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML config file. DFPP_OUT and DFPP_THREADS override it; flags
    /// override both.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window_factor: Option<f64>,
    #[arg(long)]
    jump_cap: Option<f64>,
    #[arg(long)]
    threads: Option<Threads>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GeodesicArgs {
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    jump_cap: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_FACTOR)]
    window_factor: f64,
    /// Use this JSON-lines environment instead of sampling one.
    #[arg(long)]
    env: Option<PathBuf>,
    /// Output file (standard output if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BlackfaceArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 16.0)]
    log_n: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.1,1")]
    c1: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 0.01)]
    grid_step: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TunnelArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 40.0)]
    log_n: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    c1: f64,
    /// Per-step drift, comma separated; its length sets the dimension.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    drift: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    max_drift: f64,
    #[arg(long)]
    no_background: bool,
    #[arg(long)]
    contaminate: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn simulate(args: SimulateArgs) -> Result<i32> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    config.apply_env(|k| std::env::var(k).ok())?;
    if let Some(v) = args.alpha {
        config.alphas = v;
    }
    if let Some(v) = args.n {
        config.ns = v;
    }
    if let Some(v) = args.samples {
        config.samples_per_cell = v;
    }
    if let Some(v) = args.seed {
        config.master_seed = v;
    }
    if let Some(v) = args.dim {
        config.d = v;
    }
    if let Some(v) = args.window_factor {
        config.window_factor = v;
    }
    if args.jump_cap.is_some() {
        config.jump_cap = args.jump_cap;
    }
    if let Some(v) = args.threads {
        config.threads = v;
    }
    if let Some(v) = args.out {
        config.output_dir = v;
    }
    let manifest = run_simulate(&config)?;
    if manifest.is_complete() {
        Ok(0)
    } else {
        eprintln!("failed cells: {}", manifest.failed_cells.join(", "));
        Ok(4)
    }
}

fn geodesic(args: GeodesicArgs) -> Result<i32> {
    let params = DumpParams {
        alpha: args.alpha,
        n: args.n,
        d: args.dim,
        seed: args.seed,
        jump_cap: args.jump_cap,
        window_factor: args.window_factor,
        window_exponent: DEFAULT_WINDOW_EXPONENT,
        env: args.env,
    };
    let mut buf = Vec::new();
    let outcome = run_geodesic_dump(&params, &mut buf)?;
    match outcome {
        DumpOutcome::Unreachable => {
            eprintln!("no admissible path");
            Ok(3)
        }
        DumpOutcome::Written { steps, passage_time, max_jump } => {
            match &args.out {
                Some(path) => std::fs::write(path, &buf)?,
                None => std::io::stdout().lock().write_all(&buf)?,
            }
            eprintln!("{steps} steps, T = {passage_time}, max jump = {max_jump}");
            Ok(0)
        }
    }
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&PathBuf>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn blackface(args: BlackfaceArgs) -> Result<i32> {
    let params = BlackfaceParams {
        face: FaceSpec {
            log_n: args.log_n,
            k: 0,
            x: vec![0; args.dim],
            beta: args.beta,
            c1: args.c1.first().copied().unwrap_or(1.0),
            m: args.m,
            alpha: args.alpha,
            grid_step: args.grid_step,
        },
        c1s: args.c1,
        trials: args.trials,
        seed: args.seed,
    };
    let report = run_blackface(&params)?;
    emit_json(&report, args.out.as_ref())?;
    Ok(0)
}

fn tunnel(args: TunnelArgs) -> Result<i32> {
    let params = TunnelParams {
        log_n: args.log_n,
        beta: args.beta,
        epsilon: args.epsilon,
        c1: args.c1,
        alpha: args.alpha,
        drift: args.drift,
        max_drift: args.max_drift,
        anchor_time: 1,
        background: !args.no_background,
        contaminate: args.contaminate,
        seed: args.seed,
        out_dir: args.out,
    };
    let report = run_tunnel_demo(&params)?;
    emit_json(&report, None)?;
    Ok(if report.reached { 0 } else { 3 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Geodesic(a) => geodesic(a),
        Command::Blackface(a) => blackface(a),
        Command::Tunnel(a) => tunnel(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
