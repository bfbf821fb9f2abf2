//! `qsd-chaos`: simulate a quantum Duffing oscillator and diagnose chaos.
//!
//! Thin argument layer over [`qsd_chaos::pipeline`]; all behavior lives in
//! the library. Exit codes: 0 ok, 2 config error, 3 numeric instability,
//! 4 truncation, 5 analysis degeneracy.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qsd_chaos::pipeline::{
    resolve_sweep, run_analyze, run_report, run_simulate, run_sweep, AnalyzeConfig,
    AnalyzeMethod, ResolvedSimulate, ResolvedSweep, RunManifest, SimulateConfig, SweepConfig,
    WORKERS_ENV,
};
use qsd_chaos::{Error, Result};

#[derive(Parser)]
#[command(
    name = "qsd-chaos",
    version,
    about = "Quantum-state-diffusion Duffing simulation and chaos diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one QSD trajectory; write series.csv, sidecar and manifest.
    Simulate(SimulateArgs),
    /// Run one diagnostic (lyap | psd | poincare) on a series CSV.
    Analyze(AnalyzeArgs),
    /// Simulate + all three diagnostics over a (Gamma, beta) grid.
    Sweep(SweepArgs),
    /// Three-method concordance report over a completed sweep.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config file; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run the fully resolved config of a previous manifest.
    #[arg(long, conflicts_with = "config")]
    from_manifest: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    n_basis: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    periods: Option<f64>,
    #[arg(long)]
    transient_periods: Option<f64>,
    #[arg(long)]
    samples_per_period: Option<usize>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    p0: Option<f64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Series CSV (t,x,p) to analyze.
    #[arg(long, required_unless_present = "from_manifest")]
    input: Option<PathBuf>,
    /// lyap | psd | poincare.
    #[arg(long, default_value = "lyap")]
    method: String,
    #[arg(long, conflicts_with = "input")]
    from_manifest: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Embedding delay in samples (default: first mutual-information dip).
    #[arg(long)]
    tau: Option<usize>,
    /// Embedding dimensions, e.g. "2,3,4,5,6,7".
    #[arg(long)]
    m_list: Option<String>,
    /// Neighborhood radii, e.g. "0.01,0.02,0.05".
    #[arg(long)]
    epsilons: Option<String>,
    /// Divergence horizon in samples.
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    fit_from: Option<usize>,
    #[arg(long)]
    fit_to: Option<usize>,
    /// Welch segment length in samples.
    #[arg(long)]
    segment_len: Option<usize>,
    /// Section occupancy grid resolution.
    #[arg(long)]
    grid_cells: Option<usize>,
    /// Section clustering radius.
    #[arg(long)]
    r_cluster: Option<f64>,
    /// Drive period (default: the input's JSON sidecar).
    #[arg(long)]
    period: Option<f64>,
    /// Strobe offset in time units from the start of the series.
    #[arg(long)]
    phase: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config: {"grid": [[gamma, beta], ...], ...shared params}.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "config")]
    from_manifest: Option<PathBuf>,
    /// Grid override, e.g. "0.125:0.01,0.3:1.0".
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides the env var).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    periods: Option<f64>,
    #[arg(long)]
    transient_periods: Option<f64>,
    #[arg(long)]
    samples_per_period: Option<usize>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    p0: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory written by `sweep`.
    #[arg(long)]
    sweep_dir: PathBuf,
    /// Defaults to the sweep directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn read_config(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn manifest_config<T: serde::de::DeserializeOwned>(path: &PathBuf, command: &str) -> Result<T> {
    let manifest = RunManifest::read(path)?;
    if manifest.command != command {
        return Err(Error::Config(format!(
            "manifest {} records a {:?} run, not {command:?}",
            path.display(),
            manifest.command
        )));
    }
    serde_json::from_value(manifest.config)
        .map_err(|e| Error::Config(format!("manifest config: {e}")))
}

fn out_dir(arg: Option<PathBuf>) -> PathBuf {
    arg.unwrap_or_else(|| PathBuf::from("."))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let resolved: ResolvedSimulate = if let Some(path) = &args.from_manifest {
        manifest_config(path, "simulate")?
    } else {
        let base = match &args.config {
            Some(path) => SimulateConfig::from_json(&read_config(path)?)?,
            None => SimulateConfig::default(),
        };
        let flags = SimulateConfig {
            gamma: args.gamma,
            beta: args.beta,
            g: args.g,
            omega: args.omega,
            n_basis: args.n_basis,
            dt: args.dt,
            periods: args.periods,
            transient_periods: args.transient_periods,
            samples_per_period: args.samples_per_period,
            x0: args.x0,
            p0: args.p0,
            seed: args.seed,
            stream: args.stream,
        };
        base.overlaid(&flags).resolve()?
    };
    let outcome = run_simulate(&resolved, &out_dir(args.out_dir))?;
    println!(
        "wrote {} (N = {})",
        outcome.series_path.display(),
        outcome.n_final
    );
    println!("manifest: {}", outcome.manifest_path.display());
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|e| Error::Config(format!("bad {what} entry {part:?}: {e}")))
        })
        .collect()
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let cfg: AnalyzeConfig = if let Some(path) = &args.from_manifest {
        let manifest = RunManifest::read(path)?;
        if manifest.command != "analyze" {
            return Err(Error::Config(format!(
                "manifest {} records a {:?} run, not \"analyze\"",
                path.display(),
                manifest.command
            )));
        }
        serde_json::from_value(manifest.config)
            .map_err(|e| Error::Config(format!("manifest config: {e}")))?
    } else {
        AnalyzeConfig {
            input: args.input.expect("clap enforces --input"),
            method: args.method.parse::<AnalyzeMethod>()?,
            tau: args.tau,
            m_list: args.m_list.as_deref().map(|s| parse_list(s, "m")).transpose()?,
            epsilons: args
                .epsilons
                .as_deref()
                .map(|s| parse_list(s, "epsilon"))
                .transpose()?,
            t_max: args.t_max,
            fit_from: args.fit_from,
            fit_to: args.fit_to,
            segment_len: args.segment_len,
            grid_cells: args.grid_cells,
            r_cluster: args.r_cluster,
            period: args.period,
            phase: args.phase,
        }
    };
    let outcome = run_analyze(&cfg, &out_dir(args.out_dir))?;
    for path in &outcome.outputs {
        println!("wrote {}", path.display());
    }
    println!("manifest: {}", outcome.manifest_path.display());
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(|pair| {
            let (g, b) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("grid entry {pair:?} is not gamma:beta")))?;
            let gamma: f64 = g
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("bad gamma {g:?}: {e}")))?;
            let beta: f64 = b
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("bad beta {b:?}: {e}")))?;
            Ok((gamma, beta))
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let resolved: ResolvedSweep = if let Some(path) = &args.from_manifest {
        manifest_config(path, "sweep")?
    } else {
        let mut cfg = match &args.config {
            Some(path) => SweepConfig::from_json(&read_config(path)?)?,
            None => SweepConfig::default(),
        };
        if let Some(grid) = &args.grid {
            cfg.grid = Some(parse_grid(grid)?);
        }
        let flags = SimulateConfig {
            g: args.g,
            omega: args.omega,
            periods: args.periods,
            transient_periods: args.transient_periods,
            samples_per_period: args.samples_per_period,
            x0: args.x0,
            p0: args.p0,
            seed: args.seed,
            ..Default::default()
        };
        cfg.shared = cfg.shared.overlaid(&flags);
        resolve_sweep(&cfg)?
    };
    eprintln!(
        "sweep: {} cases, {} workers ({}={} honored)",
        resolved.grid.len(),
        args.workers
            .map_or_else(qsd_chaos::pipeline::worker_count, |w| w),
        WORKERS_ENV,
        std::env::var(WORKERS_ENV).unwrap_or_else(|_| "unset".into()),
    );
    let outcome = run_sweep(&resolved, &out_dir(args.out_dir), args.workers)?;
    for case in &outcome.cases {
        println!(
            "gamma = {}, beta = {}: {}",
            case.gamma, case.beta, case.status
        );
    }
    println!("wrote {}", outcome.summary_path.display());
    println!("wrote {}", outcome.svg_path.display());
    println!("manifest: {}", outcome.manifest_path.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let out = args.out_dir.unwrap_or_else(|| args.sweep_dir.clone());
    let outcome = run_report(&args.sweep_dir, &out)?;
    print!("{}", outcome.table);
    println!("wrote {}", outcome.report_path.display());
    Ok(())
}
