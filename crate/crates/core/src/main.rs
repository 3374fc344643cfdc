use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crsp::harness::{
    self, cmd_run, cmd_sweep, cmd_verify, default_b_grid, exit, PartialConfig, RunConfig,
    SweepConfig, TargetParams,
};
use crsp::{CrspError, ProtocolId, Result};

#[derive(Parser)]
#[command(
    name = "crsp",
    version,
    about = "Controlled remote state preparation over maximal-slice channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo trials; summary JSON on stdout, trial records as JSON lines to --out.
    Run(RunArgs),
    /// Exact branch enumeration and correction-table check; exits 1 on any mismatch.
    Verify(CommonArgs),
    /// Oracle probability and empirical rate over a grid of channel b values, as CSV.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// single_arbitrary | single_amplitude | single_phase | two_arbitrary | two_amplitude | two_phase
    #[arg(long, value_parser = parse_protocol)]
    protocol: Option<ProtocolId>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi3: Option<f64>,
    /// Channel coefficient b (a = sqrt(1 - b^2)).
    #[arg(long)]
    b: Option<f64>,
    /// Second channel for two-qubit protocols; defaults to --b.
    #[arg(long)]
    b2: Option<f64>,
    /// JSON file with any of the above (and run settings); flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed; falls back to $CRSP_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Charlie withholds his outcome in every trial.
    #[arg(long)]
    no_cooperate: bool,
    /// Alice sends a 1-bit yes/no (two_arbitrary only).
    #[arg(long)]
    compact_sender: bool,
    /// JSON-lines file for per-trial records.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the summary JSON here.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated b values; default 0.1,0.2,...,0.9.
    #[arg(long, value_delimiter = ',')]
    b_grid: Option<Vec<f64>>,
    /// Trials per grid point.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_protocol(s: &str) -> std::result::Result<ProtocolId, String> {
    s.parse().map_err(|e: CrspError| e.to_string())
}

impl CommonArgs {
    fn partial(&self) -> PartialConfig {
        PartialConfig {
            protocol: self.protocol,
            target: TargetParams {
                theta: self.theta,
                phi: self.phi,
                alpha: self.alpha,
                beta: self.beta,
                delta: self.delta,
                eta: self.eta,
                phi1: self.phi1,
                phi2: self.phi2,
                phi3: self.phi3,
            },
            b: self.b,
            b2: self.b2,
            ..Default::default()
        }
    }

    fn file(&self) -> Result<Option<PartialConfig>> {
        self.config
            .as_deref()
            .map(PartialConfig::from_json_file)
            .transpose()
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("CRSP_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CrspError::InvalidConfig(format!("CRSP_SEED = '{s}' is not a u64"))),
        Err(_) => Ok(None),
    }
}

fn print_json<T: serde::Serialize>(value: &T, path: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CrspError::Io(e.to_string()))?;
    if let Some(p) = path {
        std::fs::write(p, format!("{text}\n"))?;
    }
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{text}")?;
    Ok(())
}

fn run(args: RunArgs) -> Result<i32> {
    let flags = PartialConfig {
        trials: args.trials,
        seed: args.seed,
        cooperate: args.no_cooperate.then_some(false),
        sender_compact: args.compact_sender.then_some(true),
        out: args.out.clone(),
        ..args.common.partial()
    };
    let cfg = RunConfig::resolve(flags, args.common.file()?, env_seed()?)?;
    let summary = cmd_run(&cfg)?;
    print_json(&summary, args.summary_out.as_ref())?;
    Ok(exit::OK)
}

fn verify(args: CommonArgs) -> Result<i32> {
    let c = args.partial().overlay(args.file()?.unwrap_or_default());
    let protocol = c
        .protocol
        .ok_or_else(|| CrspError::InvalidConfig("--protocol is required".into()))?;
    let target = harness::build_target(protocol, &c.target)?;
    let channels = harness::build_channels(protocol, c.b.unwrap_or(0.0), c.b2)?;
    let report = cmd_verify(protocol, &target, &channels)?;
    print_json(&report, None)?;
    eprintln!(
        "{protocol}: success probability {} (claimed {}), {}/{} table rows reproduce the target",
        report.success_probability,
        report.claimed_probability,
        report.rows_matched,
        report.rows.len()
    );
    Ok(if report.passed {
        exit::OK
    } else {
        exit::VERIFICATION_FAILED
    })
}

fn sweep(args: SweepArgs) -> Result<i32> {
    let file = args.common.file()?.unwrap_or_default();
    let c = args.common.partial().overlay(file);
    let protocol = c
        .protocol
        .ok_or_else(|| CrspError::InvalidConfig("--protocol is required".into()))?;
    let cfg = SweepConfig {
        protocol,
        target_params: c.target,
        b_grid: args.b_grid.unwrap_or_else(default_b_grid),
        b2: c.b2,
        trials_per_point: args.trials,
        seed: args.seed.or(c.seed).or(env_seed()?).unwrap_or(0),
    };
    let rows = cmd_sweep(&cfg)?;
    match &args.out {
        Some(p) => harness::write_sweep_csv(&rows, BufWriter::new(File::create(p)?))?,
        None => harness::write_sweep_csv(&rows, io::stdout().lock())?,
    }
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
