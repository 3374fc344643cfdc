//! Experiment driver behind the `crsp` binary: Monte Carlo runs, exact
//! verification and channel sweeps.
//!
//! Trial `i` of a run seeded with `s` draws from a ChaCha8 stream keyed by
//! `splitmix64(s ^ splitmix64(i))`, so a run is reproducible regardless of how
//! trials are scheduled across worker threads. Records are always emitted in
//! trial order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::{SingleTarget, Target, TwoTarget};
use crate::channel::ChannelParams;
use crate::error::{CrspError, Result};
use crate::oracle::{self, BranchReport, RowVerdict, EXACT_TOL};
use crate::protocol::{self, ProtocolId, RunOptions, TrialRecord, TrialStatus};

/// Amplitudes whose norm is this close to 1 are rescaled; anything further off is rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 1;
    pub const INVALID_INPUT: i32 = 2;
    pub const IO_ERROR: i32 = 3;
}

pub fn exit_code(err: &CrspError) -> i32 {
    match err {
        CrspError::Io(_) => exit::IO_ERROR,
        _ => exit::INVALID_INPUT,
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, index))
}

/// Target parameters as given by the user; which ones are required depends on the protocol.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi3: Option<f64>,
}

impl TargetParams {
    /// Fields set in `self` win over those in `base`.
    pub fn overlay(self, base: TargetParams) -> TargetParams {
        TargetParams {
            theta: self.theta.or(base.theta),
            phi: self.phi.or(base.phi),
            alpha: self.alpha.or(base.alpha),
            beta: self.beta.or(base.beta),
            delta: self.delta.or(base.delta),
            eta: self.eta.or(base.eta),
            phi1: self.phi1.or(base.phi1),
            phi2: self.phi2.or(base.phi2),
            phi3: self.phi3.or(base.phi3),
        }
    }
}

fn need(name: &str, v: Option<f64>, protocol: ProtocolId) -> Result<f64> {
    match v {
        Some(x) if x.is_finite() => Ok(x),
        Some(x) => Err(CrspError::InvalidConfig(format!(
            "--{name} = {x} is not finite"
        ))),
        None => Err(CrspError::InvalidConfig(format!(
            "{protocol} requires --{name}"
        ))),
    }
}

/// Phases are taken modulo 2pi.
fn phase(name: &str, v: Option<f64>, protocol: ProtocolId) -> Result<f64> {
    Ok(need(name, v, protocol)?.rem_euclid(std::f64::consts::TAU) % std::f64::consts::TAU)
}

fn amplitudes(p: &TargetParams, protocol: ProtocolId) -> Result<[f64; 4]> {
    let a = [
        need("alpha", p.alpha, protocol)?,
        need("beta", p.beta, protocol)?,
        need("delta", p.delta, protocol)?,
        need("eta", p.eta, protocol)?,
    ];
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > RENORMALIZE_TOL {
        return Err(CrspError::InvalidTarget(format!(
            "amplitude norm is {norm}, more than {RENORMALIZE_TOL:e} away from 1"
        )));
    }
    Ok(a.map(|x| x / norm))
}

pub fn build_target(protocol: ProtocolId, p: &TargetParams) -> Result<Target> {
    use ProtocolId::*;
    Ok(match protocol {
        SingleArbitrary => SingleTarget::arbitrary(
            need("theta", p.theta, protocol)?,
            phase("phi", p.phi, protocol)?,
        )?
        .into(),
        SingleAmplitude => SingleTarget::amplitude(need("theta", p.theta, protocol)?)?.into(),
        SinglePhase => SingleTarget::phase(phase("phi", p.phi, protocol)?)?.into(),
        TwoArbitrary => TwoTarget::arbitrary(
            amplitudes(p, protocol)?,
            [
                phase("phi1", p.phi1, protocol)?,
                phase("phi2", p.phi2, protocol)?,
                phase("phi3", p.phi3, protocol)?,
            ],
        )?
        .into(),
        TwoAmplitude => TwoTarget::amplitude(amplitudes(p, protocol)?)?.into(),
        TwoPhase => TwoTarget::phase([
            phase("phi1", p.phi1, protocol)?,
            phase("phi2", p.phi2, protocol)?,
            phase("phi3", p.phi3, protocol)?,
        ])?
        .into(),
    })
}

/// One channel per target qubit; the second defaults to the first.
pub fn build_channels(protocol: ProtocolId, b: f64, b2: Option<f64>) -> Result<Vec<ChannelParams>> {
    let first = ChannelParams::from_b(b)?;
    match protocol.num_channels() {
        1 => Ok(vec![first]),
        _ => Ok(vec![first, ChannelParams::from_b(b2.unwrap_or(b))?]),
    }
}

/// Run settings as they may appear in a JSON config file or on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub protocol: Option<ProtocolId>,
    #[serde(flatten)]
    pub target: TargetParams,
    pub b: Option<f64>,
    pub b2: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub cooperate: Option<bool>,
    pub sender_compact: Option<bool>,
    pub out: Option<PathBuf>,
}

impl PartialConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| CrspError::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn overlay(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            protocol: self.protocol.or(base.protocol),
            target: self.target.overlay(base.target),
            b: self.b.or(base.b),
            b2: self.b2.or(base.b2),
            trials: self.trials.or(base.trials),
            seed: self.seed.or(base.seed),
            cooperate: self.cooperate.or(base.cooperate),
            sender_compact: self.sender_compact.or(base.sender_compact),
            out: self.out.or(base.out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub protocol: ProtocolId,
    pub target_params: TargetParams,
    pub b: f64,
    pub b2: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    pub cooperate: bool,
    pub sender_compact: bool,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Resolves flags over file over `env_seed` over defaults
    /// (`b = 0`, `trials = 1000`, `seed = 0`, cooperative, full sender message).
    pub fn resolve(
        flags: PartialConfig,
        file: Option<PartialConfig>,
        env_seed: Option<u64>,
    ) -> Result<Self> {
        let c = flags.overlay(file.unwrap_or_default());
        let protocol = c
            .protocol
            .ok_or_else(|| CrspError::InvalidConfig("--protocol is required".into()))?;
        let cfg = RunConfig {
            protocol,
            target_params: c.target,
            b: c.b.unwrap_or(0.0),
            b2: c.b2,
            trials: c.trials.unwrap_or(1000),
            seed: c.seed.or(env_seed).unwrap_or(0),
            cooperate: c.cooperate.unwrap_or(true),
            sender_compact: c.sender_compact.unwrap_or(false),
            out: c.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CrspError::InvalidConfig("trials must be >= 1".into()));
        }
        self.target()?;
        self.channels()?;
        Ok(())
    }

    pub fn target(&self) -> Result<Target> {
        build_target(self.protocol, &self.target_params)
    }

    pub fn channels(&self) -> Result<Vec<ChannelParams>> {
        build_channels(self.protocol, self.b, self.b2)
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            cooperate: self.cooperate,
            sender_compact: self.sender_compact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub success_count: u64,
    pub failure_count: u64,
    pub blocked_count: u64,
    pub empirical_success_rate: f64,
    pub mean_success_fidelity: Option<f64>,
    pub oracle_success_probability: f64,
    pub sender_bits_total: u64,
    pub controller_bits_total: u64,
    /// Excluded from reproducibility guarantees.
    pub wall_time_s: f64,
}

/// Runs `trials` seeded trials in parallel and returns them in trial order.
pub fn run_trials(
    target: &Target,
    channels: &[ChannelParams],
    opts: RunOptions,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|i| protocol::run(target, channels, opts, &mut trial_rng(seed, i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tally {
    pub success: u64,
    pub failure: u64,
    pub blocked: u64,
    pub mean_success_fidelity: Option<f64>,
    pub sender_bits: u64,
    pub controller_bits: u64,
}

impl Tally {
    pub fn of(records: &[TrialRecord]) -> Self {
        let mut t = Tally::default();
        let mut fid_sum = 0.0;
        for r in records {
            match r.status {
                TrialStatus::Success => {
                    t.success += 1;
                    fid_sum += r.fidelity.unwrap_or(0.0);
                }
                TrialStatus::FailureUncorrectable => t.failure += 1,
                TrialStatus::BlockedByController => t.blocked += 1,
            }
            t.sender_bits += r.sender_bits as u64;
            t.controller_bits += r.controller_bits as u64;
        }
        t.mean_success_fidelity = (t.success > 0).then(|| fid_sum / t.success as f64);
        t
    }

    pub fn total(&self) -> u64 {
        self.success + self.failure + self.blocked
    }

    pub fn success_rate(&self) -> f64 {
        self.success as f64 / self.total().max(1) as f64
    }
}

/// Executes a run without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<(Vec<TrialRecord>, RunSummary)> {
    cfg.validate()?;
    let start = Instant::now();
    let target = cfg.target()?;
    let channels = cfg.channels()?;
    let records = run_trials(&target, &channels, cfg.options(), cfg.trials, cfg.seed)?;
    let oracle_p =
        oracle::success_probability(&oracle::enumerate(cfg.protocol, &target, &channels)?);
    let tally = Tally::of(&records);
    let summary = RunSummary {
        config: cfg.clone(),
        success_count: tally.success,
        failure_count: tally.failure,
        blocked_count: tally.blocked,
        empirical_success_rate: tally.success_rate(),
        mean_success_fidelity: tally.mean_success_fidelity,
        oracle_success_probability: oracle_p,
        sender_bits_total: tally.sender_bits,
        controller_bits_total: tally.controller_bits,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((records, summary))
}

#[derive(Serialize)]
struct TrialLine<'a> {
    trial: u64,
    #[serde(flatten)]
    record: &'a TrialRecord,
}

/// One JSON object per line, in trial order.
pub fn write_trials<W: Write>(records: &[TrialRecord], mut w: W) -> Result<()> {
    for (i, record) in records.iter().enumerate() {
        let line = serde_json::to_string(&TrialLine {
            trial: i as u64,
            record,
        })
        .map_err(|e| CrspError::Io(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// `execute`, then write trial records to `cfg.out` when set.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary> {
    let (records, summary) = execute(cfg)?;
    if let Some(path) = &cfg.out {
        write_trials(&records, BufWriter::new(File::create(path)?))?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub protocol: ProtocolId,
    pub target: Target,
    pub channels: Vec<ChannelParams>,
    pub success_probability: f64,
    pub claimed_probability: f64,
    pub probability_matches: bool,
    pub branches: Vec<BranchReport>,
    pub branch_total: f64,
    pub rows: Vec<RowVerdict>,
    pub rows_matched: usize,
    pub passed: bool,
}

pub fn cmd_verify(
    protocol: ProtocolId,
    target: &Target,
    channels: &[ChannelParams],
) -> Result<VerifyReport> {
    let branches = oracle::enumerate(protocol, target, channels)?;
    let rows = oracle::verify_table(protocol, target, channels)?;
    let p = oracle::success_probability(&branches);
    let claimed = protocol.claimed_success_probability();
    let total: f64 = branches.iter().map(|b| b.exact_prob).sum();
    let probability_matches = (p - claimed).abs() <= EXACT_TOL;
    let rows_matched = rows.iter().filter(|r| r.matches).count();
    let passed =
        probability_matches && rows_matched == rows.len() && (total - 1.0).abs() <= EXACT_TOL;
    Ok(VerifyReport {
        protocol,
        target: *target,
        channels: channels.to_vec(),
        success_probability: p,
        claimed_probability: claimed,
        probability_matches,
        branches,
        branch_total: total,
        rows,
        rows_matched,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub protocol: ProtocolId,
    pub target_params: TargetParams,
    pub b_grid: Vec<f64>,
    /// Fixed second channel; when absent both channels follow the grid.
    pub b2: Option<f64>,
    pub trials_per_point: u64,
    pub seed: u64,
}

/// `b = 0.1, 0.2, ..., 0.9`.
pub fn default_b_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub b: f64,
    pub oracle_success_probability: f64,
    pub empirical_success_rate: f64,
    pub mean_success_fidelity: Option<f64>,
}

pub fn cmd_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.trials_per_point == 0 {
        return Err(CrspError::InvalidConfig(
            "trials per point must be >= 1".into(),
        ));
    }
    if cfg.b_grid.is_empty() {
        return Err(CrspError::InvalidConfig("empty b grid".into()));
    }
    let target = build_target(cfg.protocol, &cfg.target_params)?;
    cfg.b_grid
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let channels = build_channels(cfg.protocol, b, cfg.b2)?;
            let oracle_p =
                oracle::success_probability(&oracle::enumerate(cfg.protocol, &target, &channels)?);
            let records = run_trials(
                &target,
                &channels,
                RunOptions::cooperative(),
                cfg.trials_per_point,
                trial_seed(cfg.seed, k as u64),
            )?;
            let tally = Tally::of(&records);
            Ok(SweepRow {
                b,
                oracle_success_probability: oracle_p,
                empirical_success_rate: tally.success_rate(),
                mean_success_fidelity: tally.mean_success_fidelity,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| CrspError::Io(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

/// `max - min` of the oracle column.
pub fn oracle_spread(rows: &[SweepRow]) -> f64 {
    let it = rows.iter().map(|r| r.oracle_success_probability);
    let max = it.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = it.fold(f64::INFINITY, f64::min);
    max - min
}
