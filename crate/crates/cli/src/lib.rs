//! Command implementations behind the `macsim` binary.
//!
//! Every command writes its normal output to `out`, diagnostics to `err`,
//! and returns the process exit code: 0 success, 1 bound violation or
//! rejected trace, 2 usage or configuration error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use macsim::adversary::{
    check_admissible, check_admissible_individual, parse_trace, Admissibility, AdversaryType,
    StrategyKind,
};
use macsim::algo::Algorithm;
use macsim::bounds::{
    verify_bounds_with, StationFactory, Theorem, VerifyReport, VerifyRequest, DEFAULT_HORIZON,
};
use macsim::config::{
    parse_pairs, render_csv, render_stages_csv, run_sweep, ExperimentConfig, Preset, SummaryRow,
    SweepGrid,
};
use macsim::Fixed;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Environment variable consulted when no seed is given.
pub const SEED_ENV: &str = "MACSIM_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "macsim",
    version,
    about = "Adversarial multiple-access channel simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one execution until its stage verdict and print a summary row.
    Run(RunArgs),
    /// Run a grid of executions and print one summary row per cell.
    Sweep(SweepArgs),
    /// Check measured queues and delays against a closed-form bound.
    VerifyBounds(VerifyArgs),
    /// Check an injection trace against a leaky-bucket type.
    CheckAdversary(CheckArgs),
}

/// Experiment fields shared by `run` and `sweep`; flags override `--config`.
#[derive(Args, Debug, Default)]
pub struct ExperimentArgs {
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub collision_detection: bool,
    /// Defaults to $MACSIM_SEED, then 0.
    #[arg(long)]
    pub seed: Option<String>,
    /// Marked packets per stage.
    #[arg(long)]
    pub stage_size: Option<String>,
    #[arg(long)]
    pub max_stages: Option<String>,
    #[arg(long)]
    pub max_rounds: Option<String>,
    /// randomized | randomized-individual | <strategy> | trace:<path>
    #[arg(long)]
    pub adversary: Option<String>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub rho: Option<String>,
    #[command(flatten)]
    pub common: ExperimentArgs,
    /// Also write the per-stage averages as CSV.
    #[arg(long)]
    pub stages: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// fig1 | fig2 | fig3 | fig4
    #[arg(long)]
    pub preset: Option<String>,
    /// Comma-separated algorithm names (ignored with --preset).
    #[arg(long)]
    pub algorithms: Option<String>,
    /// Comma-separated injection rates (ignored with --preset).
    #[arg(long)]
    pub rhos: Option<String>,
    /// Comma-separated station counts (ignored with --preset).
    #[arg(long = "ns")]
    pub ns: Option<String>,
    /// Seeds per cell, counted up from the base seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub common: ExperimentArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub theorem: String,
    /// Defaults to the theorem's algorithm.
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub rho: String,
    #[arg(long, default_value = "10")]
    pub beta: String,
    /// Number of seeds, counted up from the base seed.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scripted pattern; defaults to the theorem's.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: u64,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub rho: String,
    #[arg(long)]
    pub beta: String,
    /// Comma-separated per-station rates; their sum replaces --rho.
    #[arg(long)]
    pub individual: Option<String>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            code
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::VerifyBounds(a) => {
            let alg = match a.algorithm.as_deref().map(str::parse::<Algorithm>) {
                Some(Ok(alg)) => alg,
                Some(Err(e)) => return usage(err, &anyhow::Error::new(e)),
                None => match a.theorem.parse::<Theorem>() {
                    Ok(t) => t.algorithm(),
                    Err(e) => return usage(err, &anyhow::Error::new(e)),
                },
            };
            cmd_verify_bounds(&a, &move |n, seed| alg.stations(n, seed), out)
        }
        Command::CheckAdversary(a) => cmd_check_adversary(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => usage(err, &e),
    }
}

fn usage(err: &mut dyn Write, e: &anyhow::Error) -> u8 {
    let _ = writeln!(err, "error: {e:#}");
    EXIT_USAGE
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => out.write_all(text.as_bytes()).context("writing output"),
    }
}

fn seed_from_env() -> anyhow::Result<Option<String>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => Ok(Some(v)),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{SEED_ENV}: {e}"),
    }
}

/// Config-file pairs, then `head` pairs, then flag overrides; the seed falls
/// back to `env_seed` (`$MACSIM_SEED`) when neither file nor flag sets it.
fn build_config(
    common: &ExperimentArgs,
    head: Vec<(String, String)>,
    env_seed: Option<String>,
) -> anyhow::Result<ExperimentConfig> {
    let mut pairs = match &common.config {
        Some(p) => parse_pairs(&read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => Vec::new(),
    };
    pairs.extend(head);
    let mut set = |key: &str, v: &Option<String>| {
        if let Some(v) = v {
            pairs.push((key.to_string(), v.clone()));
        }
    };
    set("beta", &common.beta);
    set("seed", &common.seed);
    set("stage_size", &common.stage_size);
    set("max_stages", &common.max_stages);
    set("max_rounds", &common.max_rounds);
    set("adversary", &common.adversary);
    if common.collision_detection {
        pairs.push(("collision_detection".into(), "true".into()));
    }
    if let Some(p) = &common.output {
        pairs.push(("output".into(), p.display().to_string()));
    }
    if !pairs.iter().any(|(k, _)| k == "seed") {
        if let Some(s) = env_seed {
            pairs.push(("seed".into(), s));
        }
    }
    Ok(ExperimentConfig::from_pairs(&pairs)?)
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> anyhow::Result<u8> {
    let mut head = Vec::new();
    for (key, v) in [
        ("algorithm", &args.algorithm),
        ("n", &args.n),
        ("rho", &args.rho),
    ] {
        if let Some(v) = v {
            head.push((key.to_string(), v.clone()));
        }
    }
    let config = build_config(&args.common, head, seed_from_env()?)?;
    let report = config.run()?;
    let csv = render_csv(&[SummaryRow::new(&config, &Ok(report.clone()))]);
    emit(config.output.as_deref(), &csv, out)?;
    if let Some(path) = &args.stages {
        emit(Some(path), &render_stages_csv(&report), out)?;
    }
    Ok(EXIT_OK)
}

fn split_list<T: std::str::FromStr>(what: &str, raw: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .with_context(|| format!("invalid {what} {s:?}"))
        })
        .collect()
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> anyhow::Result<u8> {
    // Placeholders; every cell overrides algorithm, n and rho.
    let head = vec![
        ("algorithm".to_string(), Algorithm::Rrw.to_string()),
        ("n".to_string(), "1".to_string()),
        ("rho".to_string(), "1".to_string()),
    ];
    let base = build_config(&args.common, head, seed_from_env()?)?;
    let seeds: Vec<u64> = (0..args.seeds).map(|i| base.seed.wrapping_add(i)).collect();
    let grid = match &args.preset {
        Some(p) => SweepGrid::preset(p.parse::<Preset>()?, seeds),
        None => SweepGrid {
            algorithms: split_list("algorithm", args.algorithms.as_deref().unwrap_or(""))?,
            ns: split_list("n", args.ns.as_deref().unwrap_or(""))?,
            rhos: split_list::<Fixed>("rho", args.rhos.as_deref().unwrap_or(""))?,
            seeds,
        },
    };
    let csv = run_sweep(&grid.cells(&base), args.jobs);
    emit(base.output.as_deref(), &csv, out)?;
    Ok(EXIT_OK)
}

/// Runs the verification with automata from `stations`, which lets tests
/// check the failure path with deliberately broken stations.
pub fn cmd_verify_bounds(
    args: &VerifyArgs,
    stations: StationFactory<'_>,
    out: &mut dyn Write,
) -> anyhow::Result<u8> {
    let theorem: Theorem = args.theorem.parse()?;
    let rho: Fixed = args.rho.parse()?;
    let beta: Fixed = args.beta.parse()?;
    let mut request =
        VerifyRequest::new(theorem, args.n, AdversaryType::new(rho, beta)?, Vec::new());
    if let Some(a) = &args.algorithm {
        request.algorithm = a.parse()?;
    }
    let base = match args.seed {
        Some(s) => s,
        None => seed_from_env()?
            .map(|s| s.parse::<u64>())
            .transpose()
            .context(SEED_ENV)?
            .unwrap_or(0),
    };
    request.seeds = (0..args.seeds).map(|i| base.wrapping_add(i)).collect();
    request.strategy = args
        .strategy
        .as_deref()
        .map(str::parse::<StrategyKind>)
        .transpose()?;
    request.horizon = args.horizon;
    let report = verify_bounds_with(&request, stations)?;
    out.write_all(render_report(&report).as_bytes())?;
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    })
}

pub fn render_report(report: &VerifyReport) -> String {
    let queue_bound = report
        .bounds
        .queue
        .map(|q| format!("{q:.6}"))
        .unwrap_or_else(|| "-".into());
    let mut s = format!(
        "theorem {}: queue bound {queue_bound}, latency bound {:.6}\n",
        report.theorem, report.bounds.latency
    );
    s.push_str("seed,adversary,max_queue,max_queue_round,max_delay,max_delay_round,pass\n");
    for m in &report.measurements {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            m.seed,
            m.adversary,
            m.max_queue,
            m.max_queue_round,
            m.max_delay,
            m.max_delay_round,
            m.passed()
        ));
    }
    for m in report.violations() {
        if !m.queue_ok {
            s.push_str(&format!(
                "violation: seed {} ({}) queue {} at round {}\n",
                m.seed, m.adversary, m.max_queue, m.max_queue_round
            ));
        }
        if !m.latency_ok {
            s.push_str(&format!(
                "violation: seed {} ({}) delay {} at round {}\n",
                m.seed, m.adversary, m.max_delay, m.max_delay_round
            ));
        }
    }
    s.push_str(if report.passed() { "PASS\n" } else { "FAIL\n" });
    s
}

pub fn cmd_check_adversary(args: &CheckArgs, out: &mut dyn Write) -> anyhow::Result<u8> {
    let trace =
        parse_trace(&read(&args.trace)?).with_context(|| format!("in {}", args.trace.display()))?;
    let beta: Fixed = args.beta.parse()?;
    let verdict = match &args.individual {
        Some(raw) => {
            let rates: Vec<Fixed> = split_list("rate", raw)?;
            if rates.is_empty() {
                bail!("--individual needs at least one rate");
            }
            check_admissible_individual(&trace.per_station(rates.len())?, &rates, beta)
        }
        None => check_admissible(&trace.totals(), args.rho.parse()?, beta),
    };
    match verdict {
        Admissibility::Accept => {
            writeln!(out, "admissible")?;
            Ok(EXIT_OK)
        }
        Admissibility::Reject {
            station,
            start,
            end,
        } => {
            match station {
                Some(s) => writeln!(out, "not admissible: station {s} interval [{start},{end}]")?,
                None => writeln!(out, "not admissible: interval [{start},{end}]")?,
            }
            Ok(EXIT_VIOLATION)
        }
    }
}
