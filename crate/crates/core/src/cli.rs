//! The `hardy` command line: `analyze`, `simulate`, `quantum` and `lhv`.
//!
//! Exit codes are a stable contract: 0 success, 1 usage error, 2 data or
//! validation error, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::empirics::{self, AnalysisOptions, EmpiricsError, Weight};
use crate::hna::{self, Constraint, ConstraintSet, Strategy};
use crate::quantum::{self, OptimizerConfig, QuantumError};
use crate::sim::{self, SimConfig, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    Data = 2,
    Numerical = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hardy",
    version,
    about = "Hardy's non-locality argument: classical bound, quantum optimum, call-center simulation and sales-table analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute q and its diagnostics from a daily sales table.
    Analyze(AnalyzeArgs),
    /// Run the call-center simulation and report the simulated q.
    Simulate(SimulateArgs),
    /// Maximize q over two-qubit states and measurement settings.
    Quantum(QuantumArgs),
    /// Local hidden-variable maximum of q under a set of zero constraints.
    Lhv(LhvArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum WeightArg {
    #[default]
    Amount,
    Count,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    input: PathBuf,
    /// Drop the days marked as interrupted before pooling.
    #[arg(long)]
    exclude_interrupted: bool,
    #[arg(long, value_enum, default_value_t)]
    weight: WeightArg,
    /// Number of bootstrap resamples for a percentile CI (at least 100).
    #[arg(long, value_name = "N")]
    bootstrap: Option<usize>,
    /// Confidence level of the bootstrap CI.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML file of simulation parameters; omitted keys take default values.
    config: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of days from the config file.
    #[arg(long)]
    days: Option<u32>,
    /// Write daily aggregates to this CSV file.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write the full event log to this CSV file.
    #[arg(long, value_name = "PATH")]
    events: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Args)]
struct QuantumArgs {
    #[arg(long, default_value_t = OptimizerConfig::default().restarts)]
    restarts: usize,
    /// Largest acceptable value of each constraint probability.
    #[arg(long, default_value_t = OptimizerConfig::default().constraint_tol)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pin the Schmidt angle of the state, in radians.
    #[arg(long, value_name = "THETA")]
    fix_theta: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Args)]
struct LhvArgs {
    /// Remove constraint 1, 2 or 3; repeatable.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    drop: Vec<u8>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

/// Runs the CLI on `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let informational =
                matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            return if informational {
                let _ = write!(out, "{rendered}");
                ExitStatus::Success
            } else {
                let _ = write!(err, "{rendered}");
                ExitStatus::Usage
            };
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => analyze(args, out),
        Command::Simulate(args) => simulate(args, out),
        Command::Quantum(args) => quantum_cmd(args, out),
        Command::Lhv(args) => lhv(args, out),
    };
    match result {
        Ok(()) => ExitStatus::Success,
        Err(Failure(status, message)) => {
            let _ = writeln!(err, "error: {message}");
            status
        }
    }
}

struct Failure(ExitStatus, String);

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure(ExitStatus::Usage, message.to_string())
    }

    fn data(message: impl ToString) -> Self {
        Failure(ExitStatus::Data, message.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(format!("cannot write output: {e}"))
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn emit_json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("report types serialize");
    writeln!(out, "{text}")?;
    Ok(())
}

fn analyze(args: AnalyzeArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let text = read_input(&args.input)?;
    let dataset = empirics::parse_table(&text).map_err(Failure::data)?;
    let options = AnalysisOptions {
        exclude_interrupted: args.exclude_interrupted,
        weight: match args.weight {
            WeightArg::Amount => Weight::Amount,
            WeightArg::Count => Weight::Count,
        },
        bootstrap: args.bootstrap,
        level: args.level,
        seed: args.seed,
    };
    let report = empirics::analyze(&dataset, &options).map_err(|e| match e {
        EmpiricsError::InvalidBootstrap => Failure::usage(e),
        other => Failure::data(other),
    })?;
    match args.format {
        Format::Json => emit_json(out, &report),
        Format::Text => Ok(write!(out, "{}", report.to_text())?),
    }
}

fn simulate(args: SimulateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => SimConfig::from_toml_str(&read_input(path)?).map_err(Failure::data)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(days) = args.days {
        if days == 0 {
            return Err(Failure::usage("--days must be positive"));
        }
        config.days = days;
    }
    let output = sim::run_simulation(&config).map_err(Failure::data)?;
    if let Some(path) = &args.out {
        write_file(path, &sim::aggregates_to_csv(&output.aggregates))?;
    }
    if let Some(path) = &args.events {
        write_file(path, &sim::events_to_csv(&output.events))?;
    }

    let q = match sim::simulated_q(&output.aggregates) {
        Ok(q) => Some(q),
        Err(SimError::NoSales) => None,
        Err(e) => return Err(Failure::data(e)),
    };
    let audit = sim::audit_structural_zeros(&output.events);
    let totals = output.aggregates.iter().fold([0u64; 4], |t, d| {
        [t[0] + d.responded, t[1] + d.abandoned, t[2] + d.absent_sales, t[3] + d.present_sales]
    });
    match args.format {
        Format::Json => emit_json(
            out,
            &json!({
                "seed": config.seed,
                "days": config.days,
                "simulated_q": q,
                "totals": {
                    "responded": totals[0],
                    "abandoned": totals[1],
                    "absent_sales": totals[2],
                    "present_sales": totals[3],
                },
                "audit": audit,
                "audit_clean": audit.is_clean(),
            }),
        ),
        Format::Text => {
            match q {
                Some(q) => writeln!(out, "simulated_q = {q:.6}")?,
                None => writeln!(out, "simulated_q undefined: no sales")?,
            }
            writeln!(out, "seed {}, {} days", config.seed, config.days)?;
            writeln!(
                out,
                "totals: responded {}, abandoned {}, absent sales {} Toman, present sales {} Toman",
                totals[0], totals[1], totals[2], totals[3]
            )?;
            writeln!(
                out,
                "forbidden patterns: answered after abandon {}, answered while absent {}, unanswered purchase {}",
                audit.answered_abandoned, audit.off_shift_answers, audit.unanswered_purchases
            )?;
            Ok(())
        }
    }
}

fn quantum_cmd(args: QuantumArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let opt = OptimizerConfig {
        restarts: args.restarts,
        constraint_tol: args.tol,
        seed: args.seed,
        fixed_theta: args.fix_theta,
        ..OptimizerConfig::default()
    };
    let best = quantum::maximize_q(&opt).map_err(|e| match e {
        QuantumError::NoFeasiblePoint { .. } => Failure(ExitStatus::Numerical, e.to_string()),
        other => Failure::usage(other),
    })?;
    match args.format {
        Format::Json => {
            let setting = |s: &quantum::MeasurementSetting| json!({ "polar": s.polar(), "azimuth": s.azimuth() });
            let c = &best.configuration;
            emit_json(
                out,
                &json!({
                    "q": best.q,
                    "residuals": { "p1": best.residuals[0], "p2": best.residuals[1], "p3": best.residuals[2] },
                    "theta": best.theta,
                    "angles": {
                        "a1": best.angles[0],
                        "a2": best.angles[1],
                        "b1": best.angles[2],
                        "b2": best.angles[3],
                    },
                    "settings": {
                        "a1": setting(&c.alice[0]),
                        "a2": setting(&c.alice[1]),
                        "b1": setting(&c.bob[0]),
                        "b2": setting(&c.bob[1]),
                    },
                    "restart": best.restart,
                    "penalty": best.penalty,
                    "seed": opt.seed,
                    "restarts": opt.restarts,
                }),
            )
        }
        Format::Text => Ok(write!(out, "{best}")?),
    }
}

fn strategy_json(s: &Strategy) -> Value {
    json!({ "a1": s.a1.value(), "a2": s.a2.value(), "b1": s.b1.value(), "b2": s.b2.value() })
}

fn lhv(args: LhvArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let constraints =
        args.drop.iter().filter_map(|&n| Constraint::from_number(n)).fold(ConstraintSet::all(), ConstraintSet::without);
    let bound = hna::lhv_max_q(constraints);
    let max_q = *bound.max_q.numer() as f64 / *bound.max_q.denom() as f64;
    match args.format {
        Format::Json => emit_json(
            out,
            &json!({
                "constraints": constraints.iter().map(|c| format!("C{}", c.number())).collect::<Vec<_>>(),
                "max_q": max_q,
                "max_q_exact": bound.max_q.to_string(),
                "admissible": bound.admissible.iter().map(strategy_json).collect::<Vec<_>>(),
                "achieving": bound.achieving.iter().map(strategy_json).collect::<Vec<_>>(),
            }),
        ),
        Format::Text => {
            writeln!(out, "max q = {}", bound.max_q)?;
            writeln!(out, "constraints: {constraints}")?;
            writeln!(out, "admissible strategies ({}):", bound.admissible.len())?;
            for s in &bound.admissible {
                let mark = if s.hits_target() { "  <- a2=+1, b2=+1" } else { "" };
                writeln!(out, "  {s}{mark}")?;
            }
            if bound.achieving.is_empty() {
                writeln!(out, "no admissible strategy reaches a2=+1, b2=+1")?;
            }
            Ok(())
        }
    }
}
