//! Command-line front end: `trace`, `sweep`, `phase-diagram`, `labframe`, `selfcheck`.
//!
//! Exit codes: 0 ok, 1 other failure, 2 invalid configuration, 3 gapless point,
//! 4 phase-unwrap jump, 5 rotating-wave guard.

mod commands;
pub mod config;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use commands::{selfcheck, CheckOutcome};
pub use config::{AxisName, Format, GridAxis, RunConfig, ScheduleKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GAPLESS: i32 = 3;
pub const EXIT_UNWRAP: i32 = 4;
pub const EXIT_RWA: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Model(e) => model_exit_code(e),
            CliError::Io(_) | CliError::Failed(_) => EXIT_FAILURE,
        }
    }
}

pub fn model_exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_)
        | Error::InvalidSchedule(_)
        | Error::InvalidGrid(_)
        | Error::InvalidCavityConfig(_)
        | Error::OutOfRange { .. } => EXIT_CONFIG,
        Error::GaplessPoint { .. } => EXIT_GAPLESS,
        Error::UnwrapJump { .. } => EXIT_UNWRAP,
        Error::RwaViolated { .. } => EXIT_RWA,
        Error::NonHermitianGenerator { .. } | Error::DegenerateComponent { .. } | Error::TraceMismatch(_) => {
            EXIT_FAILURE
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "zakbench", version, about = "Two-path Zak-phase interferometry for SSH-type chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the mirror pair once and write trace.csv and summary.json.
    Trace(Flags),
    /// Final phase, fidelity and winding over a parameter grid (sweep.csv).
    Sweep(Flags),
    /// Winding number over (v/w, J/w) (phase_diagram.csv).
    PhaseDiagram(Flags),
    /// Carrier-frequency cavity emulation vs rotating frame (labtrace.csv).
    Labframe(Flags),
    /// Run the built-in invariant suite.
    Selfcheck,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Trace(_) => "trace",
            Command::Sweep(_) => "sweep",
            Command::PhaseDiagram(_) => "phase-diagram",
            Command::Labframe(_) => "labframe",
            Command::Selfcheck => "selfcheck",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Intra-cell coupling, in units of g0.
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<f64>,
    /// Next-nearest-neighbour coupling.
    #[arg(long = "J", allow_hyphen_values = true)]
    pub j: Option<f64>,
    /// g0·T for rotating-frame runs; seconds for `labframe`.
    #[arg(long = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleKind>,
    /// Brillouin-zone samples for invariants.
    #[arg(long)]
    pub bz_samples: Option<usize>,
    #[arg(long = "g0-hz")]
    pub g0_hz: Option<f64>,
    #[arg(long = "f0-hz")]
    pub f0_hz: Option<f64>,
    /// Cavity damping, 1/s.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub sample_rate: Option<f64>,
    /// `axis:min:max:n` or `axis:v1,v2,...`; repeat for more axes.
    #[arg(long)]
    pub grid: Vec<String>,
    /// Also write raw cavity signals (labframe).
    #[arg(long)]
    pub export_raw: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Sectioned `key = value` run file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn resolve(command: &str, flags: &Flags) -> Result<RunConfig, CliError> {
    let mut cfg = match &flags.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(expected) = &cfg.command {
        if expected != command {
            return Err(CliError::Config(format!("config is for '{expected}', not '{command}'")));
        }
    }
    cfg.overlay(flags, command == "labframe")?;
    Ok(cfg)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var("ZAKBENCH_THREADS") {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("ZAKBENCH_THREADS must be a positive integer, got '{value}'")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Failed(format!("thread pool: {e}")))
}

/// Runs one parsed command, writing progress lines to `log`.
pub fn execute(command: &Command, log: &mut (dyn Write + Send)) -> Result<i32, CliError> {
    if let Command::Selfcheck = command {
        let outcomes = selfcheck();
        let mut ok = true;
        for c in &outcomes {
            writeln!(log, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            ok &= c.passed;
        }
        return Ok(if ok { EXIT_OK } else { EXIT_FAILURE });
    }
    let flags = match command {
        Command::Trace(f) | Command::Sweep(f) | Command::PhaseDiagram(f) | Command::Labframe(f) => f,
        Command::Selfcheck => unreachable!(),
    };
    let cfg = resolve(command.name(), flags)?;
    let pool = thread_pool()?;
    pool.install(|| match command {
        Command::Trace(_) => commands::trace(&cfg, log),
        Command::Sweep(_) => commands::sweep(&cfg, log),
        Command::PhaseDiagram(_) => commands::phase_diagram(&cfg, log),
        Command::Labframe(_) => commands::labframe(&cfg, log),
        Command::Selfcheck => unreachable!(),
    })
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let mut stdout = std::io::stdout();
    match execute(&cli.command, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("zakbench: {e}");
            e.exit_code()
        }
    }
}
