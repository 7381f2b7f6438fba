//! The `eitcool` command line: config ingestion, subcommands and
//! reproducible delimited output.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 numerical failure,
//! 4 inconsistent measurement. `EITCOOL_THREADS` sets the worker count.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use output::{ReplayRecord, TOOL};

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INCONSISTENT: i32 = 4;
pub const THREADS_ENV: &str = "EITCOOL_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "eitcool",
    version,
    about = "EIT cooling spectra, limits and calibration",
    args_conflicts_with_subcommands = true
)]
pub struct Cli {
    /// Rerun the command recorded in an output file's header.
    #[arg(long, value_name = "FILE")]
    replay: Option<PathBuf>,
    /// Where a replayed run writes (stdout if omitted).
    #[arg(long, value_name = "FILE", requires = "replay")]
    replay_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// P-population spectrum versus probe detuning.
    Spectrum(SpectrumArgs),
    /// Cooling limit and rate for one mode.
    Cool(CoolArgs),
    /// Probe or pump intensity scan.
    Scan(ScanArgs),
    /// Stark-shift calibration and Ramsey fringes.
    #[command(subcommand)]
    Calibrate(CalibrateCommand),
    /// Axial and radial cooling limits versus probe detuning.
    DesignDual(DualArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Unit {
    /// Multiples of the natural linewidth.
    Gamma,
    /// Ordinary MHz (not angular).
    Mhz,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration (137Ba+ defaults if omitted).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output file (stdout if omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Unit of the frequencies given on the command line.
    #[arg(long, value_enum, default_value = "gamma")]
    unit: Unit,
}

#[derive(Debug, Args)]
struct Window {
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = crate::spectrum::DEFAULT_GRID_POINTS)]
    points: usize,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    window: Window,
    /// Dark-resonance companion file (default: <out stem>.dark.csv).
    #[arg(long, value_name = "FILE")]
    dark_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CoolArgs {
    #[command(flatten)]
    common: Common,
    /// Mode label from the config.
    #[arg(long)]
    mode: String,
    /// Probe detuning (defaults to the config's lasers.delta_probe).
    #[arg(long, allow_hyphen_values = true)]
    delta_probe: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    Probe,
    Pump,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    axis: Axis,
    /// Range of the scanned Rabi frequency.
    #[command(flatten)]
    window: Window,
    /// Omega_pump,2 / Omega_pump,1 for pump scans.
    #[arg(long, default_value_t = 2.0)]
    ratio: f64,
    /// Modes to score (all config modes if omitted).
    #[arg(long = "mode")]
    modes: Vec<String>,
    /// Fixed probe detuning (defaults to the config's lasers.delta_probe).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "optimize_from")]
    delta_probe: Option<f64>,
    /// Optimize the probe detuning over [optimize-from, optimize-to] at each point.
    #[arg(long, allow_hyphen_values = true, requires = "optimize_to")]
    optimize_from: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "optimize_from")]
    optimize_to: Option<f64>,
    #[arg(long, default_value_t = 61)]
    optimize_points: usize,
    /// Ignore the config's heating rates.
    #[arg(long)]
    no_heating: bool,
}

#[derive(Debug, Subcommand)]
enum CalibrateCommand {
    /// Fit A sin^2(delta t) exp(-gamma t) + B to a (t_ms, p) file.
    FitRamsey(FitRamseyArgs),
    /// Recover probe Rabi frequencies from measured shifts.
    Invert(InvertArgs),
    /// Forward Stark shifts for given probe Rabi frequencies.
    Stark(StarkArgs),
    /// Synthetic Ramsey fringe, optionally with seeded shot noise.
    SynthRamsey(SynthArgs),
}

#[derive(Debug, Args)]
struct FitRamseyArgs {
    /// Two-column (t_ms, p) file.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InvertArgs {
    #[command(flatten)]
    common: Common,
    /// Rows of (clock_khz, zeeman_plus_khz, zeeman_minus_khz).
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    delta_probe: f64,
}

#[derive(Debug, Args)]
struct StarkArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    delta_probe: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_plus: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_minus: f64,
    #[arg(long, default_value_t = 0.0)]
    pi: f64,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    a: f64,
    /// rad/ms
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    /// 1/ms
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    b: f64,
    /// First sample time, ms.
    #[arg(long, default_value_t = 0.0)]
    t_from: f64,
    /// Last sample time, ms.
    #[arg(long)]
    t_to: f64,
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Shots per point; noiseless if omitted.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DualArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    window: Window,
    #[arg(long, default_value_t = 0.2)]
    axial_mhz: f64,
    #[arg(long, default_value_t = 1.7)]
    radial_mhz: f64,
    /// Nominal probe detuning (defaults to the config's lasers.delta_probe).
    #[arg(long, allow_hyphen_values = true)]
    nominal: Option<f64>,
}

/// A failed run: message plus exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::InvalidConfig(_) | Error::Domain(_) | Error::Unsupported(_) => EXIT_CONFIG,
        Error::InconsistentMeasurement(_) => EXIT_INCONSISTENT,
        _ => EXIT_NUMERIC,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// File contents a command reads, either from disk or from a replay record.
#[derive(Debug, Default, Clone)]
struct Inputs {
    config: Option<String>,
    data: Option<String>,
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

impl Command {
    fn config_path(&self) -> Option<&Path> {
        let common = match self {
            Command::Spectrum(a) => &a.common,
            Command::Cool(a) => &a.common,
            Command::Scan(a) => &a.common,
            Command::DesignDual(a) => &a.common,
            Command::Calibrate(CalibrateCommand::Invert(a)) => &a.common,
            Command::Calibrate(CalibrateCommand::Stark(a)) => &a.common,
            Command::Calibrate(_) => return None,
        };
        common.config.as_deref()
    }

    fn data_path(&self) -> Option<&Path> {
        match self {
            Command::Calibrate(CalibrateCommand::FitRamsey(a)) => Some(&a.data),
            Command::Calibrate(CalibrateCommand::Invert(a)) => Some(&a.data),
            _ => None,
        }
    }

    fn out_path(&self) -> Option<&Path> {
        match self {
            Command::Spectrum(a) => a.common.out.as_deref(),
            Command::Cool(a) => a.common.out.as_deref(),
            Command::Scan(a) => a.common.out.as_deref(),
            Command::DesignDual(a) => a.common.out.as_deref(),
            Command::Calibrate(CalibrateCommand::FitRamsey(a)) => a.out.as_deref(),
            Command::Calibrate(CalibrateCommand::Invert(a)) => a.common.out.as_deref(),
            Command::Calibrate(CalibrateCommand::Stark(a)) => a.common.out.as_deref(),
            Command::Calibrate(CalibrateCommand::SynthRamsey(a)) => a.out.as_deref(),
        }
    }

    fn load_inputs(&self) -> Result<Inputs, Failure> {
        Ok(Inputs {
            config: self.config_path().map(read_text).transpose()?,
            data: self.data_path().map(read_text).transpose()?,
        })
    }
}

/// Arguments with the output path removed, for the replay record.
fn replay_args(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::usage(format!("cannot write stdout: {e}")))
        }
    }
}

fn execute(
    command: &Command,
    record: ReplayRecord,
    inputs: &Inputs,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let outputs = commands::dispatch(command, &record, inputs, out)?;
    for (path, text) in outputs {
        write_output(path.as_deref(), &text)?;
    }
    Ok(())
}

fn run_parsed(cli: Cli, args: &[String]) -> Result<(), Failure> {
    if let Some(path) = cli.replay {
        let text = read_text(&path)?;
        let record = ReplayRecord::from_output(&text)
            .ok_or_else(|| Failure::usage(format!("{} has no replay header", path.display())))?
            .map_err(|e| Failure::usage(format!("bad replay header: {e}")))?;
        let argv = std::iter::once(TOOL.to_string()).chain(record.args.iter().cloned());
        let replayed = Cli::try_parse_from(argv)
            .map_err(|e| Failure::usage(format!("bad replay arguments: {e}")))?;
        let command = replayed
            .command
            .ok_or_else(|| Failure::usage("replay record names no command"))?;
        let inputs = Inputs {
            config: record.config.clone(),
            data: record.data.clone(),
        };
        return execute(&command, record, &inputs, cli.replay_out.as_deref());
    }
    let command = cli
        .command
        .ok_or_else(|| Failure::usage("no command given; see --help"))?;
    let inputs = command.load_inputs()?;
    let record = ReplayRecord {
        tool: TOOL.into(),
        version: output::VERSION.into(),
        args: replay_args(args),
        config: inputs.config.clone(),
        data: inputs.data.clone(),
    };
    let out = command.out_path().map(Path::to_path_buf);
    execute(&command, record, &inputs, out.as_deref())
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::usage(format!("{THREADS_ENV}={value:?} is not a positive integer"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let args: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = thread_pool().and_then(|pool| match pool {
        Some(pool) => pool.install(|| run_parsed(cli, &args)),
        None => run_parsed(cli, &args),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("{TOOL}: error: {}", f.message);
            f.code
        }
    }
}
