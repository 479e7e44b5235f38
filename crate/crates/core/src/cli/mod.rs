//! Command-line front end: `simulate`, `classify` and `report`.
//!
//! Exit codes are 0 on success, 1 for bad input or validation failures and 2
//! when a run aborts at runtime.

pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::classifier::{classify_regime, ClassifierConfig};
use crate::simulator::run_monte_carlo;

pub use scenario::{emit_scenario, parse_scenario, parse_scenario_str, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

pub const DEFAULT_OUT_DIR: &str = "wfprod-out";

#[derive(Debug, Parser)]
#[command(name = "wfprod", version, about = "Workflow productivity simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its report files.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Carry experience across trials instead of resetting it.
        #[arg(long)]
        learning: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Warn about unknown scenario keys instead of failing.
        #[arg(long)]
        lenient: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Classify an observation CSV and print a JSON record.
    Classify {
        observations: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Turn a report.json into plot-ready tables.
    Report {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command, writing to the
/// given streams. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate {
            scenario,
            seed,
            trials,
            learning,
            out,
            lenient,
            workers,
        } => cmd_simulate(
            &scenario,
            &SimulateOverrides {
                seed,
                trials,
                learning,
                out,
                lenient,
                workers,
            },
            stdout,
            stderr,
        ),
        Command::Classify {
            observations,
            alpha,
            bootstrap,
            seed,
        } => cmd_classify(
            &observations,
            &ClassifierConfig {
                alpha,
                bootstrap_resamples: bootstrap,
                seed,
                ..ClassifierConfig::default()
            },
            stdout,
        ),
        Command::Report { report, out } => cmd_report(&report, out.as_deref(), stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "wfprod: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulateOverrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub learning: bool,
    pub out: Option<PathBuf>,
    pub lenient: bool,
    pub workers: usize,
}

pub fn cmd_simulate(
    path: &Path,
    ov: &SimulateOverrides,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let (mut scenario, warnings) = parse_scenario(path, ov.lenient)?;
    for w in warnings {
        let _ = writeln!(stderr, "wfprod: warning: {w}");
    }
    if let Some(seed) = ov.seed {
        scenario.seed = seed;
    }
    if let Some(trials) = ov.trials {
        scenario.n_trials = trials;
    }
    if ov.learning {
        scenario.reset_experience = false;
    }
    let built = scenario.build()?;
    let workers = ov.workers.max(1);
    if !scenario.reset_experience && workers > 1 {
        return Err(CliError::Input(format!(
            "--workers {workers}: learning mode runs trials in order and needs a single worker"
        )));
    }
    let mut opts = built.options.clone();
    opts.workers = workers;
    let report =
        run_monte_carlo(&built.graph, &built.assignment, &opts).map_err(|e| CliError::Runtime(e.to_string()))?;
    let dir = ov
        .out
        .clone()
        .or_else(|| scenario.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    output::write_simulation(&dir, &report)?;
    for n in &report.nodes {
        let _ = writeln!(stdout, "{}", output::summary_line(n));
    }
    Ok(())
}

pub fn cmd_classify(path: &Path, cfg: &ClassifierConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let obs = output::read_observations(path)?;
    let c = classify_regime(&obs, cfg).map_err(|e| CliError::Input(e.to_string()))?;
    let json = serde_json::to_string(&c).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(stdout, "{json}").map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn cmd_report(path: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let report = output::read_report(path)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let written = output::write_report_tables(&dir, &report)?;
    for f in written {
        let _ = writeln!(stdout, "{}", f.display());
    }
    Ok(())
}
