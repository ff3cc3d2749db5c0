//! Scenario-driven command-line front end.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime failure
//! (numerical, convergence, I/O).

mod commands;
mod output;
mod plot;
mod scenario;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;

pub use commands::spectrum_lines;
pub use output::{derive_seed, fnv1a64, write_atomic, Artifact, Format};
pub use plot::{emit_plot, gnuplot_script};
pub use scenario::{
    BlockadeConfig, BroadeningConfig, LevelsConfig, MemoryConfig, PumpConfig, Scenario, SpectrumConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "eucl",
    version,
    about = "EuCl3.6H2O line broadening, spectra, optical pumping and blockade models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the scenario.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Global seed; overrides `seed` in the scenario.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Encoding of summary files.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Also write a gnuplot script next to every CSV.
    #[arg(long, global = true)]
    pub plots: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Isotope broadening budget.
    Broaden,
    /// Synthetic excitation spectrum with fit report.
    Spectrum,
    /// Optical pumping into g3 and the resulting optical depth.
    Pump,
    /// Lattice Monte Carlo of excitation blockade.
    Blockade,
    /// Memory efficiency from optical depth.
    Memory,
    /// Every subcommand whose scenario section is present.
    All,
    /// gnuplot scripts for existing CSV files.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Messages go to stdout/stderr; the exit code is returned.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            // a closed pipe on stdout is not a failure of the run
            let mut out = std::io::stdout().lock();
            for l in lines {
                if writeln!(out, "{l}").is_err() {
                    break;
                }
            }
            EXIT_OK
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            EXIT_VALIDATION
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<String>, Failure> {
    if let Command::Plot { csv } = &cli.command {
        let mut written = Vec::new();
        for path in csv {
            let (name, script) = emit_plot(path)?;
            let dir = match &cli.out {
                Some(d) => d.clone(),
                None => path.parent().map(PathBuf::from).unwrap_or_default(),
            };
            let p = write_atomic(&dir, &name, &script).map_err(|e| Failure::Runtime(e.to_string()))?;
            written.push(format!("wrote {}", p.display()));
        }
        return Ok(written);
    }
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| Failure::Validation("--scenario <path> is required".into()))?;
    let scenario = Scenario::from_file(path)?;
    let artifacts = compute(&scenario, &cli.command, cli.seed, cli.format)?;
    let out = cli
        .out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut lines = artifacts.1;
    for a in artifacts.0 {
        let p = write_atomic(&out, &a.name, &a.contents).map_err(|e| Failure::Runtime(e.to_string()))?;
        lines.push(format!("wrote {}", p.display()));
        if cli.plots && a.name.ends_with(".csv") && !a.contents.starts_with("key,value") {
            let header = a.contents.lines().next().unwrap_or("");
            let script = gnuplot_script(header, &a.name)?;
            let stem = a.name.trim_end_matches(".csv");
            let p = write_atomic(&out, &format!("{stem}.gp"), &script).map_err(|e| Failure::Runtime(e.to_string()))?;
            lines.push(format!("wrote {}", p.display()));
        }
    }
    Ok(lines)
}

/// Runs the computations of `command` without touching the file system.
/// Returns the artifacts and the terminal report lines.
pub fn compute(
    scenario: &Scenario,
    command: &Command,
    seed: Option<u64>,
    format: Format,
) -> Result<(Vec<Artifact>, Vec<String>), Error> {
    let seed = seed.unwrap_or(scenario.seed);
    let sub = |name: &str| derive_seed(seed, name);
    let mut outcomes = Vec::new();
    let wants = |c: Command| *command == c || *command == Command::All;
    if wants(Command::Broaden) {
        outcomes.push(commands::broaden(scenario, format)?);
    }
    let all = *command == Command::All;
    if wants(Command::Spectrum) && (!all || scenario.spectrum.is_some()) {
        outcomes.push(commands::spectrum(scenario, sub("spectrum"), format)?);
    }
    let mut pump_summary = None;
    let need_pump_for_memory = wants(Command::Memory) && scenario.memory.as_ref().is_some_and(|m| m.alpha.is_none());
    if (wants(Command::Pump) && (!all || scenario.pump.is_some())) || need_pump_for_memory {
        let o = commands::pump(scenario, format)?;
        pump_summary = Some(o.summary.clone());
        if wants(Command::Pump) {
            outcomes.push(o);
        }
    }
    if wants(Command::Blockade) && (!all || scenario.blockade.is_some()) {
        outcomes.push(commands::blockade(scenario, sub("blockade"), format)?);
    }
    if wants(Command::Memory) && (!all || scenario.memory.is_some()) {
        outcomes.push(commands::memory(scenario, pump_summary.as_ref(), format)?);
    }
    let mut artifacts = Vec::new();
    let mut reports = Vec::new();
    for o in outcomes {
        artifacts.extend(o.artifacts);
        reports.push(o.report);
    }
    Ok((artifacts, reports))
}
