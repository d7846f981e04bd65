//! Command-line scenario runner: parses a scenario, runs it with a seed, and
//! writes columnar data files plus a JSON manifest into the output
//! directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error,
//! 4 invariant failure.

pub mod config;
pub mod manifest;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::Value;

use config::*;
use manifest::{FileEntry, RunManifest, Status};
use scenarios::Output;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "subquantum-lab", version, about = "Pilot-wave nonequilibrium scenarios")]
pub struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with a section per subcommand; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transport an ensemble and track its approach to |psi|^2.
    Relax(RelaxArgs),
    /// Test cloud radii against the equilibrium ground state.
    Detect(DetectArgs),
    /// Look for a B-setting dependence of the A marginal.
    Signal(SignalArgs),
    /// Pointer measurements and the joint density check.
    Measure(MeasureArgs),
    /// Distinguish two overlapping packets from one tracked path.
    Discriminate(DiscriminateArgs),
    /// Run B92 key distribution, optionally with Eve.
    #[command(name = "qkd-b92")]
    QkdB92(QkdArgs),
    /// Recover a mode set and read the gadget count from trajectories.
    Readout(ReadoutArgs),
    /// Run the post-selected counting circuit.
    Gadget(GadgetArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Relax(_) => "relax",
            Command::Detect(_) => "detect",
            Command::Signal(_) => "signal",
            Command::Measure(_) => "measure",
            Command::Discriminate(_) => "discriminate",
            Command::QkdB92(_) => "qkd-b92",
            Command::Readout(_) => "readout",
            Command::Gadget(_) => "gadget",
        }
    }
}

/// The resolved parameters of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Relax(RelaxParams),
    Detect(DetectParams),
    Signal(SignalParams),
    Measure(MeasureParams),
    Discriminate(DiscriminateParams),
    QkdB92(QkdParams),
    Readout(ReadoutParams),
    Gadget(GadgetParams),
}

fn layered<T: Default + Clone, A>(file: &Option<T>, flags: &A, overlay: fn(&mut T, &A)) -> T {
    let mut p = file.clone().unwrap_or_default();
    overlay(&mut p, flags);
    p
}

impl Scenario {
    /// Defaults, then the file section, then flags.
    pub fn resolve(command: &Command, file: &FileConfig) -> Self {
        match command {
            Command::Relax(a) => Scenario::Relax(layered(&file.relax, a, RelaxParams::overlay)),
            Command::Detect(a) => Scenario::Detect(layered(&file.detect, a, DetectParams::overlay)),
            Command::Signal(a) => Scenario::Signal(layered(&file.signal, a, SignalParams::overlay)),
            Command::Measure(a) => Scenario::Measure(layered(&file.measure, a, MeasureParams::overlay)),
            Command::Discriminate(a) => Scenario::Discriminate(layered(&file.discriminate, a, DiscriminateParams::overlay)),
            Command::QkdB92(a) => Scenario::QkdB92(layered(&file.qkd_b92, a, QkdParams::overlay)),
            Command::Readout(a) => Scenario::Readout(layered(&file.readout, a, ReadoutParams::overlay)),
            Command::Gadget(a) => Scenario::Gadget(layered(&file.gadget, a, GadgetParams::overlay)),
        }
    }

    pub fn to_json(&self) -> Value {
        let v = match self {
            Scenario::Relax(p) => serde_json::to_value(p),
            Scenario::Detect(p) => serde_json::to_value(p),
            Scenario::Signal(p) => serde_json::to_value(p),
            Scenario::Measure(p) => serde_json::to_value(p),
            Scenario::Discriminate(p) => serde_json::to_value(p),
            Scenario::QkdB92(p) => serde_json::to_value(p),
            Scenario::Readout(p) => serde_json::to_value(p),
            Scenario::Gadget(p) => serde_json::to_value(p),
        };
        v.expect("parameters serialize")
    }

    pub fn run(&self, seed: u64) -> subquantum_core::Result<Output> {
        match self {
            Scenario::Relax(p) => scenarios::relax(p, seed),
            Scenario::Detect(p) => scenarios::detect(p, seed),
            Scenario::Signal(p) => scenarios::signal(p, seed),
            Scenario::Measure(p) => scenarios::measure(p, seed),
            Scenario::Discriminate(p) => scenarios::discriminate(p, seed),
            Scenario::QkdB92(p) => scenarios::qkd(p, seed),
            Scenario::Readout(p) => scenarios::readout(p, seed),
            Scenario::Gadget(p) => scenarios::gadget(p, seed),
        }
    }
}

fn write_files(dir: &Path, files: &[(String, String)]) -> std::io::Result<Vec<FileEntry>> {
    std::fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|(name, text)| {
            std::fs::write(dir.join(name), text)?;
            Ok(FileEntry::describe(name, text))
        })
        .collect()
}

/// Runs a parsed command line and returns the process exit code. Status
/// lines go to stdout, errors to stderr.
pub fn run(cli: &Cli) -> i32 {
    let start = Instant::now();
    let file = match &cli.config {
        Some(path) => FileConfig::load(path),
        None => Ok(FileConfig::default()),
    };
    let (file, config_error) = match file {
        Ok(f) => (f, None),
        Err(e) => (FileConfig::default(), Some(e.to_string())),
    };
    let out_dir = cli.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let scenario = Scenario::resolve(&cli.command, &file);
    let mut manifest = RunManifest::new(cli.command.name(), seed, scenario.to_json());

    let code = if let Some(e) = config_error {
        manifest.fail(Status::ConfigError, e, EXIT_CONFIG)
    } else {
        match scenario.run(seed) {
            Err(e) => {
                let (status, code) = if e.is_input() { (Status::ConfigError, EXIT_CONFIG) } else { (Status::RuntimeError, EXIT_RUNTIME) };
                manifest.fail(status, e.to_string(), code)
            }
            Ok(output) => match write_files(&out_dir, &output.files) {
                Err(e) => manifest.fail(Status::RuntimeError, format!("writing {}: {e}", out_dir.display()), EXIT_RUNTIME),
                Ok(entries) => {
                    manifest.files = entries;
                    manifest.metrics = output.metrics;
                    manifest.invariants = output.checks;
                    for line in &output.summary {
                        println!("{line}");
                    }
                    let broken: Vec<&str> = manifest.invariants.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                    if broken.is_empty() {
                        0
                    } else {
                        manifest.fail(Status::InvariantFailure, format!("invariants failed: {}", broken.join(", ")), EXIT_INVARIANT)
                    }
                }
            },
        }
    };
    if let Some(e) = &manifest.error {
        eprintln!("subquantum-lab {}: {e}", cli.command.name());
    }
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    if let Err(e) = manifest.write(&out_dir.join(MANIFEST)) {
        eprintln!("subquantum-lab: cannot write manifest in {}: {e}", out_dir.display());
        return if code == 0 { EXIT_RUNTIME } else { code };
    }
    code
}
