//! Headless, file-driven front end: load a project, run one stage, write its
//! artifacts, print a one-line summary.
//!
//! Exit codes: 0 success, 1 internal error, 2 a scientific gate or module
//! validation rejected the input, 64 usage or configuration error.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    /// A module refused the input (error name first).
    #[error("{0}")]
    Validation(String),
    /// The run finished but its result failed the acceptance gate.
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Validation(_) | CliError::Rejected(_) => EXIT_REJECTED,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Validation(e.to_string())
            }
        }
    )*};
}

validation_from!(
    tmsnav_core::registration::RegistrationError,
    tmsnav_core::pose_plan::PlanError,
    tmsnav_core::kinematics::KinematicsError,
    tmsnav_core::fieldsim::FieldError,
    tmsnav_core::session_sim::SessionError
);

#[derive(Debug, Parser)]
#[command(name = "tmsnav", version, about = "Coil planning, registration and simulation for robotic TMS")]
pub struct Cli {
    /// Project file (JSON); relative paths inside it are resolved against its directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; overrides the project's `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Landmark registration, optionally refined by ICP against a probed cloud.
    Register(RegisterArgs),
    /// Plan a coil pose from a constraint file.
    Plan(PlanArgs),
    /// Solve the commanded end-effector pose for a plan.
    Chain(ChainArgs),
    /// Lay out a hotspot search grid around a seed plan.
    Hotspot(HotspotArgs),
    /// Sensor displacement sweep under the coil.
    Fieldsim,
    /// Simulated alignment repetitions or a coil-holding session.
    Session(SessionArgs),
    /// Collect the artifacts in the output directory into one summary.
    Report,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    /// Probed skin points (`{"points": [[x,y,z], ...]}`) for ICP refinement.
    #[arg(long)]
    pub cloud: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Registered strategy name.
    #[arg(long, default_value = "free_skin")]
    pub strategy: String,
    /// Constraint points (tagged by `constraint_kind`).
    #[arg(long)]
    pub constraint: PathBuf,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Plan produced by `plan`.
    #[arg(long)]
    pub plan: PathBuf,
    /// Live edges `{R→E}`, `{O→Cr}`, `{O→Hr}` (and `{Hr→H}` unless given by --registration).
    #[arg(long)]
    pub graph: PathBuf,
    /// Accepted registration result supplying `{Hr→H}`.
    #[arg(long)]
    pub registration: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HotspotArgs {
    /// Seed plan at the grid center.
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub rows: usize,
    #[arg(long, default_value_t = 5)]
    pub cols: usize,
    /// Nominal node pitch (mm).
    #[arg(long, default_value_t = 10.0)]
    pub spacing: f64,
    /// Score every node with the simulated sensor fixed under the seed and pick the best.
    #[arg(long)]
    pub simulate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Robotic,
    Manual,
    Noiseless,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SessionKindArg {
    Holding,
    Alignment,
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, value_enum, default_value = "robotic")]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value = "holding")]
    pub kind: SessionKindArg,
    /// Placements for an alignment run.
    #[arg(long, default_value_t = 20)]
    pub repetitions: usize,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. The summary line goes to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                let _ = write!(stdout, "{}", e.render());
                return EXIT_OK;
            }
            _ => {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_USAGE;
            }
        },
    };
    match commands::dispatch(&cli) {
        Ok(summary) => {
            let _ = writeln!(stdout, "{summary}");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
