//! Command-line front end and batch driver for `bloch-core`.
//!
//! [`run`] parses arguments, executes one command and returns the process
//! exit code: 0 on success, 1 when the computation fails, 2 on usage errors.
//! Failure messages name the input file and the pipeline stage.

mod batch;
mod render;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use bloch_core::homology::{count_spin_structures, count_stable_orientations, homology, ChainComplex, HomologyError};
use bloch_core::invariants::{compute_report, PipelineError, ReportOptions, MAX_PRECISION, MIN_PRECISION};
use bloch_core::triangulation::{
    bloch_invariant, parse_triangulation, solve_shapes_with, IdealTriangulation, ParseMode, SolverOptions,
    TriangulationError,
};
use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

/// Environment variable holding the default `--precision`.
pub const PRECISION_ENV: &str = "BLOCH_PRECISION";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "bloch", version, about = "Bloch invariants, regulators and orientation counts")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Significant digits of printed reals.
    #[arg(
        long,
        global = true,
        env = PRECISION_ENV,
        default_value_t = 15,
        value_parser = clap::value_parser!(u32).range(MIN_PRECISION as i64..=MAX_PRECISION as i64)
    )]
    pub precision: u32,
    /// Reject unknown keys in triangulation files.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Argument-shift bound for the membership residual.
    #[arg(long, global = true, default_value_t = 4)]
    pub shift_bound: u32,
    /// Box size of the flattening search.
    #[arg(long, global = true, default_value_t = 4)]
    pub flattening_bound: u32,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the gluing equations of a triangulation.
    Solve { input: PathBuf },
    /// Full invariant report: volume, regulators, Chern-Simons.
    Invariants { input: PathBuf },
    /// Bloch invariant with its membership evidence.
    CheckBloch { input: PathBuf },
    /// Homology of a chain complex, with mod 2 dimensions and counts.
    Homology { input: PathBuf },
    /// Number of stable-homotopy orientations of a closed 3-manifold.
    CountOrientations { input: PathBuf },
    /// Reports for many triangulations plus a CSV summary.
    ReportBatch {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Directory receiving one report per input and `summary.csv`.
        #[arg(long, default_value = "reports")]
        out_dir: PathBuf,
    },
}

impl CliConfig {
    pub(crate) fn parse_mode(&self) -> ParseMode {
        if self.strict {
            ParseMode::Strict
        } else {
            ParseMode::Lenient
        }
    }

    pub(crate) fn report_options(&self) -> ReportOptions {
        ReportOptions {
            flattening_bound: self.flattening_bound,
            shift_bound: self.shift_bound,
            ..ReportOptions::default()
        }
    }

    pub(crate) fn precision(&self) -> usize {
        self.precision as usize
    }
}

/// A failed command. The message starts with the stage that failed.
#[derive(Debug, Error)]
pub(crate) enum Failure {
    #[error("parse: cannot read file: {0}")]
    Read(#[source] io::Error),
    #[error("parse: {0}")]
    Triangulation(#[source] TriangulationError),
    #[error("parse: {0}")]
    Complex(#[source] HomologyError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("invariant: counts need the homology of a connected closed orientable 3-manifold, got H0 = {h0}, H3 = {h3}")]
    NotClosed { h0: String, h3: String },
    #[error("output: cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
}

pub(crate) fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(Failure::Read)
}

pub(crate) fn load_triangulation(path: &Path, mode: ParseMode) -> Result<IdealTriangulation, Failure> {
    parse_triangulation(&read_input(path)?, mode).map_err(Failure::Triangulation)
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    execute(&cfg, out, err)
}

fn execute(cfg: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (input, result) = match &cfg.command {
        Command::Solve { input } => (input, solve(cfg, input)),
        Command::Invariants { input } => (input, invariants(cfg, input)),
        Command::CheckBloch { input } => (input, check_bloch(cfg, input)),
        Command::Homology { input } => (input, homology_cmd(cfg, input)),
        Command::CountOrientations { input } => (input, count_orientations(cfg, input)),
        Command::ReportBatch { inputs, out_dir } => return batch::run_batch(cfg, inputs, out_dir, out, err),
    };
    match result {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "bloch: output: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "bloch: {}: {e}", input.display());
            1
        }
    }
}

fn solve(cfg: &CliConfig, input: &Path) -> Result<String, Failure> {
    let tri = load_triangulation(input, cfg.parse_mode())?;
    let report = solve_shapes_with(&tri, None, &SolverOptions::default()).map_err(PipelineError::Solve)?;
    Ok(render::solve(&tri, &report, cfg.format, cfg.precision()))
}

fn invariants(cfg: &CliConfig, input: &Path) -> Result<String, Failure> {
    let tri = load_triangulation(input, cfg.parse_mode())?;
    let report = compute_report(&tri, &cfg.report_options())?;
    Ok(render::report(&report, cfg.format, cfg.precision()))
}

fn check_bloch(cfg: &CliConfig, input: &Path) -> Result<String, Failure> {
    let tri = load_triangulation(input, cfg.parse_mode())?;
    let solved = solve_shapes_with(&tri, None, &SolverOptions::default()).map_err(PipelineError::Solve)?;
    let beta = bloch_invariant(&tri, &solved.assignment).map_err(PipelineError::Invariant)?;
    Ok(render::bloch(&tri, &beta, cfg.shift_bound, cfg.format, cfg.precision()))
}

fn load_complex(input: &Path) -> Result<ChainComplex, Failure> {
    ChainComplex::from_json(&read_input(input)?).map_err(Failure::Complex)
}

fn homology_cmd(cfg: &CliConfig, input: &Path) -> Result<String, Failure> {
    let h = homology(&load_complex(input)?, true);
    Ok(render::homology(&h, cfg.format))
}

fn count_orientations(cfg: &CliConfig, input: &Path) -> Result<String, Failure> {
    let h = homology(&load_complex(input)?, true);
    let (Some(n), Some(spin)) = (count_stable_orientations(&h), count_spin_structures(&h)) else {
        return Err(Failure::NotClosed {
            h0: h.groups[0].to_string(),
            h3: h.groups[3].to_string(),
        });
    };
    Ok(render::count(&n, &spin, cfg.format))
}
