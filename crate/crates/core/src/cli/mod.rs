//! Command-line front end. [`run`] parses arguments, dispatches to a subcommand and maps
//! errors to exit codes: 0 on success, 2 for invalid input, 3 for numerical failure.
//!
//! Every run writes a manifest JSON next to its outputs with the effective parameters,
//! the tool version and the argument vector, so a run can be repeated exactly.

mod commands;
mod enumerate;

use crate::graph::{build_dumbbell, build_interval, build_lollipop, MetricGraph};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use enumerate::EnumerateMode;

#[derive(Debug, Parser)]
#[command(name = "qgraph", version, about = "Standing waves of the cubic NLS on metric graphs and the bowtie lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Linear spectrum (k, lambda = k^2) below a wavenumber cutoff.
    Spectrum(SpectrumArgs),
    /// Pseudo-arclength continuation of a branch of standing waves in Lambda.
    Continue(ContinueArgs),
    /// Classify a singular point stored in a branch CSV.
    Classify(ClassifyArgs),
    /// Stationary branches and bifurcation events of the bowtie lattice.
    Bowtie(BowtieArgs),
    /// Enumerate dumbbell standing waves by shooting, complete-loop catalog or hybrid search.
    Enumerate(enumerate::EnumerateArgs),
    /// Render branch, bowtie or solution CSVs as SVG.
    Render(RenderArgs),
}

/// A built-in graph family or a path to a graph JSON document.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphChoice {
    Dumbbell,
    Lollipop,
    Interval,
    File(PathBuf),
}

impl FromStr for GraphChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dumbbell" => Ok(Self::Dumbbell),
            "lollipop" => Ok(Self::Lollipop),
            "interval" => Ok(Self::Interval),
            "" => Err("empty graph name".into()),
            path => Ok(Self::File(PathBuf::from(path))),
        }
    }
}

impl Serialize for GraphChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Dumbbell => s.serialize_str("dumbbell"),
            Self::Lollipop => s.serialize_str("lollipop"),
            Self::Interval => s.serialize_str("interval"),
            Self::File(p) => s.serialize_str(&p.display().to_string()),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphArgs {
    /// dumbbell, lollipop, interval, or a path to a graph JSON document.
    #[arg(long, default_value = "dumbbell")]
    pub graph: GraphChoice,
    /// Half-length of the dumbbell bridge or lollipop stem; full length of an interval. Ignored for JSON graphs.
    #[arg(long = "L", default_value_t = 2.0)]
    #[serde(rename = "L")]
    pub half_length: f64,
}

impl GraphArgs {
    pub fn build(&self) -> Result<MetricGraph> {
        match &self.graph {
            GraphChoice::Dumbbell => build_dumbbell(self.half_length),
            GraphChoice::Lollipop => build_lollipop(self.half_length),
            GraphChoice::Interval => build_interval(self.half_length),
            GraphChoice::File(p) => {
                let g = MetricGraph::from_json(&std::fs::read_to_string(p)?)?;
                g.validate()?;
                Ok(g)
            }
        }
    }
}

/// A closed parameter interval written `min:max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub min: f64,
    pub max: f64,
}

impl FromStr for Window {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected min:max, got {s:?}"))?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        Ok(Self { min: num(a)?, max: num(b)? })
    }
}

impl Window {
    /// Non-empty and finite.
    pub fn validate(&self, name: &str) -> Result<()> {
        if self.min.is_finite() && self.max.is_finite() && self.min < self.max {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{name} {}:{} is empty", self.min, self.max)))
        }
    }
}

impl Serialize for Window {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.min, self.max].serialize(s)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    /// Largest wavenumber k to report.
    #[arg(long, default_value_t = 3.0)]
    pub kmax: f64,
    /// Grid spacing for graphs without a closed-form secular equation.
    #[arg(long, default_value_t = 0.02)]
    pub h: f64,
    /// CSV of modes: k, lambda, family, multiplicity.
    #[arg(long, default_value = "spectrum.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Decreasing,
    Increasing,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ContinueArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    /// `constant` for the constant branch, or a solution CSV (edge_id, x, value) used as a Newton guess.
    #[arg(long, default_value = "constant")]
    pub from: String,
    /// Lambda of the starting guess; required with a solution CSV.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    /// Lambda range `min:max`; continuation stops on leaving it.
    #[arg(long, default_value = "-3:0", allow_hyphen_values = true)]
    pub lambda_window: Window,
    /// Target grid spacing.
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    /// Initial arclength step.
    #[arg(long, default_value_t = 0.01)]
    pub ds: f64,
    /// Smallest step before the run gives up.
    #[arg(long, default_value_t = 1e-5)]
    pub ds_min: f64,
    /// Largest arclength step.
    #[arg(long, default_value_t = 0.1)]
    pub ds_max: f64,
    #[arg(long, default_value_t = 20000)]
    pub max_steps: usize,
    /// Newton residual tolerance of the corrector.
    #[arg(long, default_value_t = 1e-11)]
    pub newton_tol: f64,
    #[arg(long, default_value_t = 10)]
    pub max_newton: usize,
    /// Localization tolerance of the branch-point test function.
    #[arg(long, default_value_t = 1e-8)]
    pub psi_tol: f64,
    /// Skip fold and branch-point detection.
    #[arg(long)]
    pub no_events: bool,
    /// Initial sense of travel in Lambda.
    #[arg(long, value_enum, default_value = "decreasing")]
    pub direction: Direction,
    /// Also continue both halves of every branch crossing at detected branch points.
    #[arg(long)]
    pub switch: bool,
    /// Branch CSV: s, lambda, Q, tags.
    #[arg(long, default_value = "branch.csv")]
    pub out: PathBuf,
    /// Directory receiving one solution CSV for every point of the branch.
    #[arg(long)]
    pub solutions: Option<PathBuf>,
    /// Render the (Lambda, Q) diagram next to the CSV.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    /// Branch CSV written by `continue`.
    #[arg(long)]
    pub branch: PathBuf,
    /// Solutions directory written by `continue --solutions`.
    #[arg(long)]
    pub solutions: PathBuf,
    /// Row of the branch CSV (0-based) holding the singular point.
    #[arg(long)]
    pub index: usize,
    /// Threshold below which a Theta counts as zero; defaults to 1e-6 max(1, Q).
    #[arg(long)]
    pub zero_tol: Option<f64>,
    /// Largest residual accepted for the stored solution.
    #[arg(long, default_value_t = 1e-8)]
    pub residual_tol: f64,
    /// Use the stored point as is instead of polishing it onto the singular point.
    #[arg(long)]
    pub no_refine: bool,
    /// JSON output file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BowtieArgs {
    /// Samples per branch.
    #[arg(long, default_value_t = 400)]
    pub points: usize,
    /// Lower end of the Omega range for the branches parameterized by Omega.
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    pub omega_min: f64,
    /// CSV of sampled branches.
    #[arg(long, default_value = "bowtie_branches.csv")]
    pub out: PathBuf,
    /// Also write the bifurcation events as JSON.
    #[arg(long)]
    pub events: bool,
    /// Events file; defaults to the branch CSV with extension `events.json`.
    #[arg(long)]
    pub events_out: Option<PathBuf>,
    /// Render the (Omega, Q) diagram next to the CSV.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RenderArgs {
    /// Branch CSVs (s, lambda, Q, tags).
    #[arg(long)]
    pub branch: Vec<PathBuf>,
    /// Bowtie branch CSV (branch_id, theta, omega, Q, a, b, c).
    #[arg(long)]
    pub bowtie: Option<PathBuf>,
    /// Bowtie events JSON to mark on the bowtie diagram.
    #[arg(long)]
    pub bowtie_events: Option<PathBuf>,
    /// Solution CSV (edge_id, x, value) to draw as a profile.
    #[arg(long, conflicts_with_all = ["branch", "bowtie"])]
    pub profile: Option<PathBuf>,
    /// SVG output file.
    #[arg(long, default_value = "diagram.svg")]
    pub out: PathBuf,
    #[arg(long, default_value = "")]
    pub title: String,
    #[arg(long, default_value_t = 720)]
    pub width: u32,
    #[arg(long, default_value_t = 480)]
    pub height: u32,
}

/// Record of one run, written as JSON beside the outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub parameters: Value,
    pub outputs: Vec<String>,
    pub results: Value,
}

/// Context shared by the subcommands.
pub(crate) struct RunContext {
    pub argv: Vec<String>,
}

impl RunContext {
    pub fn manifest(&self, command: &'static str, parameters: &impl Serialize, outputs: &[PathBuf], results: Value) -> Result<Manifest> {
        Ok(Manifest {
            tool: "qgraph",
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: self.argv.clone(),
            parameters: serde_json::to_value(parameters)?,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            results,
        })
    }
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    ensure_parent(path)?;
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => Ok(std::fs::create_dir_all(p)?),
        _ => Ok(()),
    }
}

/// `branch.csv` becomes `branch.<ext>`.
pub(crate) fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

/// Fixed-format float for data files: round-trips exactly.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

fn diagnostic_dir(cmd: &Command) -> PathBuf {
    let parent = |p: &Path| p.parent().map(Path::to_path_buf).unwrap_or_default();
    match cmd {
        Command::Spectrum(a) => parent(&a.out),
        Command::Continue(a) => parent(&a.out),
        Command::Classify(a) => a.out.as_deref().map(parent).unwrap_or_default(),
        Command::Bowtie(a) => parent(&a.out),
        Command::Enumerate(a) => a.out.clone(),
        Command::Render(a) => parent(&a.out),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Spectrum(_) => "spectrum",
        Command::Continue(_) => "continue",
        Command::Classify(_) => "classify",
        Command::Bowtie(_) => "bowtie",
        Command::Enumerate(_) => "enumerate",
        Command::Render(_) => "render",
    }
}

/// Run the command in `cli`.
pub fn execute(cli: &Cli, argv: Vec<String>) -> Result<()> {
    let ctx = RunContext { argv };
    match &cli.command {
        Command::Spectrum(a) => commands::spectrum(&ctx, a),
        Command::Continue(a) => commands::continue_cmd(&ctx, a),
        Command::Classify(a) => commands::classify_cmd(&ctx, a),
        Command::Bowtie(a) => commands::bowtie(&ctx, a),
        Command::Enumerate(a) => enumerate::enumerate(&ctx, a),
        Command::Render(a) => commands::render(&ctx, a),
    }
}

/// Parse `args` (program name first), run, and return the process exit code.
/// Numerical failures also leave `qgraph-diagnostic.json` in the output directory.
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
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, argv.clone()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            if code == 3 {
                let path = diagnostic_dir(&cli.command).join("qgraph-diagnostic.json");
                let diag = json!({
                    "tool": "qgraph",
                    "version": env!("CARGO_PKG_VERSION"),
                    "command": command_name(&cli.command),
                    "argv": argv,
                    "error": e.to_string(),
                    "exit_code": code,
                });
                match write_json(&path, &diag) {
                    Ok(()) => eprintln!("diagnostic written to {}", path.display()),
                    Err(w) => eprintln!("could not write diagnostic {}: {w}", path.display()),
                }
            }
            code
        }
    }
}
