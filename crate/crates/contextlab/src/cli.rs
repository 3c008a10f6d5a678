//! Command-line surface: argument shapes, `key=value` config-file merging,
//! exit-code policy, and dispatch into the command handlers.
//!
//! Exit codes: `0` success, `1` usage errors (bad flags, unreadable inputs,
//! malformed files), `2` domain errors from the analysis itself — the latter
//! emit a machine-readable `{"error": {"kind", "message"}}` JSON artifact on
//! stdout.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands;
use crate::io::error_json;
use crate::selftest;

/// Contextuality and joint-measurability analysis toolkit.
///
/// Every subcommand is a reproducible batch command: identical inputs, flags
/// and seed produce byte-identical artifacts. Reports carry doubles rounded
/// to 12 significant digits and exact rationals as "p/q" strings.
#[derive(Parser, Debug)]
#[command(name = "contextlab", version, about, long_about = None)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Joint-measurability analysis: noisy qubit observables or an abstract
    /// hypergraph (with optional quantum realization)
    Jm(JmArgs),
    /// Realize a joint-measurability hypergraph as block POVMs
    Realize(RealizeArgs),
    /// Noncontextual-assignment polytope of an event hypergraph
    Ks(KsArgs),
    /// Specker-scenario polytope, inequalities and quantum values
    Specker(SpeckerArgs),
    /// n-cycle witness, noncontextual bound and quantum violation
    Ncycle(NcycleArgs),
    /// Fair-coin-flip witness: fixtures, polygon, synthetic data, pipeline
    Fcf(FcfArgs),
    /// Quantum-violation table over a list of cycle lengths
    #[command(name = "qviol-table")]
    QviolTable(QviolTableArgs),
    /// CHSH value of the optimal two-qubit configuration
    Chsh(ChshArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("expected json or csv, got {other:?}")),
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Default, Clone)]
pub struct CommonOpts {
    /// Write the artifact to PATH (atomically) instead of stdout
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Artifact format (default json; tables, sweeps and raw data are csv)
    #[arg(long, value_enum, value_name = "FMT")]
    pub format: Option<Format>,

    /// Seed for randomized procedures; defaults to 0
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,

    /// key=value file supplying values for flags not given on the command
    /// line (command-line flags win)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Tolerance for violation verdicts in reports (default 1e-12)
    #[arg(long, value_name = "EPS")]
    pub tol: Option<f64>,

    /// Run this subcommand's built-in reference checks and exit
    #[arg(long)]
    pub selftest: bool,
}

impl CommonOpts {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-12)
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

#[derive(Args, Debug, Default)]
pub struct JmArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Hypergraph mode: JSON file {"n_vertices", "edges"} (downward closure
    /// applied on load)
    #[arg(long, value_name = "PATH")]
    pub hypergraph: Option<PathBuf>,

    /// Also construct a quantum realization (hypergraph mode)
    #[arg(long)]
    pub realize: bool,

    /// Axes mode: common sharpness of the noisy observables
    #[arg(long, value_name = "ETA")]
    pub eta: Option<f64>,

    /// Axes mode: "trine", "orthogonal", or a JSON file [[x,y,z], ..]
    #[arg(long, value_name = "SPEC")]
    pub axes: Option<String>,

    /// Hilbert-space dimension cap for realizations
    #[arg(long, value_name = "N")]
    pub max_dim: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct RealizeArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// JSON file {"n_vertices", "edges"} (downward closure applied on load)
    #[arg(long, value_name = "PATH")]
    pub hypergraph: Option<PathBuf>,

    /// Hilbert-space dimension cap for the realization
    #[arg(long, value_name = "N")]
    pub max_dim: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KsReport {
    Summary,
    Vertices,
    Colourability,
}

impl FromStr for KsReport {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "summary" => Ok(KsReport::Summary),
            "vertices" => Ok(KsReport::Vertices),
            "colourability" => Ok(KsReport::Colourability),
            other => Err(format!("expected summary, vertices or colourability, got {other:?}")),
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct KsArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Built-in event hypergraph ("cega18")
    #[arg(long, value_name = "NAME")]
    pub builtin: Option<String>,

    /// Event hypergraph JSON file {"n_classes", "measurements"}
    #[arg(long, value_name = "PATH")]
    pub hypergraph: Option<PathBuf>,

    /// Report kind (default summary)
    #[arg(long, value_enum, value_name = "KIND")]
    pub report: Option<KsReport>,

    /// Include the built-in ray realization in the report (builtin only)
    #[arg(long)]
    pub rays: bool,

    /// Depolarizing-noise curve as CSV over p1*p2 = "start:stop:steps"
    /// (builtin only; bare flag uses 0:1:100)
    #[arg(long, value_name = "RANGE", num_args = 0..=1, default_missing_value = "0:1:100")]
    pub noise_curve: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct SpeckerArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Measurement predictability for the bound/quantum report
    /// (default 0.4566, the weak-regime optimum)
    #[arg(long, value_name = "ETA")]
    pub eta: Option<f64>,

    /// Evaluate given statistics "w12,w23,w13,p1,p2,p3" instead
    #[arg(long, value_name = "LIST")]
    pub stats: Option<String>,

    /// Bound/quantum curves as CSV over eta = "start:stop:steps"
    /// (bare flag sweeps 0 to the trine compatibility limit)
    #[arg(long, value_name = "RANGE", num_args = 0..=1, default_missing_value = "auto")]
    pub sweep: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct NcycleArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Cycle length (n >= 3)
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,

    /// Common sharpness of the cycle observables (default: the optimizer's
    /// maximum-violation value)
    #[arg(long, value_name = "ETA0")]
    pub eta0: Option<f64>,

    /// Witness/bound/violation curves as CSV over eta0 = "start:stop:steps"
    /// (bare flag sweeps 0 to the compatibility limit)
    #[arg(long, value_name = "RANGE", num_args = 0..=1, default_missing_value = "auto")]
    pub sweep: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct FcfArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Synthesize a raw data matrix: "p1,p2" (exact Born frequencies) or
    /// "p1,p2,N" (binomial sampling with N counts per cell)
    #[arg(long, value_name = "SPEC")]
    pub synthesize: Option<String>,

    /// Run the full pipeline on a raw-data CSV file
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Number of tomographically complete effects for the fit (default 3)
    #[arg(long, value_name = "K")]
    pub m_t: Option<usize>,

    /// Report the two hard-coded reference models
    #[arg(long)]
    pub fixtures: bool,

    /// Report the fair-coin constrained assignment polygon
    #[arg(long)]
    pub polygon: bool,

    /// Run the pipeline on the ideal noiseless quantum configuration
    #[arg(long)]
    pub ideal: bool,
}

#[derive(Args, Debug, Default)]
pub struct QviolTableArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// Cycle lengths: comma list of integers and inclusive ranges "a..b"
    /// (default "3..14,99,100,199,200")
    #[arg(long, value_name = "LIST")]
    pub n: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct ChshArgs {
    #[command(flatten)]
    pub common: CommonOpts,

    /// CHSH curve as CSV over Bob's analyzer angle = "start:stop:steps"
    /// (bare flag sweeps 0 to pi)
    #[arg(long, value_name = "RANGE", num_args = 0..=1, default_missing_value = "auto")]
    pub sweep: Option<String>,
}

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

/// A failed run: either a usage problem (exit 1, message on stderr) or a
/// domain error from the core library (exit 2, error JSON on stdout).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(contextlab_core::Error),
}

impl From<contextlab_core::Error> for CliError {
    fn from(e: contextlab_core::Error) -> Self {
        CliError::Domain(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

/// Parsed `key=value` config file. Keys use the long-flag spelling (for
/// example `max-dim=16`). Values fill only flags that were not given on the
/// command line; unknown keys are usage errors.
#[derive(Debug, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
    path: String,
}

impl ConfigMap {
    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                usage(format!(
                    "config {} line {}: expected key=value, got {raw:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(usage(format!(
                    "config {}: duplicate key {key:?}",
                    path.display()
                )));
            }
        }
        Ok(ConfigMap { entries, path: path.display().to_string() })
    }

    /// Fill an unset option from the config value under `key`, if any.
    pub fn fill<T>(&mut self, slot: &mut Option<T>, key: &str) -> CliResult<()>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(raw) = self.entries.remove(&key.to_string()) {
            if slot.is_none() {
                let parsed = raw
                    .parse::<T>()
                    .map_err(|e| usage(format!("config {}: bad value for {key}: {e}", self.path)))?;
                *slot = Some(parsed);
            }
        }
        Ok(())
    }

    /// Fill a boolean flag from the config (accepted values: true/false/1/0).
    /// A flag already set on the command line wins (it can only be set to
    /// true there, so the config can only switch an absent flag).
    pub fn fill_flag(&mut self, slot: &mut bool, key: &str) -> CliResult<()> {
        if let Some(raw) = self.entries.remove(&key.to_string()) {
            if !*slot {
                *slot = match raw.as_str() {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    other => {
                        return Err(usage(format!(
                            "config {}: bad boolean for {key}: {other:?}",
                            self.path
                        )))
                    }
                };
            }
        }
        Ok(())
    }

    /// All keys consumed? Otherwise the leftovers are typos.
    pub fn finish(self) -> CliResult<()> {
        if self.entries.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.entries.keys().map(String::as_str).collect();
            Err(usage(format!(
                "config {}: unknown keys: {}",
                self.path,
                keys.join(", ")
            )))
        }
    }
}

fn merge_common(common: &mut CommonOpts) -> CliResult<ConfigMap> {
    let mut cfg = match &common.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::default(),
    };
    let mut output: Option<String> = None;
    cfg.fill(&mut output, "output")?;
    if common.output.is_none() {
        common.output = output.map(PathBuf::from);
    }
    cfg.fill(&mut common.format, "format")?;
    cfg.fill(&mut common.seed, "seed")?;
    cfg.fill(&mut common.tol, "tol")?;
    cfg.fill_flag(&mut common.selftest, "selftest")?;
    Ok(cfg)
}

/// Merge the config file (if any) into every unset flag of the command.
fn merge_config(command: &mut Command) -> CliResult<()> {
    let mut cfg = match command {
        Command::Jm(a) => {
            let mut cfg = merge_common(&mut a.common)?;
            let mut hypergraph: Option<String> = None;
            cfg.fill(&mut hypergraph, "hypergraph")?;
            if a.hypergraph.is_none() {
                a.hypergraph = hypergraph.map(PathBuf::from);
            }
            cfg.fill_flag(&mut a.realize, "realize")?;
            cfg.fill(&mut a.eta, "eta")?;
            cfg.fill(&mut a.axes, "axes")?;
            cfg.fill(&mut a.max_dim, "max-dim")?;
            cfg
        }
        Command::Realize(a) => {
            let mut cfg = merge_common(&mut a.common)?;
            let mut hypergraph: Option<String> = None;
            cfg.fill(&mut hypergraph, "hypergraph")?;
            if a.hypergraph.is_none() {
                a.hypergraph = hypergraph.map(PathBuf::from);
            }
            cfg.fill(&mut a.max_dim, "max-dim")?;
            cfg
        }
        Command::Ks(a) => {
            let mut cfg = merge_common(&mut a.common)?;
            cfg.fill(&mut a.builtin, "builtin")?;
            let mut hypergraph: Option<String> = None;
            cfg.fill(&mut hypergraph, "hypergraph")?;
            if a.hypergraph.is_none() {
                a.hypergraph = hypergraph.map(PathBuf::from);
            }
            cfg.fill(&mut a.report, "report")?;
            cfg.fill_flag(&mut a.rays, "rays")?;
            cfg.fill(&mut a.noise_curve, "noise-curve")?;
            cfg
        }
        Command::Specker(a) => {
            let mut cfg = merge_common(&mut a.common)?;
            cfg.fill(&mut a.eta, "eta")?;
            cfg.fill(&mut a.stats, "stats")?;
            cfg.fill(&mut a.sweep, "sweep")?;
            cfg
        }
        Command::Ncycle(a) => {
            let mut cfg = merge_common(&mut a.common)?;
            cfg.fill(&mut a.n, "n")?;
            cfg.fill(&mut a.eta0, "eta0")?;
            cfg.fill(&mut a.sweep, "sweep")?;
            cfg
        }
        Command::Fcf(a) => {
            let mut cfg = merge_common(&mut a.common)?;
            cfg.fill(&mut a.synthesize, "synthesize")?;
            let mut input: Option<String> = None;
            cfg.fill(&mut input, "input")?;
            if a.input.is_none() {
                a.input = input.map(PathBuf::from);
            }
            cfg.fill(&mut a.m_t, "m-t")?;
            cfg.fill_flag(&mut a.fixtures, "fixtures")?;
            cfg.fill_flag(&mut a.polygon, "polygon")?;
            cfg.fill_flag(&mut a.ideal, "ideal")?;
            cfg
        }
        Command::QviolTable(a) => {
            let mut cfg = merge_common(&mut a.common)?;
            cfg.fill(&mut a.n, "n")?;
            cfg
        }
        Command::Chsh(a) => {
            let mut cfg = merge_common(&mut a.common)?;
            cfg.fill(&mut a.sweep, "sweep")?;
            cfg
        }
    };
    // Treat leftovers as typos no matter which subcommand consumed the rest.
    std::mem::take(&mut cfg).finish()
}

// ---------------------------------------------------------------------------
// Dimension caps
// ---------------------------------------------------------------------------

/// Dimension caps used by enumeration and realization. The environment
/// variable `CONTEXTLAB_MAX_DIM` overrides both; an explicit `--max-dim` flag
/// beats the environment.
#[derive(Debug, Clone, Copy)]
pub struct Caps {
    /// Total Hilbert-space dimension allowed for realizations.
    pub hilbert: usize,
    /// Polytope dimension allowed for vertex enumeration.
    pub polytope: usize,
}

pub fn caps_from_env() -> CliResult<Caps> {
    let mut caps = Caps {
        hilbert: contextlab_core::quantum::DEFAULT_MAX_DIM,
        polytope: contextlab_core::polytope::DEFAULT_DIM_CAP,
    };
    if let Ok(raw) = std::env::var("CONTEXTLAB_MAX_DIM") {
        let v: usize = raw
            .parse()
            .map_err(|e| usage(format!("CONTEXTLAB_MAX_DIM={raw:?} is not a dimension: {e}")))?;
        caps.hilbert = v;
        caps.polytope = v;
    }
    Ok(caps)
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parse arguments and run; returns the process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Domain(e)) => {
            print!("{}", error_json(&e));
            2
        }
    }
}

/// Merge config, dispatch, and write the artifact; `Ok` carries the exit
/// code (0, or the selftest verdict).
pub fn run(mut cli: Cli) -> CliResult<i32> {
    merge_config(&mut cli.command)?;
    let caps = caps_from_env()?;

    let (common, artifact): (&CommonOpts, String) = match &cli.command {
        Command::Jm(args) => {
            if args.common.selftest {
                return Ok(selftest::run("jm"));
            }
            (&args.common, commands::jm(args, caps)?)
        }
        Command::Realize(args) => {
            if args.common.selftest {
                return Ok(selftest::run("realize"));
            }
            (&args.common, commands::realize(args, caps)?)
        }
        Command::Ks(args) => {
            if args.common.selftest {
                return Ok(selftest::run("ks"));
            }
            (&args.common, commands::ks(args, caps)?)
        }
        Command::Specker(args) => {
            if args.common.selftest {
                return Ok(selftest::run("specker"));
            }
            (&args.common, commands::specker(args)?)
        }
        Command::Ncycle(args) => {
            if args.common.selftest {
                return Ok(selftest::run("ncycle"));
            }
            (&args.common, commands::ncycle(args)?)
        }
        Command::Fcf(args) => {
            if args.common.selftest {
                return Ok(selftest::run("fcf"));
            }
            (&args.common, commands::fcf(args)?)
        }
        Command::QviolTable(args) => {
            if args.common.selftest {
                return Ok(selftest::run("qviol-table"));
            }
            (&args.common, commands::qviol_table(args)?)
        }
        Command::Chsh(args) => {
            if args.common.selftest {
                return Ok(selftest::run("chsh"));
            }
            (&args.common, commands::chsh(args)?)
        }
    };

    match &common.output {
        Some(path) => crate::io::atomic_write(path, &artifact).map_err(usage)?,
        None => print!("{artifact}"),
    }
    Ok(0)
}
