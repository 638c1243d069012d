//! The `satnet` command line.
//!
//! One input file, one subcommand, JSON or CSV out. Exit codes: 0 success,
//! 1 invalid input, 2 solver failure, 3 usage error. Failures print one JSON
//! line on stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::dynamics::{simulate, write_trajectory_csv, DEFAULT_DT, DEFAULT_T_END};
use crate::error::Error;
use crate::format::{parse_input, parse_list, to_json, Input, NetworkFile};
use crate::graph::{decompose, deficiency_set, Sink};
use crate::model::{from_liabilities, Network, Violation};
use crate::shock::{max_jump_norm, sweep, systemic_loss, write_sweep_csv, ShockRay};
use crate::solver::{equilibrium_bounds, node_partition, NodePartition, SolveOptions};
use crate::structure::{classify, equilibrium_set};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: io::Error,
    },
    #[error(transparent)]
    Lib(#[from] Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 3,
            Failure::Io { .. } => 1,
            Failure::Lib(e) => match e {
                Error::Dimension { .. } | Error::InvalidNetwork(_) | Error::Input(_) => 1,
                Error::NonConvergence { .. } | Error::Inconsistent(_) | Error::NotCritical => 2,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Io { .. } => "io",
            Failure::Lib(e) => match e {
                Error::Dimension { .. } => "dimension",
                Error::InvalidNetwork(_) => "invalid_network",
                Error::Input(_) => "invalid_input",
                Error::NonConvergence { .. } => "non_convergence",
                Error::Inconsistent(_) => "inconsistent",
                Error::NotCritical => "not_critical",
            },
        }
    }

    /// `{"error": kind, "exit": code, "message": text}` on one line.
    pub fn diagnostic(&self) -> String {
        json!({"error": self.kind(), "exit": self.exit_code(), "message": self.to_string()}).to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Norm {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "inf")]
    Inf,
}

impl Norm {
    fn exponent(self) -> f64 {
        match self {
            Norm::One => 1.0,
            Norm::Two => 2.0,
            Norm::Inf => f64::INFINITY,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Norm::One => "1",
            Norm::Two => "2",
            Norm::Inf => "inf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check a network file and list violations
    Validate,
    /// Turn a liability file into a network file
    Convert,
    /// Transient part and trapping sets
    Decompose,
    /// Minimal and maximal equilibria with the node partition
    Solve,
    /// Per trapping set uniqueness report
    Classify,
    /// The full set of equilibria
    Set,
    /// Systemic loss of moving from --c0 to the flow
    Loss,
    /// Largest jump norm over all flows
    Jump,
    /// Shock ray sweep as CSV
    Sweep,
    /// Flow dynamics trajectory as CSV
    Simulate,
}

fn list(s: &str) -> Result<Vec<f64>, String> {
    parse_list(s).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "satnet", version, about = "Equilibria of saturated linear networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Network or liability JSON file
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Write here instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Exogenous flow, overriding the file
    #[arg(long, global = true, value_parser = list, allow_hyphen_values = true)]
    pub c: Option<std::vec::Vec<f64>>,
    /// Baseline flow of a shock
    #[arg(long, global = true, value_parser = list, allow_hyphen_values = true)]
    pub c0: Option<std::vec::Vec<f64>>,
    /// Shock direction, c(eps) = c0 - eps q
    #[arg(long, global = true, value_parser = list, allow_hyphen_values = true)]
    pub q: Option<std::vec::Vec<f64>>,
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    pub eps_lo: f64,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps_hi: Option<f64>,
    #[arg(long, global = true, default_value_t = 101)]
    pub grid: usize,
    /// Norm for `jump`; all three when omitted
    #[arg(long, global = true)]
    pub p: Option<Norm>,
    #[arg(long, global = true)]
    pub tol_fp: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub tol_class: Option<f64>,
    /// Where `sweep` writes its crossings JSON
    #[arg(long, global = true)]
    pub crossings: Option<PathBuf>,
    /// Initial state for `simulate` (default 0)
    #[arg(long, global = true, value_parser = list, allow_hyphen_values = true)]
    pub x0: Option<std::vec::Vec<f64>>,
    #[arg(long, global = true, default_value_t = DEFAULT_T_END)]
    pub t_end: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    /// Accept shock directions with negative entries
    #[arg(long, global = true)]
    pub allow_signed_shock: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub crossings: Option<PathBuf>,
    pub c: Option<Vec<f64>>,
    pub c0: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub eps_lo: f64,
    pub eps_hi: Option<f64>,
    pub grid: usize,
    pub norm: Option<Norm>,
    pub x0: Option<Vec<f64>>,
    pub t_end: f64,
    pub dt: f64,
    pub opts: SolveOptions,
    pub allow_signed: bool,
}

impl RunConfig {
    pub fn new(command: Command, input: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            input: input.into(),
            output: None,
            crossings: None,
            c: None,
            c0: None,
            q: None,
            eps_lo: 0.0,
            eps_hi: None,
            grid: 101,
            norm: None,
            x0: None,
            t_end: DEFAULT_T_END,
            dt: DEFAULT_DT,
            opts: SolveOptions::default(),
            allow_signed: false,
        }
    }
}

impl TryFrom<Cli> for RunConfig {
    type Error = Failure;

    fn try_from(cli: Cli) -> Result<Self, Failure> {
        let input = cli.input.ok_or_else(|| Failure::Usage("--input is required".into()))?;
        let mut opts = SolveOptions::default();
        if let Some(t) = cli.tol_fp {
            opts.tol_fp = t;
        }
        if let Some(m) = cli.max_iter {
            opts.max_iter = m;
        }
        if let Some(t) = cli.tol_class {
            opts.tol_class = t;
        } else if opts.tol_class < opts.tol_fp {
            opts.tol_class = opts.tol_fp;
        }
        opts.check().map_err(|e| Failure::Usage(e.to_string()))?;
        if cli.command == Command::Sweep && cli.grid < 2 {
            return Err(Failure::Usage("--grid must be at least 2".into()));
        }
        Ok(RunConfig {
            command: cli.command,
            input,
            output: cli.output,
            crossings: cli.crossings,
            c: cli.c,
            c0: cli.c0,
            q: cli.q,
            eps_lo: cli.eps_lo,
            eps_hi: cli.eps_hi,
            grid: cli.grid,
            norm: cli.p,
            x0: cli.x0,
            t_end: cli.t_end,
            dt: cli.dt,
            opts,
            allow_signed: cli.allow_signed_shock,
        })
    }
}

fn read_input(config: &RunConfig) -> Result<Input, Failure> {
    let text = fs::read_to_string(&config.input)
        .map_err(|source| Failure::Io { path: config.input.display().to_string(), source })?;
    Ok(parse_input(&text)?)
}

/// The network and flow an input describes. The flow is `--c`, else the
/// file's `c`, else `a - b` for liability files, else zero.
fn load(config: &RunConfig) -> Result<(Network, Vec<f64>), Failure> {
    let (net, file_c) = match read_input(config)? {
        Input::Network { net, c } => (net, c),
        Input::Liabilities(data) => {
            let (net, c) = from_liabilities(&data)?;
            (net, Some(c))
        }
    };
    let c = config.c.clone().or(file_c).unwrap_or_else(|| vec![0.0; net.n()]);
    net.check_vector("c", &c)?;
    Ok((net, c))
}

fn required<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T, Failure> {
    v.as_ref().ok_or_else(|| Failure::Usage(format!("{flag} is required for this command")))
}

#[derive(Serialize)]
struct ValidateOut<'a> {
    valid: bool,
    violations: &'a [Violation],
}

#[derive(Serialize)]
struct DecomposeOut {
    transient: Vec<usize>,
    sinks: Vec<Sink>,
    deficient_rows: Vec<usize>,
}

#[derive(Serialize)]
struct SolveOut {
    x_min: Vec<f64>,
    x_max: Vec<f64>,
    residual_min: f64,
    residual_max: f64,
    partition: NodePartition,
}

#[derive(Serialize)]
struct LossOut {
    loss_min: f64,
    loss_max: f64,
    x_min: Vec<f64>,
    x_max: Vec<f64>,
}

#[derive(Serialize)]
struct JumpOut {
    max_jump_norm: BTreeMap<&'static str, f64>,
}

fn emit(config: &RunConfig, stdout: &mut dyn Write, body: &[u8]) -> Result<(), Failure> {
    match &config.output {
        Some(path) => fs::write(path, body)
            .map_err(|source| Failure::Io { path: path.display().to_string(), source }),
        None => stdout
            .write_all(body)
            .map_err(|source| Failure::Io { path: "<stdout>".into(), source }),
    }
}

fn emit_json<T: Serialize>(config: &RunConfig, stdout: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let mut text = to_json(value)?;
    text.push('\n');
    emit(config, stdout, text.as_bytes())
}

/// Runs one subcommand, writing its artifact to `--output` or `stdout`.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    config.opts.check()?;
    let opts = &config.opts;
    match config.command {
        Command::Validate => {
            let (net, _) = load(config)?;
            let report = net.validate();
            emit_json(config, stdout, &ValidateOut { valid: report.is_valid(), violations: &report.violations })?;
            if !report.is_valid() {
                return Err(Error::InvalidNetwork(report).into());
            }
        }
        Command::Convert => {
            let (net, c) = load(config)?;
            net.ensure_valid()?;
            emit_json(config, stdout, &NetworkFile::new(&net, Some(&c)))?;
        }
        Command::Decompose => {
            let (net, _) = load(config)?;
            net.ensure_valid()?;
            let d = decompose(&net);
            let out = DecomposeOut { transient: d.transient, sinks: d.sinks, deficient_rows: deficiency_set(&net) };
            emit_json(config, stdout, &out)?;
        }
        Command::Solve => {
            let (net, c) = load(config)?;
            let (lo, hi) = equilibrium_bounds(&net, &c, opts)?;
            let partition = node_partition(&net, &c, &lo.x, opts)?;
            let out = SolveOut {
                residual_min: lo.residual,
                residual_max: hi.residual,
                x_min: lo.x,
                x_max: hi.x,
                partition,
            };
            emit_json(config, stdout, &out)?;
        }
        Command::Classify => {
            let (net, c) = load(config)?;
            emit_json(config, stdout, &classify(&net, &c, opts)?)?;
        }
        Command::Set => {
            let (net, c) = load(config)?;
            emit_json(config, stdout, &equilibrium_set(&net, &c, opts)?)?;
        }
        Command::Loss => {
            let (net, c) = load(config)?;
            let c0 = required(&config.c0, "--c0")?;
            let (lo, hi) = equilibrium_bounds(&net, &c, opts)?;
            let out = LossOut {
                loss_min: systemic_loss(&net, c0, &c, &hi.x)?,
                loss_max: systemic_loss(&net, c0, &c, &lo.x)?,
                x_min: lo.x,
                x_max: hi.x,
            };
            emit_json(config, stdout, &out)?;
        }
        Command::Jump => {
            let (net, _) = load(config)?;
            let norms = match config.norm {
                Some(p) => vec![p],
                None => vec![Norm::One, Norm::Two, Norm::Inf],
            };
            let mut out = JumpOut { max_jump_norm: BTreeMap::new() };
            for p in norms {
                out.max_jump_norm.insert(p.label(), max_jump_norm(&net, p.exponent())?);
            }
            emit_json(config, stdout, &out)?;
        }
        Command::Sweep => {
            let (net, c) = load(config)?;
            let q = required(&config.q, "--q")?.clone();
            let eps_hi = *required(&config.eps_hi, "--eps-hi")?;
            let c0 = config.c0.clone().unwrap_or(c);
            let mut ray = ShockRay { c0, q, eps_lo: config.eps_lo, eps_hi, grid: config.grid, allow_signed: false };
            if config.allow_signed {
                ray = ray.signed();
            }
            let report = sweep(&net, &ray, opts)?;
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, net.n(), &report.records)
                .map_err(|source| Failure::Io { path: "<buffer>".into(), source })?;
            emit(config, stdout, &buf)?;
            if let Some(path) = &config.crossings {
                let mut text = to_json(&report.crossings)?;
                text.push('\n');
                fs::write(path, text)
                    .map_err(|source| Failure::Io { path: path.display().to_string(), source })?;
            }
        }
        Command::Simulate => {
            let (net, c) = load(config)?;
            net.ensure_valid()?;
            let x0 = config.x0.clone().unwrap_or_else(|| vec![0.0; net.n()]);
            let traj = simulate(&net, &c, &x0, config.t_end, config.dt)?;
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &traj)
                .map_err(|source| Failure::Io { path: "<buffer>".into(), source })?;
            emit(config, stdout, &buf)?;
        }
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            let _ = writeln!(stderr, "{}", Failure::Usage(first.to_string()).diagnostic());
            return 3;
        }
    };
    let result = RunConfig::try_from(cli).and_then(|config| run(&config, stdout));
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "{}", f.diagnostic());
            f.exit_code()
        }
    }
}
