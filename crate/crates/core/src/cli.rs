//! Command-line driver: resolves an [`ExperimentSpec`] from flags, an optional TOML
//! file and built-in defaults, runs it and renders CSV or JSON.
//!
//! Precedence is flags, then the config file, then defaults. Exit codes: 0 success,
//! 1 invalid input, 2 numerical failure, 3 I/O failure. Errors are written to stderr
//! as a single JSON object.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::channel::NetworkConfig;
use crate::error::{Error, Result};
use crate::latency::{self, estimate_enumeration_cost, DEFAULT_TAIL_TOL};
use crate::simulator::{self, ProtocolKind};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_501;

const ANALYTIC_COLUMNS: [&str; 12] = [
    "snr_db", "radius", "n_nodes", "protocol", "source", "mean_k", "std_err", "ci_low", "ci_high", "k_prime",
    "tail_mass", "seed",
];
const SWEEP_COLUMNS: [&str; 7] = ["rho", "radius", "n_nodes", "protocol", "mean_k", "std_err", "seed"];
const COST_COLUMNS: [&str; 7] = ["n_nodes", "k_prime", "ops_per_eval", "operations", "overflow", "feasible", "advice"];

#[derive(Debug, Parser)]
#[command(name = "bcast-latency", version, about = "Broadcast latency in finite wireless networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected latency from the Markov-chain model.
    Analytic(ExperimentArgs),
    /// Monte-Carlo estimate of the latency.
    Simulate(ExperimentArgs),
    /// Analytic and simulated rows side by side.
    Compare(ExperimentArgs),
    /// Simulated latency over a (density, radius) grid; N = ceil(rho pi R^2).
    SweepDensity(ExperimentArgs),
    /// Operation count of the enumeration formula.
    CostEstimate(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Analytic,
    Simulate,
    Compare,
    SweepDensity,
    CostEstimate,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// TOML file with any of the flag names as keys (underscores instead of dashes).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<u32>,
    /// Cell radius, or a comma-separated list.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub radius: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub dims: Option<u32>,
    /// Data rate in bits/s/Hz.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long, conflicts_with = "snr_grid", allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// `start:stop:step` (inclusive) or a comma-separated list, in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_grid: Option<String>,
    /// Fixes the decoding threshold instead of deriving it from rate and SNR.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// `cooperative`, `non-cooperative` or `both`.
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// Node densities for `sweep-density`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub rho_grid: Option<Vec<f64>>,
    /// Truncation point for `cost-estimate`.
    #[arg(long)]
    pub k_prime: Option<u64>,
    /// Operations per probability evaluation for `cost-estimate`.
    #[arg(long)]
    pub ops_per_eval: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

/// A scalar, a list, or (for SNR grids) a range string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NumList {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl NumList {
    fn resolve(self, what: &str) -> Result<Vec<f64>> {
        match self {
            NumList::One(v) => Ok(vec![v]),
            NumList::Many(v) => Ok(v),
            NumList::Text(s) if what == "snr_grid" => parse_grid(&s),
            NumList::Text(s) => Err(Error::Validation(format!("{what}: expected numbers, got {s:?}"))),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    nodes: Option<u32>,
    radius: Option<NumList>,
    alpha: Option<f64>,
    dims: Option<u32>,
    rate: Option<f64>,
    snr_db: Option<f64>,
    snr_grid: Option<NumList>,
    threshold: Option<f64>,
    protocol: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    tail_tol: Option<f64>,
    rho_grid: Option<NumList>,
    k_prime: Option<u64>,
    ops_per_eval: Option<u64>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
}

/// Fully resolved experiment; embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub n_nodes: u32,
    pub radius: Vec<f64>,
    pub alpha: f64,
    pub dims: u32,
    pub rate: f64,
    pub snr_grid: Vec<f64>,
    pub threshold: Option<f64>,
    pub protocols: Vec<ProtocolKind>,
    pub n_trials: usize,
    pub seed: u64,
    pub tail_tol: f64,
    pub rho_grid: Vec<f64>,
    pub k_prime: u64,
    pub ops_per_eval: u64,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
}

/// Parses `start:stop:step` (inclusive) or `a,b,c`. An empty string gives an empty grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Validation(format!("not a number in grid: {s:?}")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Validation(format!("range grid must be start:stop:step, got {text:?}")));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
            return Err(Error::Validation(format!("bad range grid {text:?}")));
        }
        if stop < start {
            return Ok(Vec::new());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(Error::Validation(format!("grid {text:?} has {count} points")));
        }
        // round away the accumulated binary noise so the printed grid is clean
        return Ok((0..count).map(|i| round_sig(start + i as f64 * step)).collect());
    }
    text.split(',').map(num).collect()
}

fn round_sig(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// `%g`-style rendering with 12 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    let decimals = (11 - exp).max(0) as usize;
    let fixed = format!("{v:.decimals$}");
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

fn parse_protocols(s: &str) -> Result<Vec<ProtocolKind>> {
    match s.trim() {
        "both" => Ok(ProtocolKind::ALL.to_vec()),
        other => Ok(vec![other.parse()?]),
    }
}

impl ExperimentSpec {
    /// Layers `args` over the file named by `args.config` over the mode defaults.
    pub fn resolve(mode: Mode, args: &ExperimentArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| Error::Validation(format!("config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let sweep = mode == Mode::SweepDensity;
        let cost = mode == Mode::CostEstimate;

        if sweep && (args.nodes.is_some() || file.nodes.is_some()) {
            return Err(Error::Validation(
                "sweep-density derives the node count from the density; drop --nodes".into(),
            ));
        }

        let radius = match (&args.radius, file.radius) {
            (Some(r), _) => r.clone(),
            (None, Some(r)) => r.resolve("radius")?,
            (None, None) if sweep => vec![1.0, 1.5, 2.0, 2.5, 3.0],
            (None, None) => vec![1.0, 2.0, 3.0],
        };
        let snr_grid = if let Some(db) = args.snr_db {
            vec![db]
        } else if let Some(g) = &args.snr_grid {
            parse_grid(g)?
        } else if let Some(db) = file.snr_db {
            vec![db]
        } else if let Some(g) = file.snr_grid {
            g.resolve("snr_grid")?
        } else if sweep {
            vec![5.0]
        } else {
            parse_grid("0:20:1")?
        };
        let rho_grid = match (&args.rho_grid, file.rho_grid) {
            (Some(r), _) => r.clone(),
            (None, Some(r)) => r.resolve("rho_grid")?,
            (None, None) => vec![0.25, 0.5, 1.0, 2.0],
        };
        let protocols = match args.protocol.as_deref().or(file.protocol.as_deref()) {
            Some(p) => parse_protocols(p)?,
            None => ProtocolKind::ALL.to_vec(),
        };

        let spec = Self {
            mode,
            n_nodes: args.nodes.or(file.nodes).unwrap_or(if cost { 10 } else { 5 }),
            radius,
            alpha: args.alpha.or(file.alpha).unwrap_or(2.0),
            dims: args.dims.or(file.dims).unwrap_or(2),
            rate: args.rate.or(file.rate).unwrap_or(1.0),
            snr_grid,
            threshold: args.threshold.or(file.threshold),
            protocols,
            n_trials: args.trials.or(file.trials).unwrap_or(1000),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            tail_tol: args.tail_tol.or(file.tail_tol).unwrap_or(DEFAULT_TAIL_TOL),
            rho_grid,
            k_prime: args.k_prime.or(file.k_prime).unwrap_or(25),
            ops_per_eval: args.ops_per_eval.or(file.ops_per_eval).unwrap_or(50),
            output_path: args.out.clone().or(file.out),
            output_format: args.format.or(file.format).unwrap_or(OutputFormat::Csv),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let v = |m: &str| Err(Error::Validation(m.into()));
        match self.mode {
            Mode::CostEstimate => {
                if self.n_nodes < 1 || self.k_prime < 1 || self.ops_per_eval < 1 {
                    return v("cost-estimate needs positive --nodes, --k-prime and --ops-per-eval");
                }
                return Ok(());
            }
            Mode::SweepDensity => {
                if self.snr_grid.len() != 1 {
                    return v("sweep-density runs at a single SNR; use --snr-db");
                }
                if self.rho_grid.is_empty() {
                    return v("density grid is empty");
                }
                if let Some(r) = self.rho_grid.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
                    return Err(Error::Validation(format!("density must be positive, got {r}")));
                }
                if self.dims != 2 {
                    return v("sweep-density needs --dims 2");
                }
            }
            _ => {}
        }
        if self.snr_grid.is_empty() {
            return v("SNR grid is empty");
        }
        if self.radius.is_empty() {
            return v("radius list is empty");
        }
        if self.protocols.is_empty() {
            return v("no protocol selected");
        }
        if self.n_trials < 1 && self.mode != Mode::Analytic {
            return v("--trials must be at least 1");
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(Error::Validation(format!("--tail-tol must be in (0, 1), got {}", self.tail_tol)));
        }
        if self.mode != Mode::SweepDensity {
            // builds every config up front so bad parameters fail before any work
            self.configs()?;
        } else {
            for &r in &self.radius {
                self.config(1, r, self.snr_grid[0])?;
            }
        }
        Ok(())
    }

    fn config(&self, n_nodes: u32, radius: f64, snr_db: f64) -> Result<NetworkConfig> {
        let cfg = NetworkConfig::with_snr_db(n_nodes, radius, self.dims, self.alpha, self.rate, snr_db)?;
        match self.threshold {
            Some(t) => cfg.with_threshold(t),
            None => Ok(cfg),
        }
    }

    /// `(snr_db, radius, config)` in output order: SNR outermost.
    fn configs(&self) -> Result<Vec<(f64, f64, NetworkConfig)>> {
        let mut out = Vec::with_capacity(self.snr_grid.len() * self.radius.len());
        for &snr in &self.snr_grid {
            for &r in &self.radius {
                out.push((snr, r, self.config(self.n_nodes, r, snr)?));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) if v.is_finite() => Value::from(round_sig(*v)),
            Cell::Float(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

/// Result table of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

fn analytic_row(spec: &ExperimentSpec, snr: f64, radius: f64, proto: ProtocolKind) -> Result<Vec<Cell>> {
    let cfg = spec.config(spec.n_nodes, radius, snr)?;
    let res = latency::expected_latency(&cfg, proto, spec.tail_tol)?;
    Ok(vec![
        Cell::Float(snr),
        Cell::Float(radius),
        Cell::Int(spec.n_nodes.into()),
        Cell::Text(proto.to_string()),
        Cell::Text("analytic".into()),
        Cell::Float(res.expected_k),
        Cell::Empty,
        Cell::Empty,
        Cell::Empty,
        Cell::Int(res.k_prime as u64),
        Cell::Float(res.tail_mass),
        Cell::Empty,
    ])
}

fn simulated_row(spec: &ExperimentSpec, snr: f64, radius: f64, proto: ProtocolKind) -> Result<Vec<Cell>> {
    let cfg = spec.config(spec.n_nodes, radius, snr)?;
    let s = simulator::run_batch(&cfg, proto, spec.n_trials, spec.seed)?;
    Ok(vec![
        Cell::Float(snr),
        Cell::Float(radius),
        Cell::Int(spec.n_nodes.into()),
        Cell::Text(proto.to_string()),
        Cell::Text("simulated".into()),
        Cell::Float(s.mean_k),
        Cell::Float(s.std_err),
        Cell::Float(s.ci95.0),
        Cell::Float(s.ci95.1),
        Cell::Empty,
        Cell::Empty,
        Cell::Int(s.seed),
    ])
}

/// Runs the experiment and returns its table. Every batch uses the configured seed, so the
/// two protocols see common random numbers at each grid point.
pub fn execute(spec: &ExperimentSpec) -> Result<Table> {
    match spec.mode {
        Mode::Analytic | Mode::Simulate | Mode::Compare => {
            let mut rows = Vec::new();
            for (snr, radius, _) in spec.configs()? {
                for &proto in &spec.protocols {
                    if spec.mode != Mode::Simulate {
                        rows.push(analytic_row(spec, snr, radius, proto)?);
                    }
                    if spec.mode != Mode::Analytic {
                        rows.push(simulated_row(spec, snr, radius, proto)?);
                    }
                }
            }
            Ok(Table { columns: &ANALYTIC_COLUMNS, rows })
        }
        Mode::SweepDensity => {
            let template = spec.config(1, spec.radius[0], spec.snr_grid[0])?;
            let mut rows = Vec::new();
            for &rho in &spec.rho_grid {
                let per_proto = spec
                    .protocols
                    .iter()
                    .map(|&p| simulator::run_density_sweep(rho, &spec.radius, &template, p, spec.n_trials, spec.seed))
                    .collect::<Result<Vec<_>>>()?;
                for i in 0..spec.radius.len() {
                    for (proto, points) in spec.protocols.iter().zip(&per_proto) {
                        let pt = &points[i];
                        rows.push(vec![
                            Cell::Float(pt.rho),
                            Cell::Float(pt.radius),
                            Cell::Int(pt.n_nodes.into()),
                            Cell::Text(proto.to_string()),
                            Cell::Float(pt.summary.mean_k),
                            Cell::Float(pt.summary.std_err),
                            Cell::Int(pt.summary.seed),
                        ]);
                    }
                }
            }
            Ok(Table { columns: &SWEEP_COLUMNS, rows })
        }
        Mode::CostEstimate => {
            let est = estimate_enumeration_cost(spec.n_nodes.into(), spec.k_prime, spec.ops_per_eval)?;
            let advice = if est.feasible() {
                "enumeration feasible"
            } else {
                "enumeration infeasible; use markov_dp"
            };
            let rows = vec![vec![
                Cell::Int(spec.n_nodes.into()),
                Cell::Int(spec.k_prime),
                Cell::Int(spec.ops_per_eval),
                Cell::Float(est.operations),
                Cell::Bool(est.overflow),
                Cell::Bool(est.feasible()),
                Cell::Text(advice.into()),
            ]];
            Ok(Table { columns: &COST_COLUMNS, rows })
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV with `# spec: {...}` and `# columns: ...` metadata lines before the header.
pub fn render_csv(spec: &ExperimentSpec, table: &Table) -> String {
    let mut out = String::new();
    let spec_json = serde_json::to_string(spec).expect("spec serializes");
    let _ = writeln!(out, "# spec: {spec_json}");
    let _ = writeln!(out, "# floats: 12 significant digits; empty cells do not apply to the row's source");
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|c| csv_field(&c.csv())).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// `{"spec": {...}, "rows": [{column: value}, ...]}`.
pub fn render_json(spec: &ExperimentSpec, table: &Table) -> String {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(k, c)| ((*k).to_string(), c.json()))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let mut top = Map::new();
    top.insert("spec".into(), serde_json::to_value(spec).expect("spec serializes"));
    top.insert("rows".into(), Value::Array(rows));
    let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("json");
    s.push('\n');
    s
}

pub fn render(spec: &ExperimentSpec, table: &Table) -> String {
    match spec.output_format {
        OutputFormat::Csv => render_csv(spec, table),
        OutputFormat::Json => render_json(spec, table),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 3,
        e if e.is_numeric() => 2,
        _ => 1,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Io(_) => "io",
        Error::Validation(_) => "validation",
        Error::Domain(_) => "domain",
        _ => "numeric",
    }
}

fn report_error(kind: &str, message: &str, code: i32) {
    let record = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{record}");
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Resolves, executes and writes one subcommand.
pub fn run(command: &Command) -> Result<()> {
    let (mode, args) = match command {
        Command::Analytic(a) => (Mode::Analytic, a),
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Compare(a) => (Mode::Compare, a),
        Command::SweepDensity(a) => (Mode::SweepDensity, a),
        Command::CostEstimate(a) => (Mode::CostEstimate, a),
    };
    let spec = ExperimentSpec::resolve(mode, args)?;
    let table = execute(&spec)?;
    write_output(spec.output_path.as_deref(), &render(&spec, &table))
}

/// Entry point for the binary; returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            report_error("validation", e.to_string().trim(), 1);
            return 1;
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            report_error(error_kind(&e), &e.to_string(), code);
            code
        }
    }
}
