//! Command-line front end of the `marginals` binary.
//!
//! Each subcommand reads a flat key-value section of a TOML config file
//! (`[scaling]`, `[tail]`, ...), applies `--set key=value` overrides and the
//! `--seed`/`--workers` flags, runs the matching experiment and writes a CSV or
//! JSON report atomically.
//!
//! A CSV report starts with `# `-prefixed manifest lines holding the artifact
//! version, the subcommand and the fully resolved config, followed by an
//! RFC 4180 table and, for some subcommands, a trailing `# `-prefixed block.
//! A report file is itself a valid `--config`: rerunning from it reproduces
//! the report.
//!
//! Exit status: 0 on success, 2 for config or I/O errors, 3 for numerical
//! failures.
//!
//! ## Keys
//!
//! | Subcommand | Required | Optional (default) |
//! |---|---|---|
//! | `w1` | `sample` or `sample_file` | `reference` (`std_normal`), `method` (`exact`) |
//! | `scaling` | `d`, `index_set`, `n_grid`, `trials`, `seed` | `generator`, `reference`, `workers`, `width_trials`, `statistic` (`deviation`), `aggregate` (`mean`) |
//! | `tail` | as `scaling` | `delta_grid`, `direction` (0), `c2` (1.0) |
//! | `width` | as `scaling` | `c_lower` (0.1) |
//! | `check-assumption` | as `scaling` | `theta` (0.0), `theta_width_factor`, `b_target` |
//! | `lipschitz` | as `scaling` | `family_size` (64) |
//! | `gamma2` | `d`, `index_set`, `seed` | `width_trials` (2000) |
//!
//! Shared optional keys: `generator` (`std_gaussian`), `reference`
//! (`std_normal`), `workers` (0, one per core), `width_trials` (2000).
//!
//! ## Columns
//!
//! | Subcommand | Columns |
//! |---|---|
//! | `w1` | `n, value, method, estimated_error` |
//! | `scaling` | `n, mean, sd, median, max, trials` |
//! | `tail` | `n, delta, upper_frequency, lower_frequency, upper_log_rate, lower_log_rate, trials` |
//! | `width` | `n, trial, w1_sup, mean_sup, holds, above_threshold` |
//! | `check-assumption` | `n, trial, theta, fitted_b, pairs_tested, violated` |
//! | `lipschitz` | `n, trial, max_gap, w1_sup, duality_holds, tightness, mean_sup, contraction_ratio` |
//! | `gamma2` | `points, dim, gamma2_upper, sudakov_lower, width, width_stderr, depth` |

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use crate::distribution::ReferenceDistribution;
use crate::empirical::Sample;
use crate::ensembles::{GeneratorKind, IndexSetSpec};
use crate::error::Error;
use crate::experiments::{self, median, Aggregate, ExperimentConfig, Statistic};
use crate::wasserstein::{w1_cdf_quadrature, w1_empirical_analytic};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "marginals", version, about = "Sorted-marginal and Wasserstein-1 experiments on random ensembles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// W1 between one sample and a reference law.
    W1(RunArgs),
    /// Sup-deviation statistics across sample sizes with a log-log fit.
    Scaling(RunArgs),
    /// Upper and lower tail frequencies over a Δ grid.
    Tail(RunArgs),
    /// Per-trial W1 sup against the mean-direction lower bound.
    Width(RunArgs),
    /// Chaining upper bound, Sudakov lower bound and Gaussian width.
    Gamma2(RunArgs),
    /// Fitted norm-compatibility constant per trial.
    CheckAssumption(RunArgs),
    /// Lipschitz-class deviation against the W1 sup per trial.
    Lipschitz(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML config with a section named after the subcommand, or an earlier report.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// `key=value` override, repeatable. Values use TOML syntax; bare words are strings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubcommandKind {
    W1,
    Scaling,
    Tail,
    Width,
    Gamma2,
    CheckAssumption,
    Lipschitz,
}

impl SubcommandKind {
    pub fn name(self) -> &'static str {
        match self {
            SubcommandKind::W1 => "w1",
            SubcommandKind::Scaling => "scaling",
            SubcommandKind::Tail => "tail",
            SubcommandKind::Width => "width",
            SubcommandKind::Gamma2 => "gamma2",
            SubcommandKind::CheckAssumption => "check-assumption",
            SubcommandKind::Lipschitz => "lipschitz",
        }
    }

    fn schema(self) -> Vec<(&'static str, Kind, Option<Value>)> {
        use Kind::*;
        let s = |v: &str| Some(Value::String(v.into()));
        let i = |v: i64| Some(Value::Integer(v));
        let f = |v: f64| Some(Value::Float(v));
        let experiment = || {
            vec![
                ("d", Int, None),
                ("index_set", Str, None),
                ("n_grid", IntList, None),
                ("trials", Int, None),
                ("seed", Int, None),
                ("generator", Str, s("std_gaussian")),
                ("reference", Str, s("std_normal")),
                ("workers", Int, i(0)),
                ("width_trials", Int, i(2000)),
            ]
        };
        let mut keys = match self {
            SubcommandKind::W1 => vec![
                ("sample", FloatList, None),
                ("sample_file", Str, None),
                ("reference", Str, s("std_normal")),
                ("method", Str, s("exact")),
            ],
            SubcommandKind::Gamma2 => {
                vec![("d", Int, None), ("index_set", Str, None), ("seed", Int, None), ("width_trials", Int, i(2000))]
            }
            _ => experiment(),
        };
        keys.extend(match self {
            SubcommandKind::Scaling => vec![("statistic", Str, s("deviation")), ("aggregate", Str, s("mean"))],
            SubcommandKind::Tail => vec![("delta_grid", FloatList, None), ("direction", Int, i(0)), ("c2", Float, f(1.0))],
            SubcommandKind::Width => vec![("c_lower", Float, f(0.1))],
            SubcommandKind::CheckAssumption => {
                vec![("theta", Float, f(0.0)), ("theta_width_factor", Float, None), ("b_target", Float, None)]
            }
            SubcommandKind::Lipschitz => vec![("family_size", Int, i(64))],
            _ => vec![],
        });
        keys
    }

    /// Keys that may be absent without a default.
    fn optional(key: &str) -> bool {
        matches!(key, "sample" | "sample_file" | "delta_grid" | "theta_width_factor" | "b_target")
    }
}

impl fmt::Display for SubcommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Float,
    Str,
    IntList,
    FloatList,
}

/// A fully described run: what the binary parsed from its arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct CliInvocation {
    pub subcommand: SubcommandKind,
    pub config_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub format: Format,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

impl From<Cli> for CliInvocation {
    fn from(cli: Cli) -> Self {
        let (subcommand, args) = match cli.command {
            Command::W1(a) => (SubcommandKind::W1, a),
            Command::Scaling(a) => (SubcommandKind::Scaling, a),
            Command::Tail(a) => (SubcommandKind::Tail, a),
            Command::Width(a) => (SubcommandKind::Width, a),
            Command::Gamma2(a) => (SubcommandKind::Gamma2, a),
            Command::CheckAssumption(a) => (SubcommandKind::CheckAssumption, a),
            Command::Lipschitz(a) => (SubcommandKind::Lipschitz, a),
        };
        CliInvocation {
            subcommand,
            config_path: args.config,
            output_path: args.output,
            overrides: args.overrides,
            format: args.format,
            seed: args.seed,
            workers: args.workers,
        }
    }
}

/// Failure of a CLI run, carrying its exit status.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::QuadratureNonConvergence { .. } | Error::Numerical(_) => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses `args` (including the program name), runs, and returns the exit status.
/// Errors are reported on standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run_cli(&cli.into()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Resolves the config, runs the experiment and writes the report.
pub fn run_cli(inv: &CliInvocation) -> CliResult<()> {
    let resolved = resolve_config(inv)?;
    let report = execute(inv.subcommand, &resolved)?;
    let text = match inv.format {
        Format::Csv => render_csv(inv.subcommand, &resolved, &report)?,
        Format::Json => render_json(inv.subcommand, &resolved, &report)?,
    };
    match &inv.output_path {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| config_err(format!("cannot write output: {e}"))),
    }
}

/// Reads the subcommand's section, applies overrides and flags, checks types
/// and fills defaults. Unknown keys and missing required keys are errors.
pub fn resolve_config(inv: &CliInvocation) -> CliResult<Table> {
    let schema = inv.subcommand.schema();
    let known = |k: &str| schema.iter().any(|(name, _, _)| *name == k);

    let mut overrides = Vec::with_capacity(inv.overrides.len());
    for o in &inv.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| config_err(format!("override `{o}` is not key=value")))?;
        let k = k.trim();
        if !known(k) {
            return Err(config_err(format!("unknown key `{k}` in override")));
        }
        overrides.push((k.to_string(), parse_override(v.trim())));
    }

    let mut table = match &inv.config_path {
        Some(path) => load_section(path, inv.subcommand)?,
        None => Table::new(),
    };
    if let Some(k) = table.keys().find(|k| !known(k)) {
        return Err(config_err(format!("unknown key `{k}` in section [{}]", inv.subcommand)));
    }
    for (k, v) in overrides {
        table.insert(k, v);
    }
    if let Some(seed) = inv.seed {
        let seed = i64::try_from(seed).map_err(|_| config_err("seed must fit in a signed 64-bit integer"))?;
        table.insert("seed".into(), Value::Integer(seed));
    }
    if let Some(w) = inv.workers {
        if !known("workers") {
            return Err(config_err(format!("`{}` takes no workers setting", inv.subcommand)));
        }
        table.insert("workers".into(), Value::Integer(w as i64));
    }

    let mut resolved = Table::new();
    for (key, kind, default) in schema {
        match table.remove(key).or(default) {
            Some(v) => {
                resolved.insert(key.to_string(), coerce(key, kind, v)?);
            }
            None if SubcommandKind::optional(key) => {}
            None => return Err(config_err(format!("missing key `{key}`"))),
        }
    }
    if inv.subcommand == SubcommandKind::W1 && !resolved.contains_key("sample") && !resolved.contains_key("sample_file") {
        return Err(config_err("missing key `sample` (or `sample_file`)"));
    }
    Ok(resolved)
}

fn parse_override(v: &str) -> Value {
    format!("v = {v}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(v.to_string()))
}

/// Loads the `[subcommand]` section of a TOML config, or the embedded config
/// of a CSV or JSON report.
fn load_section(path: &Path, sub: SubcommandKind) -> CliResult<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let trimmed = text.trim_start();
    let doc: Table = if trimmed.starts_with('{') {
        let json: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let config = json
            .get("manifest")
            .and_then(|m| m.get("config"))
            .ok_or_else(|| config_err(format!("{}: JSON report without manifest.config", path.display())))?;
        let mut doc = Table::new();
        doc.insert(sub.name().into(), json_to_toml(config)?);
        doc
    } else if trimmed.starts_with("# marginals") {
        let body: String = trimmed
            .lines()
            .skip(1)
            .map_while(|l| l.strip_prefix("# "))
            .flat_map(|l| [l, "\n"])
            .collect();
        body.parse().map_err(|e| config_err(format!("{}: bad embedded manifest: {e}", path.display())))?
    } else {
        text.parse().map_err(|e| config_err(format!("{}: {e}", path.display())))?
    };
    if let Some(found) = doc.get("subcommand").and_then(Value::as_str) {
        if found != sub.name() {
            return Err(config_err(format!("report was produced by `{found}`, not `{}`", sub.name())));
        }
    }
    match doc.get(sub.name()) {
        Some(Value::Table(t)) => Ok(t.clone()),
        Some(_) => Err(config_err(format!("[{}] is not a table", sub.name()))),
        None => Ok(Table::new()),
    }
}

fn json_to_toml(v: &serde_json::Value) -> CliResult<Value> {
    Ok(match v {
        serde_json::Value::Bool(b) => Value::Boolean(*b),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) => Value::Integer(i),
            None => Value::Float(n.as_f64().unwrap_or(f64::NAN)),
        },
        serde_json::Value::String(s) => Value::String(s.clone()),
        serde_json::Value::Array(a) => Value::Array(a.iter().map(json_to_toml).collect::<CliResult<_>>()?),
        serde_json::Value::Object(o) => {
            Value::Table(o.iter().map(|(k, v)| Ok((k.clone(), json_to_toml(v)?))).collect::<CliResult<_>>()?)
        }
        serde_json::Value::Null => return Err(config_err("null in embedded config")),
    })
}

fn coerce(key: &str, kind: Kind, v: Value) -> CliResult<Value> {
    let bad = |v: &Value| config_err(format!("key `{key}` has the wrong type: {v}"));
    let int = |v: Value| match v {
        Value::Integer(i) if i >= 0 => Ok(Value::Integer(i)),
        other => Err(bad(&other)),
    };
    let float = |v: Value| match v {
        Value::Integer(i) => Ok(Value::Float(i as f64)),
        Value::Float(x) => Ok(Value::Float(x)),
        other => Err(bad(&other)),
    };
    match kind {
        Kind::Int => int(v),
        Kind::Float => float(v),
        Kind::Str => match v {
            Value::String(_) => Ok(v),
            other => Err(bad(&other)),
        },
        Kind::IntList | Kind::FloatList => match v {
            Value::Array(items) => {
                let items = items.into_iter().map(|x| if kind == Kind::IntList { int(x) } else { float(x) });
                Ok(Value::Array(items.collect::<CliResult<_>>()?))
            }
            other => Err(bad(&other)),
        },
    }
}

fn get_u64(t: &Table, k: &str) -> u64 {
    t[k].as_integer().expect("resolved integer") as u64
}

fn get_usize(t: &Table, k: &str) -> usize {
    get_u64(t, k) as usize
}

fn get_f64(t: &Table, k: &str) -> f64 {
    t[k].as_float().expect("resolved float")
}

fn get_str<'a>(t: &'a Table, k: &str) -> &'a str {
    t[k].as_str().expect("resolved string")
}

fn get_floats(t: &Table, k: &str) -> Option<Vec<f64>> {
    t.get(k).map(|v| v.as_array().expect("resolved list").iter().map(|x| x.as_float().expect("float")).collect())
}

fn parse_key<T: std::str::FromStr<Err = Error>>(t: &Table, k: &str) -> CliResult<T> {
    get_str(t, k).parse().map_err(|e: Error| config_err(format!("key `{k}`: {e}")))
}

/// Builds the experiment config from a resolved table.
pub fn experiment_config(t: &Table) -> CliResult<ExperimentConfig> {
    let n_grid = t
        .get("n_grid")
        .map(|v| v.as_array().expect("resolved list").iter().map(|x| x.as_integer().expect("int") as usize).collect())
        .unwrap_or_else(|| vec![1]);
    let trials = if t.contains_key("trials") { get_usize(t, "trials") } else { 1 };
    let index_set: IndexSetSpec = parse_key(t, "index_set")?;
    let mut c = ExperimentConfig::new(get_usize(t, "d"), index_set, n_grid, trials, get_u64(t, "seed"));
    if t.contains_key("generator") {
        c.generator = parse_key::<GeneratorKind>(t, "generator")?;
    }
    if t.contains_key("reference") {
        c.reference = parse_key::<ReferenceDistribution>(t, "reference")?;
    }
    if t.contains_key("workers") {
        c.workers = get_usize(t, "workers");
    }
    c.width_trials = get_usize(t, "width_trials");
    if t.contains_key("statistic") {
        c.statistic = parse_key::<Statistic>(t, "statistic")?;
        c.aggregate = parse_key::<Aggregate>(t, "aggregate")?;
    }
    c.delta_grid = get_floats(t, "delta_grid");
    if t.contains_key("direction") {
        c.direction = get_usize(t, "direction");
        c.c2 = get_f64(t, "c2");
    }
    if t.contains_key("c_lower") {
        c.c_lower = get_f64(t, "c_lower");
    }
    if t.contains_key("theta") {
        c.theta = get_f64(t, "theta");
    }
    c.theta_width_factor = t.get("theta_width_factor").and_then(Value::as_float);
    c.b_target = t.get("b_target").and_then(Value::as_float);
    if t.contains_key("family_size") {
        c.family_size = get_usize(t, "family_size");
    }
    Ok(c)
}

/// A rendered-agnostic report: a table plus an optional trailing block.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub trailer: Option<(&'static str, Vec<(&'static str, Cell)>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Bool(bool),
    Str(String),
    List(Vec<Cell>),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<Option<String>> for Cell {
    fn from(v: Option<String>) -> Self {
        v.map_or(Cell::Empty, Cell::Str)
    }
}

/// 17 significant digits, which round-trips every `f64`.
fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_float(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::List(items) => items.iter().map(Cell::csv).collect::<Vec<_>>().join(" "),
            Cell::Empty => String::new(),
        }
    }

    fn toml(&self) -> Option<String> {
        Some(match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_float(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Str(s) => Value::String(s.clone()).to_string(),
            Cell::List(items) => format!("[{}]", items.iter().filter_map(Cell::toml).collect::<Vec<_>>().join(", ")),
            Cell::Empty => return None,
        })
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(i) => (*i).into(),
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, Into::into),
            Cell::Bool(b) => (*b).into(),
            Cell::Str(s) => s.clone().into(),
            Cell::List(items) => items.iter().map(Cell::json).collect(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

fn read_sample(t: &Table) -> CliResult<Sample> {
    let values = match (get_floats(t, "sample"), t.get("sample_file")) {
        (Some(v), None) => v,
        (None, Some(path)) => {
            let path = path.as_str().expect("resolved string");
            let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {path}: {e}")))?;
            text.lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| config_err(format!("{path}: `{s}` is not a number"))))
                .collect::<CliResult<Vec<_>>>()?
        }
        _ => return Err(config_err("give exactly one of `sample` and `sample_file`")),
    };
    Ok(Sample::new(values)?)
}

/// Runs the subcommand on a resolved config.
pub fn execute(sub: SubcommandKind, t: &Table) -> CliResult<Report> {
    Ok(match sub {
        SubcommandKind::W1 => {
            let sample = read_sample(t)?;
            let dist: ReferenceDistribution = parse_key(t, "reference")?;
            let r = match get_str(t, "method") {
                "exact" => w1_empirical_analytic(&sample, &dist)?,
                "quadrature" => w1_cdf_quadrature(&sample, &dist)?,
                other => return Err(config_err(format!("key `method`: unknown method `{other}`"))),
            };
            let method = match r.method {
                crate::wasserstein::W1Method::QuantileExact => "quantile_exact",
                crate::wasserstein::W1Method::CdfQuadrature => "cdf_quadrature",
            };
            Report {
                columns: vec!["n", "value", "method", "estimated_error"],
                rows: vec![vec![sample.len().into(), r.value.into(), Cell::Str(method.into()), r.estimated_error.into()]],
                trailer: None,
            }
        }
        SubcommandKind::Scaling => {
            let r = experiments::run_scaling(&experiment_config(t)?)?;
            let fit = r.fit;
            Report {
                columns: vec!["n", "mean", "sd", "median", "max", "trials"],
                rows: r
                    .rows
                    .iter()
                    .map(|row| {
                        vec![row.n.into(), row.mean.into(), row.sd.into(), row.median.into(), row.max.into(), row.trials.into()]
                    })
                    .collect(),
                trailer: Some((
                    "fit",
                    vec![
                        ("slope", fit.map(|f| f.slope).into()),
                        ("slope_half_width", fit.map(|f| f.slope_half_width).into()),
                        ("intercept", fit.map(|f| f.intercept).into()),
                        ("flag", r.fit_flag.clone().into()),
                        ("statistic", Cell::Str(r.statistic.to_string())),
                        ("aggregate", Cell::Str(r.aggregate.to_string())),
                        ("width", r.width.estimate.into()),
                        ("width_stderr", r.width.stderr.into()),
                        ("identity_violations", r.identity_violations.into()),
                    ],
                )),
            }
        }
        SubcommandKind::Tail => {
            let r = experiments::run_tail(&experiment_config(t)?)?;
            Report {
                columns: vec!["n", "delta", "upper_frequency", "lower_frequency", "upper_log_rate", "lower_log_rate", "trials"],
                rows: r
                    .rows
                    .iter()
                    .map(|row| {
                        vec![
                            row.n.into(),
                            row.delta.into(),
                            row.upper_frequency.into(),
                            row.lower_frequency.into(),
                            row.upper_log_rate.into(),
                            row.lower_log_rate.into(),
                            row.trials.into(),
                        ]
                    })
                    .collect(),
                trailer: Some((
                    "summary",
                    vec![
                        ("width", r.width.estimate.into()),
                        ("width_stderr", r.width.stderr.into()),
                        ("direction", r.direction.into()),
                        ("c2", r.c2.into()),
                    ],
                )),
            }
        }
        SubcommandKind::Width => {
            let r = experiments::run_width_lowerbound(&experiment_config(t)?)?;
            let per_n = |f: &dyn Fn(&experiments::LowerBoundSummary) -> Cell| Cell::List(r.summary.iter().map(f).collect());
            Report {
                columns: vec!["n", "trial", "w1_sup", "mean_sup", "holds", "above_threshold"],
                rows: r
                    .trials
                    .iter()
                    .map(|x| {
                        vec![x.n.into(), x.trial.into(), x.w1_sup.into(), x.mean_sup.into(), x.holds.into(), x.above_threshold.into()]
                    })
                    .collect(),
                trailer: Some((
                    "summary",
                    vec![
                        ("width", r.width.estimate.into()),
                        ("width_stderr", r.width.stderr.into()),
                        ("c_lower", r.c_lower.into()),
                        ("n", per_n(&|s| s.n.into())),
                        ("threshold", per_n(&|s| s.threshold.into())),
                        ("frequency_above", per_n(&|s| s.frequency_above.into())),
                        ("violations", per_n(&|s| s.violations.into())),
                    ],
                )),
            }
        }
        SubcommandKind::Gamma2 => {
            let r = experiments::run_gamma2(&experiment_config(t)?)?;
            Report {
                columns: vec!["points", "dim", "gamma2_upper", "sudakov_lower", "width", "width_stderr", "depth"],
                rows: vec![vec![
                    r.points.into(),
                    r.dim.into(),
                    r.gamma2_upper.into(),
                    r.sudakov_lower.into(),
                    r.width.estimate.into(),
                    r.width.stderr.into(),
                    r.depth.into(),
                ]],
                trailer: None,
            }
        }
        SubcommandKind::CheckAssumption => {
            let r = experiments::run_assumption(&experiment_config(t)?)?;
            let bs: Vec<f64> = r.rows.iter().map(|x| x.fitted_b).collect();
            Report {
                columns: vec!["n", "trial", "theta", "fitted_b", "pairs_tested", "violated"],
                rows: r
                    .rows
                    .iter()
                    .map(|x| vec![x.n.into(), x.trial.into(), x.theta.into(), x.fitted_b.into(), x.pairs_tested.into(), x.violated.into()])
                    .collect(),
                trailer: Some((
                    "summary",
                    vec![
                        ("width", r.width.estimate.into()),
                        ("width_stderr", r.width.stderr.into()),
                        ("median_fitted_b", median(&bs).into()),
                        ("max_fitted_b", bs.iter().copied().fold(0.0, f64::max).into()),
                    ],
                )),
            }
        }
        SubcommandKind::Lipschitz => {
            let r = experiments::run_lipschitz(&experiment_config(t)?)?;
            Report {
                columns: vec!["n", "trial", "max_gap", "w1_sup", "duality_holds", "tightness", "mean_sup", "contraction_ratio"],
                rows: r
                    .rows
                    .iter()
                    .map(|x| {
                        let c = &x.check;
                        vec![
                            x.n.into(),
                            x.trial.into(),
                            c.max_gap.into(),
                            c.w1_sup.into(),
                            c.duality_holds.into(),
                            c.tightness.into(),
                            c.mean_sup.into(),
                            c.contraction_ratio.into(),
                        ]
                    })
                    .collect(),
                trailer: Some((
                    "summary",
                    vec![
                        ("violations", r.violations.into()),
                        ("median_contraction_ratio", r.median_contraction_ratio.into()),
                    ],
                )),
            }
        }
    })
}

fn manifest_toml(sub: SubcommandKind, resolved: &Table) -> CliResult<String> {
    let mut doc = Table::new();
    doc.insert("version".into(), Value::String(VERSION.into()));
    doc.insert("subcommand".into(), Value::String(sub.name().into()));
    doc.insert(sub.name().into(), Value::Table(resolved.clone()));
    toml::to_string(&doc).map_err(|e| CliError::Numerical(format!("numerical failure: cannot serialize manifest: {e}")))
}

pub fn render_csv(sub: SubcommandKind, resolved: &Table, report: &Report) -> CliResult<String> {
    let mut out = format!("# marginals {VERSION}\n");
    for line in manifest_toml(sub, resolved)?.lines().filter(|l| !l.is_empty()) {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Numerical(format!("csv: {e}"));
    w.write_record(&report.columns).map_err(io)?;
    for row in &report.rows {
        w.write_record(row.iter().map(Cell::csv)).map_err(io)?;
    }
    let table = w.into_inner().map_err(|e| CliError::Numerical(format!("csv: {e}")))?;
    out.push_str(&String::from_utf8(table).expect("csv output is UTF-8"));
    if let Some((name, entries)) = &report.trailer {
        out.push_str(&format!("# [{name}]\n"));
        for (k, v) in entries {
            if let Some(text) = v.toml() {
                out.push_str(&format!("# {k} = {text}\n"));
            }
        }
    }
    Ok(out)
}

pub fn render_json(sub: SubcommandKind, resolved: &Table, report: &Report) -> CliResult<String> {
    use serde_json::{Map, Value as J};
    let config: J = serde_json::to_value(resolved).map_err(|e| CliError::Numerical(format!("json: {e}")))?;
    let mut manifest = Map::new();
    manifest.insert("version".into(), VERSION.into());
    manifest.insert("subcommand".into(), sub.name().into());
    if let Some(seed) = resolved.get("seed").and_then(Value::as_integer) {
        manifest.insert("seed".into(), seed.into());
    }
    manifest.insert("config".into(), config);
    let rows: Vec<J> = report
        .rows
        .iter()
        .map(|r| J::Object(report.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect()))
        .collect();
    let mut doc = Map::new();
    doc.insert("manifest".into(), J::Object(manifest));
    doc.insert("rows".into(), J::Array(rows));
    if let Some((name, entries)) = &report.trailer {
        doc.insert(name.to_string(), J::Object(entries.iter().map(|(k, v)| (k.to_string(), v.json())).collect()));
    }
    let mut text = serde_json::to_string_pretty(&J::Object(doc)).map_err(|e| CliError::Numerical(format!("json: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Writes through a temporary file in the target directory and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| config_err(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}
