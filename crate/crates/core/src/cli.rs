//! The `bran` command line.
//!
//! Every subcommand reads model parameters from `--config <file.json>` and
//! from override flags of the same names; the command line wins. Tables are
//! written as CSV and summaries as JSON unless `--format` says otherwise.
//! With `--out-dir` each payload goes to `<out-dir>/<name>.<ext>` and a
//! manifest line (parameters, seed, version, SHA-256 of the file, timestamp)
//! is appended to `<out-dir>/manifest.jsonl`; otherwise payloads go to stdout,
//! separated by a blank line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error,
//! 3 unstable configuration. Failures print one JSON line
//! `{"error":CODE,"message":...}` on stderr.

use std::fs;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer};
use sha2::{Digest, Sha256};

use crate::bounds::{self, Bound};
use crate::config::{ConfirmationPolicy, GiveUp, SystemConfig};
use crate::ctmc::{self, SolverOptions, Truncation};
use crate::dessim::{self, SimOptions};
use crate::error::Error;
use crate::mining::{self, MiningProcess};
use crate::security::{self, RaceSummary};
use crate::tradeoff;
use crate::validation;

const RANGES_HELP: &str = "Ranges: `a:b` is an inclusive integer range (e.g. 1:6); \
`a:b:step` is a float range from a up to b inclusive (e.g. 0.1:0.4:0.1).\n\
Give-up thresholds: a positive integer, or `inf` for an attacker that never quits.";

#[derive(Parser, Debug)]
#[command(name = "bran", version, about = "Latency and double-spend security of a blockchain radio access network", after_help = RANGES_HELP)]
struct Cli {
    /// JSON file with lambda_a, lambda_b, lambda_c, s, n_confirmations, beta, give_up
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed for every random stream [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write payloads and manifest lines here instead of stdout
    #[arg(long = "out-dir", alias = "out_dir", global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Force every payload into one format [default: CSV for tables, JSON for summaries]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(flatten)]
    model: ModelArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// Request arrival rate
    #[arg(long = "lambda-a", alias = "lambda_a", global = true)]
    lambda_a: Option<f64>,
    /// Block generation rate
    #[arg(long = "lambda-b", alias = "lambda_b", global = true)]
    lambda_b: Option<f64>,
    /// Service rate per link [default: 1]
    #[arg(long = "lambda-c", alias = "lambda_c", global = true)]
    lambda_c: Option<f64>,
    /// Number of access links
    #[arg(long, global = true)]
    s: Option<u32>,
    /// Confirmations required before service [default: 1]
    #[arg(long = "n-confirmations", alias = "n_confirmations", global = true)]
    n_confirmations: Option<u32>,
    /// Attacker mining rate relative to the honest network
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Deficit at which the attacker quits, or `inf` [default: inf]
    #[arg(long = "give-up", alias = "give_up", global = true, value_parser = parse_give_up)]
    give_up: Option<GiveUp>,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Largest pending count kept by the truncation [default: max(200, 8s)]
    #[arg(long = "i-max", alias = "i_max")]
    i_max: Option<usize>,
    /// Largest confirmed count kept by the truncation [default: max(200, 8s)]
    #[arg(long = "j-max", alias = "j_max")]
    j_max: Option<usize>,
    /// Residual tolerance of the steady-state solver
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample block times (CSV block_time, optional histogram)
    Mining {
        /// Block rate; falls back to lambda_b
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        /// Also emit an equal-width histogram with this many bins
        #[arg(long, value_name = "BINS")]
        histogram: Option<usize>,
    },
    /// Stationary distribution of the one-confirmation chain
    SteadyState {
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Mean access latency for n_confirmations
    Latency {
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Closed-form latency bounds for n_confirmations
    Bounds,
    /// Double-spend success probability, optionally checked by Monte Carlo
    Security {
        /// Number of simulated races
        #[arg(long = "mc-trials", alias = "mc_trials")]
        mc_trials: Option<u64>,
    },
    /// Success probability over a grid of beta and N
    SecuritySweep {
        #[arg(long = "beta-range", alias = "beta_range", value_parser = parse_float_range, value_name = "A:B:STEP")]
        beta_range: FloatRange,
        #[arg(long = "n-range", alias = "n_range", value_parser = parse_int_range, value_name = "A:B")]
        n_range: RangeInclusive<u32>,
    },
    /// Run the discrete-event simulator
    Simulate {
        /// Completed requests to record after warm-up
        #[arg(long, default_value_t = 100_000)]
        served: u64,
        /// Write per-request records (CSV id,arrival,service_start,service_end)
        #[arg(long = "dump-latencies", alias = "dump_latencies", value_name = "PATH")]
        dump_latencies: Option<PathBuf>,
    },
    /// Analytic latency against the simulator for a range of N
    Validate {
        #[arg(long = "n-range", alias = "n_range", value_parser = parse_int_range, value_name = "A:B", default_value = "1:6")]
        n_range: RangeInclusive<u32>,
        #[arg(long, default_value_t = 100_000)]
        served: u64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Latency and attack probability for N = 1..n_max
    Tradeoff {
        #[arg(long = "n-max", alias = "n_max", default_value_t = 10)]
        n_max: u32,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mining { .. } => "mining",
            Command::SteadyState { .. } => "steady-state",
            Command::Latency { .. } => "latency",
            Command::Bounds => "bounds",
            Command::Security { .. } => "security",
            Command::SecuritySweep { .. } => "security-sweep",
            Command::Simulate { .. } => "simulate",
            Command::Validate { .. } => "validate",
            Command::Tradeoff { .. } => "tradeoff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn parse_give_up(s: &str) -> Result<GiveUp, String> {
    match s {
        "inf" | "unbounded" | "null" => Ok(GiveUp::Unbounded),
        _ => {
            let n: u64 = s
                .parse()
                .map_err(|_| format!("expected a positive integer or `inf`, got `{s}`"))?;
            GiveUp::finite(n).map_err(|e| e.to_string())
        }
    }
}

fn parse_int_range(s: &str) -> Result<RangeInclusive<u32>, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got `{s}`"))?;
    let a: u32 = a.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
    let b: u32 = b.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
    if a == 0 || a > b {
        return Err(format!("range `{s}` must satisfy 1 <= a <= b"));
    }
    Ok(a..=b)
}

#[derive(Debug, Clone, PartialEq)]
struct FloatRange(Vec<f64>);

fn decimals(s: &str) -> Option<i32> {
    if s.contains(['e', 'E']) {
        return None;
    }
    Some(s.split_once('.').map_or(0, |(_, f)| f.len() as i32))
}

fn parse_float_range(s: &str) -> Result<FloatRange, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [a, b, step] = parts[..] else {
        return Err(format!("expected a:b:step, got `{s}`"));
    };
    let num = |t: &str| f64::from_str(t).map_err(|_| format!("bad number `{t}` in `{s}`"));
    let (lo, hi, dx) = (num(a)?, num(b)?, num(step)?);
    if !(lo.is_finite() && hi.is_finite() && dx.is_finite()) || dx <= 0.0 || lo > hi {
        return Err(format!("range `{s}` must satisfy a <= b and step > 0"));
    }
    // Round to the decimals the user typed so 0.1:0.3:0.1 yields 0.3, not 0.30000000000000004.
    let scale = match (decimals(a), decimals(step)) {
        (Some(x), Some(y)) => Some(10f64.powi(x.max(y))),
        _ => None,
    };
    let mut values = Vec::new();
    for k in 0u64.. {
        let mut v = lo + k as f64 * dx;
        if let Some(sc) = scale {
            v = (v * sc).round() / sc;
        }
        if v > hi + 1e-9 * dx {
            break;
        }
        values.push(v);
        if values.len() > 1_000_000 {
            return Err(format!("range `{s}` has too many points"));
        }
    }
    Ok(FloatRange(values))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    lambda_a: Option<f64>,
    lambda_b: Option<f64>,
    lambda_c: Option<f64>,
    s: Option<u32>,
    n_confirmations: Option<u32>,
    beta: Option<f64>,
    // Missing means "not set"; null means Unbounded.
    #[serde(default, deserialize_with = "present")]
    give_up: Option<Option<u64>>,
}

fn present<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Option<u64>>, D::Error> {
    Option::<u64>::deserialize(d).map(Some)
}

#[derive(Debug)]
struct CliError {
    code: &'static str,
    message: String,
    exit: i32,
}

impl CliError {
    fn usage(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit: 2,
        }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Self {
            code: "IO_ERROR",
            message: format!("{}: {e}", path.display()),
            exit: 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::UnstableConfig { .. } => 3,
            Error::InvalidParameter(_) | Error::TooFewSamples { .. } => 2,
            _ => 1,
        };
        Self {
            code: e.code(),
            message: e.to_string(),
            exit,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parameters after merging the config file with the command line.
#[derive(Debug, Default)]
struct Params {
    lambda_a: Option<f64>,
    lambda_b: Option<f64>,
    lambda_c: Option<f64>,
    s: Option<u32>,
    n_confirmations: Option<u32>,
    beta: Option<f64>,
    give_up: Option<GiveUp>,
}

fn missing(name: &str) -> CliError {
    CliError::usage(
        "MISSING_PARAMETER",
        format!("`{name}` must be given in --config or as --{}", name.replace('_', "-")),
    )
}

impl Params {
    fn resolve(file: ConfigFile, cli: &ModelArgs) -> CliResult<Self> {
        let give_up = match cli.give_up {
            Some(g) => Some(g),
            None => file.give_up.map(GiveUp::from_option).transpose()?,
        };
        Ok(Self {
            lambda_a: cli.lambda_a.or(file.lambda_a),
            lambda_b: cli.lambda_b.or(file.lambda_b),
            lambda_c: cli.lambda_c.or(file.lambda_c),
            s: cli.s.or(file.s),
            n_confirmations: cli.n_confirmations.or(file.n_confirmations),
            beta: cli.beta.or(file.beta),
            give_up,
        })
    }

    fn system(&self) -> CliResult<SystemConfig> {
        let a = self.lambda_a.ok_or_else(|| missing("lambda_a"))?;
        let b = self.lambda_b.ok_or_else(|| missing("lambda_b"))?;
        let s = self.s.ok_or_else(|| missing("s"))?;
        Ok(SystemConfig::new(a, b, self.lambda_c.unwrap_or(1.0), s)?)
    }

    fn n(&self) -> CliResult<ConfirmationPolicy> {
        Ok(ConfirmationPolicy::new(self.n_confirmations.unwrap_or(1))?)
    }

    fn beta(&self) -> CliResult<f64> {
        let beta = self.beta.ok_or_else(|| missing("beta"))?;
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(CliError::usage(
                "INVALID_PARAMETER",
                format!("beta must be nonnegative, got {beta}"),
            ));
        }
        Ok(beta)
    }

    fn give_up(&self) -> GiveUp {
        self.give_up.unwrap_or(GiveUp::Unbounded)
    }
}

fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == io::ErrorKind::NotFound {
            CliError::usage("CONFIG_NOT_FOUND", format!("{}: no such file", path.display()))
        } else {
            CliError::io(path, e)
        }
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::usage("CONFIG_INVALID", format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Int(i64),
    /// Non-finite values print as `inf` in CSV and `null` in JSON.
    Num(f64),
    Bool(bool),
    Text(&'static str),
    Null,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Num)
    }
}

impl From<GiveUp> for Cell {
    fn from(g: GiveUp) -> Self {
        match g {
            GiveUp::Finite(n) => Cell::from(n),
            GiveUp::Unbounded => Cell::Num(f64::INFINITY),
        }
    }
}

impl From<Bound> for Cell {
    fn from(b: Bound) -> Self {
        Cell::Num(b.finite().unwrap_or(f64::INFINITY))
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) if v.is_nan() => "nan".into(),
            Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(v) => shortest(*v),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => (*t).into(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) if v.is_finite() => shortest(*v),
            Cell::Num(_) | Cell::Null => "null".into(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => json_str(t),
        }
    }
}

/// Shortest decimal that parses back to the same `f64`.
fn shortest(v: f64) -> String {
    serde_json::to_string(&v).expect("finite floats always serialize")
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn json_object(fields: &[(&str, Cell)]) -> String {
    let body: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("{}:{}", json_str(k), v.json()))
        .collect();
    format!("{{{}}}", body.join(","))
}

#[derive(Debug)]
enum Body {
    Table {
        columns: Vec<&'static str>,
        rows: Vec<Vec<Cell>>,
    },
    Object(Vec<(&'static str, Cell)>),
}

#[derive(Debug)]
struct Payload {
    name: &'static str,
    body: Body,
}

impl Payload {
    fn table(name: &'static str, columns: &[&'static str], rows: Vec<Vec<Cell>>) -> Self {
        Self {
            name,
            body: Body::Table {
                columns: columns.to_vec(),
                rows,
            },
        }
    }

    fn object(name: &'static str, fields: Vec<(&'static str, Cell)>) -> Self {
        Self {
            name,
            body: Body::Object(fields),
        }
    }

    fn natural_format(&self) -> Format {
        match self.body {
            Body::Table { .. } => Format::Csv,
            Body::Object(_) => Format::Json,
        }
    }

    fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match (&self.body, format) {
            (Body::Table { columns, rows }, Format::Csv) => {
                out.push_str(&columns.join(","));
                out.push('\n');
                for row in rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            (Body::Table { columns, rows }, Format::Json) => {
                let objects: Vec<String> = rows
                    .iter()
                    .map(|row| {
                        let fields: Vec<(&str, Cell)> = columns.iter().copied().zip(row.iter().cloned()).collect();
                        json_object(&fields)
                    })
                    .collect();
                out.push_str(&format!("{{\"rows\":[{}]}}\n", objects.join(",")));
            }
            (Body::Object(fields), Format::Csv) => {
                let keys: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
                let vals: Vec<String> = fields.iter().map(|(_, v)| v.csv()).collect();
                out.push_str(&keys.join(","));
                out.push('\n');
                out.push_str(&vals.join(","));
                out.push('\n');
            }
            (Body::Object(fields), Format::Json) => {
                out.push_str(&json_object(fields));
                out.push('\n');
            }
        }
        out
    }
}

struct Run {
    params: Vec<(&'static str, Cell)>,
    payloads: Vec<Payload>,
    /// Files written by the subcommand itself, always CSV.
    side_files: Vec<(PathBuf, String)>,
}

fn solver_setup(
    cfg: &SystemConfig,
    args: &SolverArgs,
    params: &mut Vec<(&'static str, Cell)>,
) -> CliResult<(Truncation, SolverOptions)> {
    let default = Truncation::default_for(cfg);
    let trunc = Truncation::new(
        args.i_max.unwrap_or(default.i_max()),
        args.j_max.unwrap_or(default.j_max()),
    )?;
    if args.tol.is_nan() || args.tol <= 0.0 {
        return Err(CliError::usage(
            "INVALID_PARAMETER",
            format!("tol must be positive, got {}", args.tol),
        ));
    }
    params.push(("i_max", trunc.i_max().into()));
    params.push(("j_max", trunc.j_max().into()));
    params.push(("tol", args.tol.into()));
    Ok((trunc, SolverOptions::with_tol(args.tol)))
}

fn system_params(cfg: &SystemConfig) -> Vec<(&'static str, Cell)> {
    vec![
        ("lambda_a", cfg.lambda_a().into()),
        ("lambda_b", cfg.lambda_b().into()),
        ("lambda_c", cfg.lambda_c().into()),
        ("s", cfg.s().into()),
    ]
}

fn execute(command: &Command, p: &Params, seed: u64) -> CliResult<Run> {
    let mut side_files = Vec::new();
    let (params, payloads) = match command {
        Command::Mining { rate, count, histogram } => {
            let rate = rate.or(p.lambda_b).ok_or_else(|| missing("rate"))?;
            let process = MiningProcess::new(rate)?;
            let sample = mining::sample_block_times(&process, *count, seed)?;
            let mut payloads = vec![Payload::table(
                "block_times",
                &["block_time"],
                sample.durations().iter().map(|&d| vec![d.into()]).collect(),
            )];
            let mut params = vec![("rate", rate.into()), ("count", (*count).into())];
            if let Some(bins) = histogram {
                params.push(("histogram", (*bins).into()));
                let rows = sample
                    .histogram(*bins)?
                    .into_iter()
                    .map(|b| vec![b.left.into(), b.right.into(), b.count.into()])
                    .collect();
                payloads.push(Payload::table("histogram", &["bin_left", "bin_right", "count"], rows));
            }
            (params, payloads)
        }
        Command::SteadyState { solver } => {
            let cfg = p.system()?;
            let mut params = system_params(&cfg);
            let (trunc, opts) = solver_setup(&cfg, solver, &mut params)?;
            let w = ctmc::solve_steady_state(&ctmc::build_generator(&cfg, trunc)?, &opts)?;
            let rows = w
                .iter()
                .map(|(x, pr)| vec![x.i.into(), x.j.into(), pr.into()])
                .collect();
            let summary = vec![
                ("mean_outstanding", w.mean_outstanding().into()),
                ("boundary_mass", w.boundary_mass().into()),
                ("residual", w.residual().into()),
            ];
            (
                params,
                vec![
                    Payload::table("distribution", &["i", "j", "probability"], rows),
                    Payload::object("summary", summary),
                ],
            )
        }
        Command::Latency { solver } => {
            let cfg = p.system()?;
            let n = p.n()?;
            let mut params = system_params(&cfg);
            params.push(("n_confirmations", n.get().into()));
            let (trunc, opts) = solver_setup(&cfg, solver, &mut params)?;
            let w = ctmc::solve_steady_state(&ctmc::build_generator(&cfg, trunc)?, &opts)?;
            let b = ctmc::latency_breakdown(&w, &cfg, n);
            let fields = vec![
                ("latency", b.latency.into()),
                ("sojourn", b.sojourn.into()),
                ("relative_to", Cell::Text("T_c")),
            ];
            (params, vec![Payload::object("latency", fields)])
        }
        Command::Bounds => {
            let cfg = p.system()?;
            let n = p.n()?;
            let mut params = system_params(&cfg);
            params.push(("n_confirmations", n.get().into()));
            let b = bounds::latency_bounds(n, &cfg)?;
            let fields = vec![
                ("lower_block", b.lower_block.into()),
                ("lower_mms", b.lower_mms.into()),
                ("upper", b.upper.into()),
            ];
            (params, vec![Payload::object("bounds", fields)])
        }
        Command::Security { mc_trials } => {
            let beta = p.beta()?;
            let n = p.n()?;
            let give_up = p.give_up();
            let analytic = security::attack_success_prob(n, beta, give_up);
            let mut params = vec![
                ("beta", beta.into()),
                ("n_confirmations", n.get().into()),
                ("give_up", give_up.into()),
            ];
            let (mc, trials, sigma) = match mc_trials {
                Some(t) => {
                    params.push(("mc_trials", (*t).into()));
                    let race = security::simulate_attack_race(n, beta, give_up, *t, seed)?;
                    (
                        Some(race.probability()),
                        *t,
                        Some(RaceSummary::three_sigma(analytic, *t)),
                    )
                }
                None => (None, 0, None),
            };
            let fields = vec![
                ("analytic", analytic.into()),
                ("monte_carlo", mc.into()),
                ("trials", trials.into()),
                ("three_sigma", sigma.into()),
            ];
            (params, vec![Payload::object("security", fields)])
        }
        Command::SecuritySweep { beta_range, n_range } => {
            let give_up = p.give_up();
            let mut rows = Vec::new();
            for &beta in &beta_range.0 {
                for k in n_range.clone() {
                    let prob = security::attack_success_prob(ConfirmationPolicy::new(k)?, beta, give_up);
                    rows.push(vec![beta.into(), k.into(), give_up.into(), prob.into()]);
                }
            }
            let params = vec![
                ("beta_min", beta_range.0.first().copied().unwrap_or(f64::NAN).into()),
                ("beta_max", beta_range.0.last().copied().unwrap_or(f64::NAN).into()),
                ("beta_points", beta_range.0.len().into()),
                ("n_min", (*n_range.start()).into()),
                ("n_max", (*n_range.end()).into()),
                ("give_up", give_up.into()),
            ];
            (
                params,
                vec![Payload::table("sweep", &["beta", "n", "give_up", "probability"], rows)],
            )
        }
        Command::Simulate { served, dump_latencies } => {
            let cfg = p.system()?;
            let n = p.n()?;
            let mut params = system_params(&cfg);
            params.push(("n_confirmations", n.get().into()));
            params.push(("served", (*served).into()));
            let opts = SimOptions {
                keep_requests: dump_latencies.is_some(),
                ..SimOptions::new(*served, seed)
            };
            let run = dessim::run_simulation(&cfg, n, &opts)?;
            if let Some(path) = dump_latencies {
                let mut reqs = run.requests.clone();
                reqs.sort_by_key(|r| r.id);
                let rows = reqs
                    .iter()
                    .map(|r| {
                        vec![
                            r.id.into(),
                            r.arrival_time.into(),
                            r.service_start.into(),
                            r.service_end.into(),
                        ]
                    })
                    .collect();
                let table = Payload::table("requests", &["id", "arrival", "service_start", "service_end"], rows);
                side_files.push((path.clone(), table.render(Format::Csv)));
            }
            let fields = vec![
                ("mean_latency", run.mean_latency.into()),
                ("ci95", run.ci95_halfwidth.into()),
                ("served", run.served_count.into()),
                ("horizon", run.horizon.into()),
            ];
            (params, vec![Payload::object("simulate", fields)])
        }
        Command::Validate {
            n_range,
            served,
            solver,
        } => {
            let cfg = p.system()?;
            let mut params = system_params(&cfg);
            params.push(("n_min", (*n_range.start()).into()));
            params.push(("n_max", (*n_range.end()).into()));
            params.push(("served", (*served).into()));
            let (trunc, opts) = solver_setup(&cfg, solver, &mut params)?;
            let rows =
                validation::validate_latency(&cfg, n_range.clone(), &SimOptions::new(*served, seed), trunc, &opts)?
                    .into_iter()
                    .map(|r| {
                        vec![
                            r.n.into(),
                            r.analytic.into(),
                            r.sim_mean.into(),
                            r.sim_ci95.into(),
                            r.inside_ci.into(),
                        ]
                    })
                    .collect();
            (
                params,
                vec![Payload::table(
                    "validate",
                    &["n", "analytic", "sim_mean", "sim_ci95", "inside_ci"],
                    rows,
                )],
            )
        }
        Command::Tradeoff { n_max, solver } => {
            let cfg = p.system()?;
            let beta = p.beta()?;
            let mut params = system_params(&cfg);
            params.push(("beta", beta.into()));
            params.push(("n_max", (*n_max).into()));
            let (trunc, opts) = solver_setup(&cfg, solver, &mut params)?;
            let rows = tradeoff::tradeoff_curve(&cfg, beta, *n_max, trunc, &opts)?
                .into_iter()
                .map(|pt| vec![pt.n.into(), pt.latency.into(), pt.attack_prob.into()])
                .collect();
            (
                params,
                vec![Payload::table("tradeoff", &["n", "latency", "attack_prob"], rows)],
            )
        }
    };
    Ok(Run {
        params,
        payloads,
        side_files,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn manifest_line(subcommand: &str, file: &Path, params: &[(&'static str, Cell)], seed: u64, content: &str) -> String {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let file_name = file
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    format!(
        "{{\"subcommand\":{},\"file\":{},\"params\":{},\"seed\":{},\"version\":{},\"sha256\":{},\"timestamp\":{}}}\n",
        json_str(subcommand),
        json_str(&file_name),
        json_object(params),
        seed,
        json_str(env!("CARGO_PKG_VERSION")),
        json_str(&sha256_hex(content.as_bytes())),
        timestamp,
    )
}

/// Writes `content` to `path` and appends its manifest line next to it.
fn write_with_manifest(
    path: &Path,
    content: &str,
    subcommand: &str,
    params: &[(&'static str, Cell)],
    seed: u64,
) -> CliResult<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    fs::write(path, content).map_err(|e| CliError::io(path, e))?;
    let manifest = dir.join("manifest.jsonl");
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&manifest)
        .map_err(|e| CliError::io(&manifest, e))?;
    f.write_all(manifest_line(subcommand, path, params, seed, content).as_bytes())
        .map_err(|e| CliError::io(&manifest, e))
}

fn run_cli(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let file = load_config(cli.config.as_deref())?;
    let params = Params::resolve(file, &cli.model)?;
    let seed = cli.seed.unwrap_or(0);
    let name = cli.command.name();
    let run = execute(&cli.command, &params, seed)?;

    for (path, content) in &run.side_files {
        write_with_manifest(path, content, name, &run.params, seed)?;
    }
    let stdout_err = |e: io::Error| CliError {
        code: "IO_ERROR",
        message: e.to_string(),
        exit: 1,
    };
    match &cli.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            for payload in &run.payloads {
                let format = cli.format.unwrap_or(payload.natural_format());
                let path = dir.join(format!("{}.{}", payload.name, format.ext()));
                write_with_manifest(&path, &payload.render(format), name, &run.params, seed)?;
                writeln!(out, "{}", path.display()).map_err(stdout_err)?;
            }
        }
        None => {
            for (k, payload) in run.payloads.iter().enumerate() {
                if k > 0 {
                    out.write_all(b"\n").map_err(stdout_err)?;
                }
                let format = cli.format.unwrap_or(payload.natural_format());
                out.write_all(payload.render(format).as_bytes()).map_err(stdout_err)?;
            }
        }
    }
    Ok(())
}

fn report(err: &mut dyn Write, code: &str, message: &str) {
    let line = format!("{{\"error\":{},\"message\":{}}}", json_str(code), json_str(message));
    let _ = writeln!(err, "{line}");
}

/// Runs `bran` with the given argv (program name first), writing payloads to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp
            | ErrorKind::DisplayVersion
            | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                let _ = write!(out, "{}", e.render());
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    2
                } else {
                    0
                };
            }
            _ => {
                let text = e.render().to_string();
                let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
                report(err, "USAGE", first.trim_start_matches("error: "));
                return 2;
            }
        },
    };
    match run_cli(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            report(err, e.code, &e.message);
            e.exit
        }
    }
}

/// [`run`] on the process stdout and stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run(argv, &mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    code
}
