//! Command-line harness.
//!
//! Every JSON report carries `tool_version`, `command`, `seed` and `config`
//! (the parsed flags minus `--threads` and output paths), so identical
//! configurations produce identical bytes. Per-trial randomness comes from
//! `stream_rng(seed, i)`: trial or trajectory `i` of a simon or zeno run uses
//! stream `i + 1`, a random period uses stream [`PERIOD_STREAM`], and oracle
//! tables use stream 0. Wall-clock time goes to stderr only.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 usage error, 3 input
//! parse error, 4 sample budget exhausted, 5 degenerate dynamics.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::measure::stream_rng;
use crate::oracle::{random_periodic, PeriodicOracle};
use crate::satnet::{brute_force_sat, parse_dimacs, CnfFormula};
use crate::simon::{
    default_max_samples, recover_period, wave_pair_states, PipelineTime, SimonError,
};
use crate::statevec::Bits;
use crate::waves::{delta_averaged_density, round_trip_error, Wave};
use crate::zeno::{ensemble_mean, ZenoError, ZenoInstance, ZenoSample, ZenoTestbed, ZenoTrace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;

/// Stream used to draw `--r random`.
pub const PERIOD_STREAM: u64 = u64::MAX;

const MAX_SIMON_WIDTH: usize = 13;
const MAX_WAVES_WIDTH: usize = 5;

#[derive(Debug, Parser)]
#[command(
    name = "collapse-lab",
    version,
    about = "Seeded measurement and Zeno experiments"
)]
struct Cli {
    /// Directory for relative output paths.
    #[arg(long, global = true, env = "COLLAPSE_LAB_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recover a hidden XOR period by repeated sampling.
    Simon(SimonArgs),
    /// Drive the output qubit of a compiled CNF network under constraint.
    Zeno(ZenoArgs),
    /// Gauge-averaged densities of the retarded and advanced waves.
    Waves(WavesArgs),
    /// Compile DIMACS CNF into a reversible network.
    Compile(CompileArgs),
    /// Write a random periodic oracle table.
    OracleGen(OracleGenArgs),
}

#[derive(Debug, Args, Serialize)]
struct SimonArgs {
    /// Input width.
    #[arg(long, required_unless_present = "oracle", value_parser = clap::value_parser!(u64).range(1..=MAX_SIMON_WIDTH as u64))]
    n: Option<u64>,
    /// Period as an n-digit binary mask, or `random`.
    #[arg(long, conflicts_with = "oracle")]
    r: Option<String>,
    #[arg(long, default_value = "1")]
    trials: NonZeroUsize,
    /// Leave out the output-register measurement.
    #[arg(long)]
    skip_step_d: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-trial sample budget (default 20n).
    #[arg(long)]
    max_samples: Option<usize>,
    /// Oracle JSON written by `oracle-gen`.
    #[arg(long, conflicts_with = "n")]
    oracle: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    threads: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ZenoModeArg {
    Frequent,
    Projected,
    Unitary,
}

#[derive(Debug, Args, Serialize)]
struct ZenoArgs {
    #[arg(long)]
    cnf: PathBuf,
    /// Unit literals pinning inputs, e.g. `--fix 1,-3`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    fix: Vec<i32>,
    #[arg(long, value_enum)]
    mode: ZenoModeArg,
    #[arg(long)]
    slices: NonZeroUsize,
    /// Frequent-mode trajectories; ignored by the deterministic modes.
    #[arg(long, default_value = "1")]
    trajectories: NonZeroUsize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    threads: Option<usize>,
    /// Per-step CSV trace.
    #[arg(long)]
    #[serde(skip)]
    trace: Option<PathBuf>,
    /// JSON summary (stdout if omitted).
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TimeArg {
    T1,
    T2,
}

#[derive(Debug, Args, Serialize)]
struct WavesArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=MAX_WAVES_WIDTH as u64))]
    n: u64,
    #[arg(long, default_value = "random")]
    r: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "t2")]
    time: TimeArg,
    /// Number of uniform gauge-phase grid points.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(2..))]
    grid: u64,
    /// Output value selecting the backward state (default f(0)).
    #[arg(long)]
    f_bar: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompileArgs {
    #[arg(long)]
    cnf: PathBuf,
    /// Circuit JSON (stdout if omitted).
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleGenArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=MAX_SIMON_WIDTH as u64))]
    n: u64,
    #[arg(long, default_value = "random")]
    r: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::new(EXIT_FAILURE, format!("{}: {err}", path.display()))
    }
}

impl From<ZenoError> for Failure {
    fn from(e: ZenoError) -> Self {
        let code = match e {
            ZenoError::EmptySubspace | ZenoError::DegenerateDynamics { .. } => EXIT_DEGENERATE,
            ZenoError::BadConstraint(_) | ZenoError::ZeroSlices => EXIT_USAGE,
            ZenoError::Cnf(_) => EXIT_PARSE,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

#[derive(Serialize)]
struct Report<'a, C: Serialize, B: Serialize> {
    tool_version: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a C,
    #[serde(flatten)]
    body: B,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() && !e.to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let out_dir = cli.out_dir.as_deref();
    let result = match &cli.command {
        Command::Simon(a) => run_simon(a, out_dir),
        Command::Zeno(a) => run_zeno(a, out_dir),
        Command::Waves(a) => run_waves(a, out_dir),
        Command::Compile(a) => run_compile(a, out_dir),
        Command::OracleGen(a) => run_oracle_gen(a, out_dir),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn resolve(path: &Path, out_dir: Option<&Path>) -> PathBuf {
    match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(bytes: &[u8], path: Option<&Path>, out_dir: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let p = resolve(p, out_dir);
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
            }
            fs::write(&p, bytes).map_err(|e| Failure::io(&p, e))
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string())),
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn read_cnf(path: &Path) -> Result<CnfFormula, Failure> {
    parse_dimacs(&read_input(path)?)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))
}

fn parse_bits(text: &str, width: usize, what: &str) -> Result<u64, Failure> {
    let bits: Bits = text.parse().map_err(|_| {
        Failure::new(
            EXIT_USAGE,
            format!("{what} `{text}` is not a binary string"),
        )
    })?;
    if bits.width() != width {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("{what} `{text}` must have exactly {width} digits"),
        ));
    }
    Ok(bits.value())
}

/// `random` draws a nonzero mask from [`PERIOD_STREAM`].
fn resolve_period(text: &str, n: usize, seed: u64) -> Result<u64, Failure> {
    if text == "random" {
        return Ok(stream_rng(seed, PERIOD_STREAM).random_range(1..1u64 << n));
    }
    match parse_bits(text, n, "period")? {
        0 => Err(Failure::new(EXIT_USAGE, "period must be nonzero")),
        r => Ok(r),
    }
}

fn generate_oracle(n: usize, r: &str, seed: u64) -> Result<PeriodicOracle, Failure> {
    let r = resolve_period(r, n, seed)?;
    random_periodic(n, r, seed).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))
}

#[derive(Serialize)]
struct TrialRecord {
    recovered_r: Option<u64>,
    samples_used: usize,
    z_samples: Vec<u64>,
}

#[derive(Serialize)]
struct SimonBody {
    n: usize,
    r_true: u64,
    max_samples: usize,
    succeeded: usize,
    per_trial: Vec<TrialRecord>,
}

fn run_simon(args: &SimonArgs, out_dir: Option<&Path>) -> Result<(), Failure> {
    let started = Instant::now();
    let oracle = match &args.oracle {
        Some(path) => serde_json::from_str::<PeriodicOracle>(&read_input(path)?)
            .map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))?,
        None => {
            let n = args.n.expect("clap requires --n without --oracle") as usize;
            generate_oracle(n, args.r.as_deref().unwrap_or("random"), args.seed)?
        }
    };
    if oracle.n() > MAX_SIMON_WIDTH {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("oracle width {} exceeds {MAX_SIMON_WIDTH}", oracle.n()),
        ));
    }
    let max_samples = args
        .max_samples
        .unwrap_or_else(|| default_max_samples(oracle.n()));
    let pool = thread_pool(args.threads)?;
    let outcomes: Vec<Result<_, SimonError>> = pool.install(|| {
        (0..args.trials.get() as u64)
            .into_par_iter()
            .map(|i| {
                recover_period(
                    &oracle,
                    &mut stream_rng(args.seed, i + 1),
                    max_samples,
                    args.skip_step_d,
                )
            })
            .collect()
    });
    let mut per_trial = Vec::with_capacity(outcomes.len());
    let mut exhausted = 0;
    for outcome in outcomes {
        per_trial.push(match outcome {
            Ok(rep) => TrialRecord {
                recovered_r: Some(rep.recovered_r),
                samples_used: rep.samples_used,
                z_samples: rep.z_samples,
            },
            Err(SimonError::BudgetExceeded {
                samples_used,
                z_samples,
                ..
            }) => {
                exhausted += 1;
                TrialRecord {
                    recovered_r: None,
                    samples_used,
                    z_samples,
                }
            }
            Err(e @ SimonError::BudgetTooSmall { .. }) => {
                return Err(Failure::new(EXIT_USAGE, e.to_string()))
            }
            Err(e) => return Err(Failure::new(EXIT_FAILURE, e.to_string())),
        });
    }
    let body = SimonBody {
        n: oracle.n(),
        r_true: oracle.r(),
        max_samples,
        succeeded: per_trial
            .iter()
            .filter(|t| t.recovered_r == Some(oracle.r()))
            .count(),
        per_trial,
    };
    let report = Report {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "simon",
        seed: args.seed,
        config: args,
        body,
    };
    emit(&to_json(&report), args.out.as_deref(), out_dir)?;
    eprintln!(
        "simon: {} trials in {:.3}s",
        args.trials,
        started.elapsed().as_secs_f64()
    );
    if exhausted > 0 {
        return Err(Failure::new(
            EXIT_BUDGET,
            format!("{exhausted} trial(s) exhausted the budget of {max_samples} samples"),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct ZenoBody {
    num_vars: usize,
    num_clauses: usize,
    subspace_dim: usize,
    solutions: Option<usize>,
    mode: ZenoModeArg,
    slices: usize,
    trajectories: usize,
    survivors: usize,
    initial: ZenoSample,
    last: ZenoSample,
}

fn run_zeno(args: &ZenoArgs, out_dir: Option<&Path>) -> Result<(), Failure> {
    let started = Instant::now();
    let formula = read_cnf(&args.cnf)?;
    let instance = ZenoInstance::new(formula, args.fix.clone())?;
    let bed = ZenoTestbed::from_instance(&instance)?;
    let slices = args.slices.get();
    let (samples, trajectories, survivors) = match args.mode {
        ZenoModeArg::Frequent => {
            let pool = thread_pool(args.threads)?;
            let traces: Vec<ZenoTrace> = pool.install(|| {
                (0..args.trajectories.get() as u64)
                    .into_par_iter()
                    .map(|t| bed.run_frequent(slices, &mut stream_rng(args.seed, t + 1)))
                    .collect::<Result<_, _>>()
            })?;
            let survivors = traces.iter().filter(|t| t.terminated_at.is_none()).count();
            (ensemble_mean(&traces), traces.len(), survivors)
        }
        ZenoModeArg::Projected => (bed.run_projected(slices)?.samples, 1, 1),
        ZenoModeArg::Unitary => (bed.run_unitary(slices)?.samples, 1, 1),
    };
    if let Some(path) = &args.trace {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for s in &samples {
            writer
                .serialize(s)
                .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
        emit(&bytes, Some(path), out_dir)?;
    }
    let body = ZenoBody {
        num_vars: instance.num_vars(),
        num_clauses: instance.formula().clauses().len(),
        subspace_dim: bed.subspace().dim(),
        solutions: brute_force_sat(&instance.combined_formula())
            .ok()
            .map(|s| s.len()),
        mode: args.mode,
        slices,
        trajectories,
        survivors,
        initial: samples[0],
        last: *samples.last().expect("step 0 is always present"),
    };
    let report = Report {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "zeno",
        seed: args.seed,
        config: args,
        body,
    };
    if args.out.is_some() || args.trace.is_none() {
        emit(&to_json(&report), args.out.as_deref(), out_dir)?;
    }
    eprintln!(
        "zeno: {slices} slices in {:.3}s",
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

#[derive(Serialize)]
struct WavesBody {
    n: usize,
    r_true: u64,
    f_bar: String,
    dim: usize,
    plus: Vec<Vec<[f64; 2]>>,
    minus: Vec<Vec<[f64; 2]>>,
    max_abs_difference: f64,
    max_round_trip_error: f64,
}

fn run_waves(args: &WavesArgs, out_dir: Option<&Path>) -> Result<(), Failure> {
    let n = args.n as usize;
    let oracle = generate_oracle(n, &args.r, args.seed)?;
    let f_bar = match &args.f_bar {
        Some(text) => parse_bits(text, n, "f-bar")?,
        None => oracle.table()[0],
    };
    let f_bar = Bits::new(f_bar, n).expect("width checked");
    let time = match args.time {
        TimeArg::T1 => PipelineTime::T1,
        TimeArg::T2 => PipelineTime::T2,
    };
    let (phi, beta) = wave_pair_states(&oracle, &f_bar, time)
        .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let grid = args.grid as usize;
    let wave_failure = |e: crate::waves::WaveError| Failure::new(EXIT_FAILURE, e.to_string());
    let plus = delta_averaged_density(&phi, &beta, Wave::Plus, grid).map_err(wave_failure)?;
    let minus = delta_averaged_density(&phi, &beta, Wave::Minus, grid).map_err(wave_failure)?;
    let mut max_round_trip_error: f64 = 0.0;
    for k in 0..grid {
        let delta = std::f64::consts::TAU * k as f64 / grid as f64;
        max_round_trip_error =
            max_round_trip_error.max(round_trip_error(&phi, &beta, delta).map_err(wave_failure)?);
    }
    let body = WavesBody {
        n,
        r_true: oracle.r(),
        f_bar: f_bar.to_string(),
        dim: plus.dim(),
        max_abs_difference: plus.max_abs_diff(&minus),
        plus: plus.to_rows(),
        minus: minus.to_rows(),
        max_round_trip_error,
    };
    let report = Report {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "waves",
        seed: args.seed,
        config: args,
        body,
    };
    emit(&to_json(&report), args.out.as_deref(), out_dir)
}

fn run_compile(args: &CompileArgs, out_dir: Option<&Path>) -> Result<(), Failure> {
    let circuit = crate::satnet::compile(&read_cnf(&args.cnf)?);
    emit(&to_json(&circuit), args.emit.as_deref(), out_dir)
}

fn run_oracle_gen(args: &OracleGenArgs, out_dir: Option<&Path>) -> Result<(), Failure> {
    let oracle = generate_oracle(args.n as usize, &args.r, args.seed)?;
    emit(&to_json(&oracle), args.out.as_deref(), out_dir)
}
