//! `coint`: CSV-in, JSON-out front end for the cointegration library.
//!
//! Exit codes: 0 on success (the statistical verdict is data, not an
//! exit status), 2 on input errors, 3 on numerical failures.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use coint_core::{
    bayes_test, classical_test, compute_residuals, map_phi, map_regimes, ols_fit,
    run_rates, run_roc, run_segment_recovery, simulate, switch_em, switch_filter, CointError,
    DfNull, EmConfig, RegressionParams, SegmentSpec, SeriesPair, SimSpec, SwitchConfig,
    XProcess,
};

/// Version of every JSON document this binary prints.
const SCHEMA_VERSION: u32 = 1;

/// Monte Carlo sample size for Dickey-Fuller null calibration.
const DF_CALIB_N: usize = 10_000;

enum AppError {
    /// Unreadable, malformed or too-small input: exit 2.
    Input(String),
    /// The computation itself failed: exit 3.
    Numerical(String),
}

impl AppError {
    fn input(msg: impl Into<String>) -> Self {
        AppError::Input(msg.into())
    }
}

/// Core errors reflecting bad data map to exit 2; failures inside an
/// otherwise well-posed computation map to exit 3.
impl From<CointError> for AppError {
    fn from(e: CointError) -> Self {
        match e {
            CointError::TooShort { .. }
            | CointError::LengthMismatch { .. }
            | CointError::NonFinite { .. }
            | CointError::InvalidPhi { .. }
            | CointError::InvalidParameter(_) => AppError::Input(e.to_string()),
            _ => AppError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "coint",
    version,
    about = "Bayesian cointegration testing, segmentation and simulation studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bayes-factor cointegration test on a CSV of two series.
    Test(TestArgs),
    /// Segment a pair into cointegrated and random-walk regimes.
    Segment(SegmentArgs),
    /// Generate a synthetic pair and write it as CSV.
    Simulate(SimulateArgs),
    /// Simulation studies comparing the Bayes and classical tests.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Args)]
struct InputArgs {
    /// CSV file with a header and columns x, y (optional t, echoed).
    input: PathBuf,
    /// Drop malformed rows instead of failing on them.
    #[arg(long)]
    skip_bad: bool,
}

#[derive(Args)]
struct EmArgs {
    /// Maximum EM iterations.
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Relative convergence tolerance on the log-likelihood.
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
}

impl EmArgs {
    fn config(&self) -> EmConfig {
        EmConfig {
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
        }
    }
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Decision threshold log C; cointegrated iff log BF < log C.
    #[arg(long, default_value_t = 2.0)]
    threshold_log_c: f64,
    #[command(flatten)]
    em: EmArgs,
    /// Also run the classical OLS + Dickey-Fuller baseline at 5%.
    #[arg(long)]
    classical: bool,
    /// Seed for the Dickey-Fuller null calibration.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SegmentArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Probability the first step is a random walk.
    #[arg(long)]
    p_init_rw: f64,
    /// Probability a random-walk regime continues.
    #[arg(long)]
    p_rw_to_rw: f64,
    /// Probability a cointegrated segment continues.
    #[arg(long)]
    p_c_to_c: f64,
    /// Width of the uniform segment-start density; defaults to the
    /// range of the initial OLS residuals.
    #[arg(long)]
    reset_width: Option<f64>,
    #[command(flatten)]
    em: EmArgs,
    /// Also write the per-time rows as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Series length.
    #[arg(long, default_value_t = 100)]
    t: usize,
    /// AR(1) coefficient of the residuals; 1 gives a random walk.
    #[arg(long)]
    phi: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// False-positive/false-negative rates per series length.
    Rates(RatesArgs),
    /// ROC sweep of both tests at one series length.
    Roc(RocArgs),
    /// Boundary recovery on three-segment synthetic series.
    SegmentRecovery(RecoveryArgs),
}

#[derive(Args)]
struct RatesArgs {
    /// Series lengths to simulate.
    #[arg(long, value_delimiter = ',', default_values_t = vec![20, 50, 100, 200])]
    lengths: Vec<usize>,
    /// Series per length (even; half cointegrated, half random walk).
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Use the original protocol size (5000 series per length).
    #[arg(long)]
    paper_scale: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the rate rows as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RocArgs {
    /// Series length.
    #[arg(long, default_value_t = 100)]
    t: usize,
    /// Number of series (even).
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Use the original protocol size (10,000 series).
    #[arg(long)]
    paper_scale: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the ROC points as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RecoveryArgs {
    /// Number of seeds to run.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the summary row as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(args) => cmd_test(&args),
        Command::Segment(args) => cmd_segment(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Experiment(cmd) => cmd_experiment(&cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// COINT_THREADS caps the experiment thread pool; the default is the
/// machine's parallelism.
fn configure_threads() -> Result<(), String> {
    match std::env::var("COINT_THREADS") {
        Err(_) => Ok(()),
        Ok(v) => {
            let n: usize = v
                .parse()
                .map_err(|_| format!("COINT_THREADS must be a positive integer, got `{v}`"))?;
            if n == 0 {
                return Err("COINT_THREADS must be a positive integer, got `0`".into());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())
        }
    }
}

struct InputTable {
    t: Option<Vec<f64>>,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn read_table(args: &InputArgs) -> Result<InputTable, AppError> {
    let path = &args.input;
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| AppError::input(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| AppError::input(format!("bad CSV header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (xi, yi) = match (col("x"), col("y")) {
        (Some(xi), Some(yi)) => (xi, yi),
        _ => {
            return Err(AppError::input(format!(
                "{} must have header columns `x` and `y`",
                path.display()
            )))
        }
    };
    let ti = col("t");
    let mut table = InputTable {
        t: ti.map(|_| Vec::new()),
        x: Vec::new(),
        y: Vec::new(),
    };
    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 2; // 1-based, after the header
        let parsed = record
            .map_err(|e| e.to_string())
            .and_then(|rec| parse_row(&rec, xi, yi, ti));
        match parsed {
            Ok((t, x, y)) => {
                if let Some(ts) = table.t.as_mut() {
                    ts.push(t.unwrap());
                }
                table.x.push(x);
                table.y.push(y);
            }
            Err(msg) if args.skip_bad => {
                eprintln!("warning: skipping line {line}: {msg}");
            }
            Err(msg) => {
                return Err(AppError::input(format!(
                    "{} line {line}: {msg} (use --skip-bad to drop such rows)",
                    path.display()
                )))
            }
        }
    }
    if table.x.len() < 3 {
        return Err(AppError::input(format!(
            "need at least 3 well-formed rows, got {}",
            table.x.len()
        )));
    }
    Ok(table)
}

fn parse_row(
    rec: &csv::StringRecord,
    xi: usize,
    yi: usize,
    ti: Option<usize>,
) -> Result<(Option<f64>, f64, f64), String> {
    let field = |i: usize, name: &str| -> Result<f64, String> {
        let raw = rec.get(i).ok_or_else(|| format!("missing column `{name}`"))?;
        let v: f64 = raw
            .trim()
            .parse()
            .map_err(|_| format!("column `{name}` is not a number: `{raw}`"))?;
        if !v.is_finite() {
            return Err(format!("column `{name}` is not finite: `{raw}`"));
        }
        Ok(v)
    };
    let t = match ti {
        Some(i) => Some(field(i, "t")?),
        None => None,
    };
    Ok((t, field(xi, "x")?, field(yi, "y")?))
}

fn pair_from(table: &InputTable) -> Result<SeriesPair, AppError> {
    Ok(SeriesPair::new(table.x.clone(), table.y.clone())?)
}

fn print_json<T: Serialize>(doc: &T) -> Result<(), AppError> {
    let text = serde_json::to_string_pretty(doc)
        .map_err(|e| AppError::Numerical(format!("JSON encoding failed: {e}")))?;
    println!("{text}");
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, AppError> {
    csv::Writer::from_path(path)
        .map_err(|e| AppError::input(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct TestDoc<'a> {
    schema_version: u32,
    input: String,
    test: &'a coint_core::TestResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    classical: Option<&'a coint_core::DfResult>,
}

fn cmd_test(args: &TestArgs) -> Result<(), AppError> {
    let table = read_table(&args.input)?;
    let pair = pair_from(&table)?;
    let result = bayes_test(&pair, &args.em.config(), args.threshold_log_c)?;
    let baseline = if args.classical {
        let null = DfNull::calibrate(pair.len(), DF_CALIB_N, args.seed);
        Some(classical_test(&pair, &null)?)
    } else {
        None
    };
    print_json(&TestDoc {
        schema_version: SCHEMA_VERSION,
        input: args.input.input.display().to_string(),
        test: &result,
        classical: baseline.as_ref(),
    })
}

#[derive(Serialize)]
struct SegmentRow {
    t: f64,
    filtered_rw_prob: f64,
    smoothed_rw_prob: f64,
    regime: u8,
    phi: f64,
}

#[derive(Serialize)]
struct SegmentDoc {
    schema_version: u32,
    input: String,
    params: RegressionParams,
    loglik: f64,
    converged: bool,
    iterations: usize,
    reset_width: f64,
    rows: Vec<SegmentRow>,
}

fn cmd_segment(args: &SegmentArgs) -> Result<(), AppError> {
    let table = read_table(&args.input)?;
    let pair = pair_from(&table)?;
    let init = ols_fit(&pair)?.params()?;
    let width = match args.reset_width {
        Some(w) if w > 0.0 && w.is_finite() => w,
        Some(w) => {
            return Err(AppError::input(format!(
                "--reset-width must be positive and finite, got {w}"
            )))
        }
        None => compute_residuals(&pair, &init).range(),
    };
    let cfg = SwitchConfig {
        p_init_rw: args.p_init_rw,
        p_rw_to_rw: args.p_rw_to_rw,
        p_c_to_c: args.p_c_to_c,
        reset_width: width,
    };
    let (params, smoothed, trace) = switch_em(&pair, &init, &cfg, &args.em.config())?;
    let eps = compute_residuals(&pair, &params);
    let filtered = switch_filter(&eps, params.sigma2, &cfg)?;
    let regimes = map_regimes(&smoothed);
    let phis = map_phi(&eps, params.sigma2, &regimes)?;
    let rows: Vec<SegmentRow> = filtered
        .slices
        .iter()
        .enumerate()
        .map(|(i, slice)| SegmentRow {
            // rows cover t = 2..=T; echo the input's t column if present
            t: match &table.t {
                Some(ts) => ts[i + 1],
                None => (i + 2) as f64,
            },
            filtered_rw_prob: slice.log_rw.exp(),
            smoothed_rw_prob: smoothed.slices[i].rw_prob,
            regime: regimes[i],
            phi: phis[i],
        })
        .collect();
    let doc = SegmentDoc {
        schema_version: SCHEMA_VERSION,
        input: args.input.input.display().to_string(),
        params,
        loglik: filtered.loglik,
        converged: trace.converged,
        iterations: trace.loglik_history.len(),
        reset_width: width,
        rows,
    };
    if let Some(path) = &args.out {
        let mut w = csv_writer(path)?;
        for row in &doc.rows {
            w.serialize(row)
                .map_err(|e| AppError::input(e.to_string()))?;
        }
        w.flush().map_err(|e| AppError::input(e.to_string()))?;
    }
    print_json(&doc)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), AppError> {
    let spec = SimSpec {
        t_len: args.t,
        alpha: args.alpha,
        beta: args.beta,
        sigma2: args.sigma2,
        phi: args.phi,
        x_process: XProcess::RandomWalk,
        seed: args.seed,
    };
    let pair = simulate(&spec)?;
    let mut out: Vec<u8> = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["t", "x", "y"])
            .map_err(|e| AppError::input(e.to_string()))?;
        for (i, (x, y)) in pair.x().iter().zip(pair.y()).enumerate() {
            // default float formatting is shortest-roundtrip
            w.write_record(&[(i + 1).to_string(), format!("{x}"), format!("{y}")])
                .map_err(|e| AppError::input(e.to_string()))?;
        }
        w.flush().map_err(|e| AppError::input(e.to_string()))?;
    }
    match &args.out {
        Some(path) => std::fs::write(path, &out)
            .map_err(|e| AppError::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout()
                .write_all(&out)
                .map_err(|e| AppError::input(e.to_string()))
        }
    }
}

#[derive(Serialize)]
struct RatesDoc {
    schema_version: u32,
    n_per_length: usize,
    seed: u64,
    rates: coint_core::RatesReport,
}

#[derive(Serialize)]
struct RocDoc {
    schema_version: u32,
    seed: u64,
    roc: coint_core::RocReport,
}

#[derive(Serialize)]
struct RecoveryDoc {
    schema_version: u32,
    seed: u64,
    recovery: coint_core::RecoveryReport,
}

fn cmd_experiment(cmd: &ExperimentCmd) -> Result<(), AppError> {
    match cmd {
        ExperimentCmd::Rates(args) => {
            let n = if args.paper_scale { 5000 } else { args.n };
            let report = run_rates(&args.lengths, n, args.seed)?;
            if let Some(path) = &args.out {
                let mut w = csv_writer(path)?;
                for row in &report.rows {
                    w.serialize(row)
                        .map_err(|e| AppError::input(e.to_string()))?;
                }
                w.flush().map_err(|e| AppError::input(e.to_string()))?;
            }
            print_json(&RatesDoc {
                schema_version: SCHEMA_VERSION,
                n_per_length: n,
                seed: args.seed,
                rates: report,
            })
        }
        ExperimentCmd::Roc(args) => {
            let n = if args.paper_scale { 10_000 } else { args.n };
            let thresholds: Vec<f64> = (-10..=20).map(|k| k as f64 * 0.5).collect();
            let report = run_roc(args.t, n, &thresholds, args.seed)?;
            if let Some(path) = &args.out {
                let mut w = csv_writer(path)?;
                for point in &report.points {
                    w.serialize(point)
                        .map_err(|e| AppError::input(e.to_string()))?;
                }
                w.flush().map_err(|e| AppError::input(e.to_string()))?;
            }
            print_json(&RocDoc {
                schema_version: SCHEMA_VERSION,
                seed: args.seed,
                roc: report,
            })
        }
        ExperimentCmd::SegmentRecovery(args) => {
            let spec = SegmentSpec {
                alpha: 0.5,
                beta: 1.5,
                sigma2: 1.0,
                segments: vec![(200, 0.3), (200, 1.0), (200, 0.5)],
                seed: args.seed,
            };
            let cfg = SwitchConfig {
                p_init_rw: 0.5,
                p_rw_to_rw: 0.98,
                p_c_to_c: 0.98,
                reset_width: 10.0,
            };
            let report = run_segment_recovery(&spec, &cfg, args.n, true)?;
            if let Some(path) = &args.out {
                let mut w = csv_writer(path)?;
                w.serialize(&report)
                    .map_err(|e| AppError::input(e.to_string()))?;
                w.flush().map_err(|e| AppError::input(e.to_string()))?;
            }
            print_json(&RecoveryDoc {
                schema_version: SCHEMA_VERSION,
                seed: args.seed,
                recovery: report,
            })
        }
    }
}
