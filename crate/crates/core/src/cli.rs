//! Command-line front end: `estimate`, `simulate` and `diagnose`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;

use crate::error::Error;
use crate::format::{fmt_num, round_sig};
use crate::multitaper::{bandwidth, eigencoefficients, in_valid_band, nyquist, sine_tapers, spectral_matrix};
use crate::pcoh::partial_coherence;
use crate::simlab::campaign::{run_campaign, shrunk_precision, solve, Method};
use crate::simlab::model::GridSpec;
use crate::simlab::moments::{moment_check, MomentStatus};
use crate::simlab::scenario::Scenario;
use crate::trace_est::{bias_check, estimate_traces, MIN_BIAS_REPLICATES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "speccoh", version, about = "Shrinkage estimation of partial coherence")]
struct Cli {
    /// Worker threads for Monte-Carlo loops (output does not depend on it).
    #[arg(long, env = "SPECCOH_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Partial coherence of a multichannel time series.
    Estimate(EstimateArgs),
    /// PRISE campaign described by a scenario file.
    Simulate(SimulateArgs),
    /// Wishart moment identities and trace-estimator bias.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0.55)]
    fstart: f64,
    #[arg(long, default_value_t = 4.05)]
    fstop: f64,
    #[arg(long, default_value_t = 0.1)]
    fstep: f64,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// CSV with header `t,ch1,...,chp`, one row per sample.
    #[arg(long)]
    input: PathBuf,
    /// Sampling interval in seconds.
    #[arg(long)]
    dt: f64,
    /// Number of sine tapers.
    #[arg(long)]
    k: usize,
    /// Expected channel count; checked against the input.
    #[arg(long)]
    p: Option<usize>,
    /// raw, hs, qla, qlb, hsp or qlp (shrinkage uses estimated traces).
    #[arg(long, default_value = "raw")]
    method: String,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    scenario: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Overrides the scenario grid start.
    #[arg(long)]
    fstart: Option<f64>,
    #[arg(long)]
    fstop: Option<f64>,
    #[arg(long)]
    fstep: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    scenario: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Frequency whose true matrix is tested (nearest grid point; default
    /// the first).
    #[arg(long)]
    freq: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::usage(format!("{}: {e}", path.display()))
    }

    /// Maps a library error, prefixing `context` (usually the flag at fault).
    fn from_error(e: Error, context: &str) -> Self {
        let code = match e {
            Error::InsufficientTapers { .. }
            | Error::BadCount { .. }
            | Error::LengthMismatch { .. }
            | Error::FrequencyOutOfRange { .. } => EXIT_PRECONDITION,
            Error::Config(_) | Error::EmptyGrid | Error::NonSquare { .. } | Error::TooAsymmetric { .. } => {
                EXIT_USAGE
            }
            Error::DimensionMismatch(..) => EXIT_USAGE,
            Error::NotPositiveDefinite
            | Error::NonPositiveDenominator(_)
            | Error::DegenerateTraces(_)
            | Error::NonPositiveDiagonal(_)
            | Error::ZeroBaseline => EXIT_NUMERIC,
        };
        let message = if context.is_empty() {
            e.to_string()
        } else {
            format!("{context}: {e}")
        };
        Self { code, message }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::usage(format!("--threads: {e}")))?;
    pool.install(|| match cli.command {
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
    })
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::usage(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Reads a `t,ch1,...,chp` CSV into a p x N matrix.
pub fn read_series(path: &Path) -> Result<DMatrix<f64>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    if headers.len() < 2 || headers.get(0).map(str::trim) != Some("t") {
        return Err(format!("{}: header must be t,ch1,...,chp", path.display()));
    }
    let p = headers.len() - 1;
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        if record.len() != p + 1 {
            return Err(format!("{}: row {} has {} fields, expected {}", path.display(), row + 1, record.len(), p + 1));
        }
        for field in record.iter().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| format!("{}: row {}: cannot parse '{field}'", path.display(), row + 1))?;
            values.push(v);
        }
    }
    let n = values.len() / p;
    if n == 0 {
        return Err(format!("{}: no samples", path.display()));
    }
    Ok(DMatrix::from_fn(p, n, |c, t| values[t * p + c]))
}

fn check_tapers(method: Method, k: usize, p: usize) -> CliResult<()> {
    let err = |need| {
        CliError::from_error(
            Error::InsufficientTapers { k, p, need },
            &format!("--k {k} with --method {}", method.to_string().to_lowercase()),
        )
    };
    if k < p {
        return Err(err("K >= p"));
    }
    if method != Method::Raw && k <= p + 1 {
        return Err(err("K > p + 1"));
    }
    Ok(())
}

fn cmd_estimate(a: &EstimateArgs) -> CliResult<()> {
    let method = match a.method.to_ascii_lowercase().as_str() {
        "raw" => Method::Raw,
        m @ ("hs" | "qla" | "qlb" | "hsp" | "qlp") => {
            Method::Estimated(m.parse::<Method>().ok().and_then(Method::shrinkage).expect("known method"))
        }
        other => return Err(CliError::usage(format!("--method: unknown method '{other}'"))),
    };
    if !(a.dt.is_finite() && a.dt > 0.0) {
        return Err(CliError::usage(format!("--dt: must be positive, got {}", a.dt)));
    }
    if let Some(p) = a.p {
        check_tapers(method, a.k, p)?;
    }
    let x = read_series(&a.input).map_err(|m| CliError::usage(format!("--input: {m}")))?;
    let (p, n) = x.shape();
    if let Some(expected) = a.p {
        if expected != p {
            return Err(CliError::usage(format!("--p {expected}: input has {p} channels")));
        }
    }
    check_tapers(method, a.k, p)?;
    let grid = GridSpec {
        start_hz: a.grid.fstart,
        stop_hz: a.grid.fstop,
        step_hz: a.grid.fstep,
    }
    .frequencies()
    .map_err(|e| CliError::from_error(e, "--fstart/--fstop/--fstep"))?;
    let tapers = sine_tapers(n, a.k).map_err(|e| CliError::from_error(e, &format!("--k {}", a.k)))?;

    let bw = bandwidth(a.k, n, a.dt);
    let mut warnings = Vec::new();
    for f in &grid {
        if !in_valid_band(*f, a.k, n, a.dt) {
            let msg = format!(
                "{} Hz lies outside the band ({}, {}) Hz where eigencoefficients are approximately Gaussian",
                fmt_num(*f),
                fmt_num(bw / 2.0),
                fmt_num(nyquist(a.dt) - bw / 2.0)
            );
            eprintln!("warning: {msg}");
            warnings.push(msg);
        }
    }

    ensure_dir(&a.out)?;
    let csv_path = a.out.join("pcoh.csv");
    let mut csv_out = csv::Writer::from_writer(create(&csv_path)?);
    csv_out
        .write_record(["freq_hz", "j", "k", "pcoh"])
        .map_err(|e| CliError::io(&csv_path, e))?;
    let mut per_freq = Vec::with_capacity(grid.len());
    for f in &grid {
        let ctx = format!("{} Hz", fmt_num(*f));
        let j = eigencoefficients(&x, &tapers, *f, a.dt).map_err(|e| CliError::from_error(e, "--fstop"))?;
        let s_hat = spectral_matrix(&j);
        // A singular S_hat means the data cannot support the requested fit.
        let precondition = |e: Error| {
            let mut ce = CliError::from_error(e.clone(), &format!("{ctx} (--input)"));
            if e == Error::NotPositiveDefinite {
                ce.code = EXIT_PRECONDITION;
            }
            ce
        };
        let s_inv = s_hat.invert().map_err(precondition)?;
        let (c, sol) = match method.shrinkage() {
            None => (s_inv, None),
            Some(rule) => {
                let t = estimate_traces(&s_hat, a.k).map_err(precondition)?;
                let sol = solve(rule, &t, p, a.k).map_err(|e| CliError::from_error(e, &ctx))?;
                (
                    shrunk_precision(&s_hat, &s_inv, &sol).map_err(|e| CliError::from_error(e, &ctx))?,
                    Some(sol),
                )
            }
        };
        let g = partial_coherence(&c).map_err(|e| CliError::from_error(e, &ctx))?;
        for (jj, kk, v) in g.pairs() {
            csv_out
                .write_record([fmt_num(*f), (jj + 1).to_string(), (kk + 1).to_string(), fmt_num(v)])
                .map_err(|e| CliError::io(&csv_path, e))?;
        }
        let rows: Vec<Vec<f64>> = (0..p).map(|r| (0..p).map(|q| round_sig(g.get(r, q))).collect()).collect();
        per_freq.push(json!({
            "freq_hz": round_sig(*f),
            "alpha": sol.map(|s| round_sig(s.alpha)),
            "beta": sol.map(|s| round_sig(s.beta)),
            "rho": sol.and_then(|s| s.rho.map(round_sig)),
            "clamped": sol.map(|s| s.clamped),
            "pcoh": rows,
        }));
    }
    csv_out.flush().map_err(|e| CliError::io(&csv_path, e))?;
    write_json(
        &a.out.join("pcoh.json"),
        &json!({
            "input": a.input.display().to_string(),
            "dt": a.dt,
            "n": n,
            "p": p,
            "K": a.k,
            "method": method.to_string(),
            "bandwidth_hz": round_sig(bw),
            "warnings": warnings,
            "frequencies": per_freq,
        }),
    )?;
    println!("wrote {} and {}", csv_path.display(), a.out.join("pcoh.json").display());
    Ok(())
}

fn load_scenario(path: &Path) -> CliResult<Scenario> {
    Scenario::load(path).map_err(|e| CliError::from_error(e, "scenario"))
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let mut scenario = load_scenario(&a.scenario)?;
    if let Some(v) = a.fstart {
        scenario.grid.start_hz = v;
    }
    if let Some(v) = a.fstop {
        scenario.grid.stop_hz = v;
    }
    if let Some(v) = a.fstep {
        scenario.grid.step_hz = v;
    }
    scenario.seed = Some(a.seed);
    let cfg = scenario.config(Some(a.seed)).map_err(|e| CliError::from_error(e, "scenario methods"))?;
    let model = scenario.build_model().map_err(|e| {
        let mut ce = CliError::from_error(e.clone(), "model");
        if e == Error::NotPositiveDefinite {
            ce.code = EXIT_NUMERIC;
        }
        ce
    })?;
    let report = run_campaign(&model, &cfg)
        .map_err(|e| CliError::from_error(e, "campaign"))?
        .rounded();

    ensure_dir(&a.out)?;
    let by_freq = a.out.join("prise_by_freq.csv");
    report
        .write_by_freq_csv(create(&by_freq)?)
        .map_err(|e| CliError::io(&by_freq, e))?;
    let avg = a.out.join("prise_avg.csv");
    report.write_average_csv(create(&avg)?).map_err(|e| CliError::io(&avg, e))?;
    write_json(
        &a.out.join("report.json"),
        &json!({
            "seed": a.seed,
            "scenario": scenario,
            "report": report,
        }),
    )?;
    for s in &report.methods {
        println!("{:<8} {:>10}%", s.method, fmt_num(s.average_prise_pct));
    }
    Ok(())
}

fn cmd_diagnose(a: &DiagnoseArgs) -> CliResult<()> {
    let scenario = load_scenario(&a.scenario)?;
    let model = scenario.build_model().map_err(|e| CliError::from_error(e, "model"))?;
    let l = match a.freq {
        None => 0,
        Some(f) => model
            .grid
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 - f).abs().total_cmp(&(y.1 - f).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0),
    };
    let s0 = &model.matrices[l];
    let (k, m, p) = (scenario.k, scenario.m, scenario.p);
    let moments = moment_check(s0, k, m, a.seed).map_err(|e| CliError::from_error(e, &format!("K={k}")))?;

    ensure_dir(&a.out)?;
    let path = a.out.join("moments.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    w.write_record(["identity", "truth", "mc_mean", "se", "z", "status", "note"])
        .map_err(|e| CliError::io(&path, e))?;
    for r in &moments.rows {
        let status = match r.status {
            MomentStatus::Pass => "pass",
            MomentStatus::Fail => "fail",
            MomentStatus::Skipped => "skipped",
        };
        w.write_record([r.identity.to_string(), opt(r.truth), opt(r.mc_mean), opt(r.se), opt(r.z), status.into(), r.note.clone()])
            .map_err(|e| CliError::io(&path, e))?;
        println!("{status:<8} {}", r.identity);
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let bias_path = a.out.join("bias.csv");
    let mut w = csv::Writer::from_writer(create(&bias_path)?);
    w.write_record([
        "functional",
        "target",
        "expected_mean",
        "mc_mean",
        "se",
        "variance",
        "negative_count",
        "status",
    ])
    .map_err(|e| CliError::io(&bias_path, e))?;
    let bias_note = if m < MIN_BIAS_REPLICATES {
        Some(format!("skipped: M={m} < {MIN_BIAS_REPLICATES}"))
    } else if k <= p + 1 {
        Some(format!("skipped: K={k} <= p + 1"))
    } else {
        None
    };
    let bias = match &bias_note {
        Some(_) => None,
        None => Some(bias_check(s0, k, m, a.seed).map_err(|e| CliError::from_error(e, "bias check"))?),
    };
    if let Some(b) = &bias {
        for r in &b.rows {
            w.write_record([
                r.functional.to_string(),
                fmt_num(r.target),
                fmt_num(r.expected_mean),
                fmt_num(r.mc_mean),
                fmt_num(r.se),
                fmt_num(r.variance),
                r.negative_count.to_string(),
                if r.pass { "pass" } else { "fail" }.into(),
            ])
            .map_err(|e| CliError::io(&bias_path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(&bias_path, e))?;
    if let Some(note) = &bias_note {
        println!("bias check {note}");
    }
    write_json(
        &a.out.join("diagnose.json"),
        &json!({
            "seed": a.seed,
            "freq_hz": round_sig(model.grid[l]),
            "moments": moments,
            "bias": bias,
            "bias_note": bias_note,
        }),
    )
}
