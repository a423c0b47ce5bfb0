//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 an analysis
//! threshold was not met, 3 I/O failure. Default output files go to
//! `$CREAM_OUT_DIR` (or the working directory).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::coverage::theorems::{Convention, Instance, Verification, DEFAULT_BUDGET, DEFAULT_REGIME_RATIO};
use crate::coverage::{cumulative_coverage, CoverageReport};
use crate::error::{Error, Result};
use crate::gaussian::{chi_square_fit, FitResult, TruncatedGaussianTable, DEFAULT_GRID};
use crate::indexing::{ContextConfig, Schedule, ScheduleGenerator, Strategy};
use crate::rng;
use crate::rope::{property_sweep, PropertyCheck, SweepConfig};
use crate::schedule::{load_config, read_schedule, write_schedule, FORMAT_VERSION};
use crate::taskgen::{generate_grid, write_corpus, Task, KV_POSITIONS_140, KV_POSITIONS_75, SAMPLES_PER_POSITION};

pub const OUT_DIR_ENV: &str = "CREAM_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_THRESHOLD: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cream", version, about = "Position-index schedules for context-window extension")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a training schedule.
    Sample(SampleArgs),
    /// Relative-distance coverage of a schedule file.
    Coverage(CoverageArgs),
    /// Exhaustively verify the maximal-coverage claims on a small window.
    Verify(VerifyArgs),
    /// Scale-factor statistics of the truncated Gaussian sampler.
    Stats(StatsArgs),
    /// Numerical checks of the rotary kernel.
    RopeCheck(RopeCheckArgs),
    /// Generate a synthetic retrieval corpus.
    #[command(subcommand)]
    Taskgen(TaskgenCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Flat key-value config file; flags given alongside it override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Pre-trained window N.
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// Target window L.
    #[arg(long = "l")]
    pub l: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub strategy_mix: Option<f64>,
    #[arg(long)]
    pub n_grid: Option<usize>,
    /// Number of samples.
    #[arg(short = 'S', long = "samples")]
    pub samples: usize,
    /// Output file (default `$CREAM_OUT_DIR/schedule.jsonl`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include the materialised position list in every record.
    #[arg(long)]
    pub positions: bool,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    pub schedule: PathBuf,
    /// Directory for the report files (default `$CREAM_OUT_DIR`).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long = "n")]
    pub n: usize,
    #[arg(long = "l")]
    pub l: usize,
    #[arg(long = "lh")]
    pub head: usize,
    #[arg(long = "lt")]
    pub tail: usize,
    /// `span`: P_e − P_s = N − L_h − L_t. `count`: the middle holds N − L_h − L_t positions.
    #[arg(long, default_value = "span", value_parser = parse_convention)]
    pub convention: Convention,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// L/N below which the large-window claims are reported as out of regime.
    #[arg(long, default_value_t = DEFAULT_REGIME_RATIO)]
    pub regime_ratio: f64,
    /// Write the JSON verdict record here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

fn parse_convention(s: &str) -> std::result::Result<Convention, String> {
    Convention::parse(s).ok_or_else(|| format!("unknown convention {s:?} (span|count)"))
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub n_grid: usize,
    /// Sigmas for the variance table.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub sweep: Vec<f64>,
    /// Histogram output (default `$CREAM_OUT_DIR/alpha_stats.csv` or `.json`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RopeCheckArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "2,64,128")]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TaskgenCommand {
    /// Key-value retrieval.
    Kv(TaskgenArgs),
    /// Line retrieval.
    Lines(TaskgenArgs),
}

#[derive(Debug, Args)]
pub struct TaskgenArgs {
    /// Number of key-value pairs or register lines.
    #[arg(long, alias = "num-keys", alias = "num-lines")]
    pub size: usize,
    /// Answer positions (default: the standard grid for 75 or 140 keys, else five evenly spread).
    #[arg(long, value_delimiter = ',')]
    pub positions: Option<Vec<usize>>,
    #[arg(long, default_value_t = SAMPLES_PER_POSITION)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render();
            let _ = if code == EXIT_OK {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    let invocation = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    let result = match cli.command {
        Command::Sample(a) => cmd_sample(&a, &invocation, stdout),
        Command::Coverage(a) => cmd_coverage(&a, &invocation, stdout),
        Command::Verify(a) => cmd_verify(&a, stdout),
        Command::Stats(a) => cmd_stats(&a, &invocation, stdout),
        Command::RopeCheck(a) => cmd_rope_check(&a, stdout),
        Command::Taskgen(t) => cmd_taskgen(&t, &invocation, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn console(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Resolves the schedule parameters from an optional config file and flags.
pub fn resolve_config(a: &SampleArgs) -> Result<ContextConfig> {
    let mut config = match &a.config {
        Some(path) => load_config(path)?,
        None => {
            let (n, l) = match (a.n, a.l) {
                (Some(n), Some(l)) => (n, l),
                _ => return Err(Error::Config("--n and --l are required without --config".into())),
            };
            if a.seed.is_none() {
                return Err(Error::Config("--seed is required".into()));
            }
            ContextConfig::new(n, l)
        }
    };
    if let Some(v) = a.n {
        config.n = v;
    }
    if let Some(v) = a.l {
        config.l = v;
    }
    if let Some(v) = a.k {
        config.k = v;
    }
    if let Some(v) = a.mu {
        config.mu = Some(v);
    }
    if let Some(v) = a.sigma {
        config.sigma = v;
    }
    if let Some(v) = a.seed {
        config.seed = v;
    }
    if let Some(v) = a.strategy_mix {
        config.strategy_mix = v;
    }
    if let Some(v) = a.n_grid {
        config.n_grid = v;
    }
    config.validate()?;
    Ok(config)
}

/// Realised strategy mix and alpha histogram of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleSummary {
    pub samples: usize,
    pub continuity: usize,
    pub relativity: usize,
    pub alpha_histogram: BTreeMap<i64, usize>,
}

pub fn summarize(schedule: &Schedule) -> ScheduleSummary {
    let mut s = ScheduleSummary {
        samples: schedule.len(),
        continuity: 0,
        relativity: 0,
        alpha_histogram: BTreeMap::new(),
    };
    for e in &schedule.entries {
        match e.plan.strategy {
            Strategy::Continuity => s.continuity += 1,
            Strategy::Relativity => s.relativity += 1,
        }
        *s.alpha_histogram.entry(e.plan.alpha).or_default() += 1;
    }
    s
}

pub fn cmd_sample(a: &SampleArgs, invocation: &str, stdout: &mut dyn Write) -> Result<i32> {
    let config = resolve_config(a)?;
    let schedule = ScheduleGenerator::new(config)?.generate(a.samples)?;
    let path = a.out.clone().unwrap_or_else(|| out_dir().join("schedule.jsonl"));
    let mut file = create(&path)?;
    write_schedule(&mut file, &schedule, Some(invocation.to_string()), a.positions)
        .map_err(|e| match e {
            Error::Io { source, .. } => Error::io(&path, source),
            other => other,
        })?;
    let summary = summarize(&schedule);
    let n = summary.samples as f64;
    writeln!(stdout, "wrote {} samples to {}", summary.samples, path.display()).map_err(console)?;
    writeln!(
        stdout,
        "strategy mix: continuity {:.4}, relativity {:.4}",
        summary.continuity as f64 / n,
        summary.relativity as f64 / n
    )
    .map_err(console)?;
    writeln!(stdout, "alpha  count").map_err(console)?;
    for (alpha, count) in &summary.alpha_histogram {
        writeln!(stdout, "{alpha:>5}  {count}").map_err(console)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_coverage(a: &CoverageArgs, invocation: &str, stdout: &mut dyn Write) -> Result<i32> {
    let (header, schedule) = read_schedule(&a.schedule)?;
    let report = cumulative_coverage(schedule.entries.iter().map(|e| &e.plan), header.params.l)?;
    let dir = a.out_dir.clone().unwrap_or_else(out_dir);
    let stem = a
        .schedule
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "schedule".into());
    let jsonl = dir.join(format!("{stem}.coverage.jsonl"));
    let csv = dir.join(format!("{stem}.histogram.csv"));
    write_coverage_files(&report, &header.params, invocation, &jsonl, &csv)?;
    match a.format {
        Format::Json => {
            let summary = serde_json::json!({
                "L": report.window,
                "samples": report.per_sample_sizes.len(),
                "final_fraction": report.final_fraction(),
                "samples_to_full": report.samples_to_full,
            });
            writeln!(stdout, "{summary}").map_err(console)?;
        }
        Format::Csv => report.write_histogram_csv(&mut *stdout).map_err(console)?,
        Format::Text => {
            writeln!(
                stdout,
                "coverage of [0, {}): {:.6} after {} samples; full coverage {}",
                report.window,
                report.final_fraction(),
                report.per_sample_sizes.len(),
                match report.samples_to_full {
                    Some(k) => format!("after {k} samples"),
                    None => "not reached".into(),
                }
            )
            .map_err(console)?;
            writeln!(stdout, "wrote {} and {}", jsonl.display(), csv.display()).map_err(console)?;
        }
    }
    Ok(if report.is_full() { EXIT_OK } else { EXIT_THRESHOLD })
}

fn write_coverage_files(
    report: &CoverageReport,
    params: &ContextConfig,
    invocation: &str,
    jsonl: &Path,
    csv: &Path,
) -> Result<()> {
    let header = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "kind": "cream-coverage",
        "params": params,
        "invocation": invocation,
    });
    let mut f = create(jsonl)?;
    writeln!(f, "{header}")
        .and_then(|_| report.write_jsonl(&mut f))
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(jsonl, e))?;
    let mut f = create(csv)?;
    writeln!(f, "# cream coverage {invocation}")
        .and_then(|_| report.write_histogram_csv(&mut f))
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(csv, e))
}

pub fn cmd_verify(a: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let instance = Instance::new(a.n, a.l, a.head, a.tail, a.convention)?;
    let verification = Verification::run(instance, a.budget, a.regime_ratio)?;
    let record = verification.record();
    if (a.l as f64) < a.regime_ratio * a.n as f64 {
        writeln!(
            stdout,
            "warning: L < {}·N; the large-window assumption does not hold for this instance",
            a.regime_ratio
        )
        .map_err(console)?;
    }
    match a.format {
        Format::Json => writeln!(stdout, "{}", serde_json::to_string(&record).expect("serialisable")),
        _ => writeln!(stdout, "{verification}"),
    }
    .map_err(console)?;
    if let Some(path) = &a.json {
        let mut f = create(path)?;
        serde_json::to_writer(&mut f, &record).map_err(|e| Error::io(path, e.into()))?;
        writeln!(f).and_then(|_| f.flush()).map_err(|e| Error::io(path, e))?;
    }
    Ok(if verification.any_failure() { EXIT_THRESHOLD } else { EXIT_OK })
}

/// Alpha draws, goodness of fit and the variance-vs-sigma table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub histogram: Vec<AlphaBin>,
    pub fit: FitResult,
    pub variance_by_sigma: Vec<(f64, f64)>,
    pub variance_non_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaBin {
    pub alpha: i64,
    pub count: u64,
    pub expected: f64,
}

/// Draws `draws` scale factors from `table` using the `stats` substream of `seed`.
pub fn draw_alphas(table: &TruncatedGaussianTable, draws: usize, seed: u64) -> Result<Vec<i64>> {
    let mut r = rng::substream(seed, "stats", 0);
    (0..draws)
        .map(|_| table.inverse_sample(rng::unit_f64(&mut r)))
        .collect()
}

pub fn sample_variance(values: &[i64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[allow(clippy::too_many_arguments)]
pub fn stats_report(
    mu: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    n_grid: usize,
    draws: usize,
    seed: u64,
    sweep: &[f64],
) -> Result<StatsReport> {
    if draws < 1000 {
        return Err(Error::invalid(format!("need at least 1000 draws, got {draws}")));
    }
    let table = TruncatedGaussianTable::new(mu, sigma, lo, hi, n_grid)?;
    let alphas = draw_alphas(&table, draws, seed)?;
    let masses = table.integer_bin_masses();
    let first = masses[0].0;
    let mut counts = vec![0u64; masses.len()];
    for a in &alphas {
        counts[(a - first) as usize] += 1;
    }
    let probs: Vec<f64> = masses.iter().map(|m| m.1).collect();
    let fit = chi_square_fit(&counts, &probs)?;
    let histogram = masses
        .iter()
        .zip(&counts)
        .map(|(&(alpha, p), &count)| AlphaBin {
            alpha,
            count,
            expected: p * draws as f64,
        })
        .collect();
    let variance_by_sigma = sweep
        .iter()
        .map(|&s| {
            let t = TruncatedGaussianTable::new(mu, s, lo, hi, n_grid)?;
            Ok((s, sample_variance(&draw_alphas(&t, draws, seed)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_sigma = variance_by_sigma.clone();
    by_sigma.sort_by(|a, b| a.0.total_cmp(&b.0));
    let variance_non_decreasing = by_sigma.windows(2).all(|w| w[1].1 >= w[0].1);
    Ok(StatsReport {
        histogram,
        fit,
        variance_by_sigma,
        variance_non_decreasing,
    })
}

pub fn cmd_stats(a: &StatsArgs, invocation: &str, stdout: &mut dyn Write) -> Result<i32> {
    let report = stats_report(a.mu, a.sigma, a.lo, a.hi, a.n_grid, a.draws, a.seed, &a.sweep)?;
    let json = a.format == Format::Json;
    let path = a
        .out
        .clone()
        .unwrap_or_else(|| out_dir().join(if json { "alpha_stats.json" } else { "alpha_stats.csv" }));
    let mut f = create(&path)?;
    let written = if json {
        let doc = serde_json::json!({ "invocation": invocation, "report": report });
        writeln!(f, "{doc}")
    } else {
        (|| {
            writeln!(f, "# cream stats {invocation}")?;
            writeln!(f, "alpha,count,expected")?;
            for b in &report.histogram {
                writeln!(f, "{},{},{}", b.alpha, b.count, b.expected)?;
            }
            Ok(())
        })()
    };
    written.and_then(|_| f.flush()).map_err(|e| Error::io(&path, e))?;

    (|| -> std::io::Result<()> {
        writeln!(stdout, "alpha  observed  expected")?;
        for b in &report.histogram {
            writeln!(stdout, "{:>5}  {:>8}  {:>10.1}", b.alpha, b.count, b.expected)?;
        }
        writeln!(
            stdout,
            "chi-square {:.3} on {} dof, p = {:.4} ({})",
            report.fit.statistic,
            report.fit.dof,
            report.fit.p_value,
            if report.fit.p_value > 0.01 { "fit ok" } else { "FIT REJECTED" }
        )?;
        writeln!(stdout, "sigma  variance")?;
        for (s, v) in &report.variance_by_sigma {
            writeln!(stdout, "{s:>5}  {v:.4}")?;
        }
        writeln!(
            stdout,
            "variance non-decreasing in sigma: {}",
            report.variance_non_decreasing
        )?;
        writeln!(stdout, "wrote {}", path.display())
    })()
    .map_err(console)?;
    let ok = report.fit.p_value > 0.01 && report.variance_non_decreasing;
    Ok(if ok { EXIT_OK } else { EXIT_THRESHOLD })
}

pub fn cmd_rope_check(a: &RopeCheckArgs, stdout: &mut dyn Write) -> Result<i32> {
    let config = SweepConfig {
        dims: a.dims.clone(),
        trials: a.trials,
        seed: a.seed,
        ..SweepConfig::default()
    };
    let checks = property_sweep(&config)?;
    print_rope_table(&checks, stdout).map_err(console)?;
    let passed = checks.iter().all(|c| c.passed);
    let verdict = serde_json::json!({ "passed": passed, "checks": checks });
    if let Some(path) = &a.json {
        let mut f = create(path)?;
        writeln!(f, "{verdict}")
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(path, e))?;
    } else {
        writeln!(stdout, "{verdict}").map_err(console)?;
    }
    Ok(if passed { EXIT_OK } else { EXIT_THRESHOLD })
}

fn print_rope_table(checks: &[PropertyCheck], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{:<18} {:<7} {:>4} {:>7} {:>12} {:>9}  result", "property", "mode", "d", "trials", "max error", "tol")?;
    for c in checks {
        writeln!(
            out,
            "{:<18} {:<7} {:>4} {:>7} {:>12.3e} {:>9.0e}  {}",
            c.property,
            c.mode,
            c.dim,
            c.trials,
            c.max_error,
            c.tolerance,
            if c.passed { "pass" } else { "FAIL" }
        )?;
    }
    Ok(())
}

/// Five positions spread evenly over `[0, size)`, or the standard grids.
pub fn default_positions(size: usize) -> Vec<usize> {
    match size {
        75 => KV_POSITIONS_75.to_vec(),
        140 => KV_POSITIONS_140.to_vec(),
        0 => Vec::new(),
        _ => {
            let mut v: Vec<usize> = (0..5).map(|i| i * (size - 1) / 4).collect();
            v.dedup();
            v
        }
    }
}

pub fn cmd_taskgen(t: &TaskgenCommand, invocation: &str, stdout: &mut dyn Write) -> Result<i32> {
    let (task, a, name) = match t {
        TaskgenCommand::Kv(a) => (Task::KvRetrieval, a, "kv_corpus.jsonl"),
        TaskgenCommand::Lines(a) => (Task::LineRetrieval, a, "lines_corpus.jsonl"),
    };
    if a.size == 0 || a.samples == 0 {
        return Err(Error::invalid("size and samples must be positive"));
    }
    let positions = a.positions.clone().unwrap_or_else(|| default_positions(a.size));
    let records = generate_grid(task, a.size, &positions, a.samples, a.seed)?;
    let path = a.out.clone().unwrap_or_else(|| out_dir().join(name));
    let header = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "kind": "cream-corpus",
        "task": task,
        "size": a.size,
        "positions": positions,
        "samples_per_position": a.samples,
        "seed": a.seed,
        "invocation": invocation,
    });
    let mut f = create(&path)?;
    write_corpus(&mut f, &header, &records)
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(&path, e))?;
    writeln!(
        stdout,
        "wrote {} samples ({} positions x {}) to {}",
        records.len(),
        positions.len(),
        a.samples,
        path.display()
    )
    .map_err(console)?;
    Ok(EXIT_OK)
}
