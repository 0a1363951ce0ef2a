//! Command layer behind the CLI: argument validation, orchestration,
//! persistence, JSON report emission, exit codes.
//!
//! Exit-code contract: 0 success, 1 configuration/usage error, 2 violated
//! mathematical invariant, 3 I/O error. Every command is a pure function of
//! its configuration: no randomness, no timestamps, byte-identical output
//! across runs and thread counts.

use crate::curves::{prime_window, sweep, ApCache};
use crate::elliptic_stats::{
    family_moments_from_errors, histogram_of, normalized_errors, MomentReport,
};
use crate::error::{Error, Result};
use crate::kernels::{
    cutoff_m_with_epsilon, variance_quadrature, variance_series, PeriodicWeight, SmoothKernel,
    CUTOFF_EPSILON,
};
use crate::modular_forms::{
    deligne_ok, eigenform, hecke_chebyshev_max_err, n_phi_f_identity_check, trace_residual,
    TraceResidual,
};
use crate::primes::primes_up_to;
use crate::selftest;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Tolerance of the variance duality invariant checked by `kernels`.
pub const DUALITY_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "satotate-lab",
    about = "Smoothed Sato-Tate statistics for elliptic curve families and level-1 eigenforms",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report mean, variance (series and quadrature routes), cutoff M and U(m)
    /// for a kernel at scale L.
    Kernels(KernelsArgs),
    /// Point-count a curve family over a prime window into a CSV cache.
    Sweep(SweepArgs),
    /// Family moment report (optionally with a normalized-error histogram).
    Moments(MomentsArgs),
    /// Level-1 eigenform identity checks at weight k.
    ModularCheck(ModularCheckArgs),
    /// Run the full invariant suite and print a pass/fail table.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct KernelsArgs {
    /// Kernel name: "gaussian" or "fejer".
    #[arg(long)]
    pub kernel: String,
    /// Localization scale, 1 <= L <= 8.
    #[arg(long = "L")]
    pub l: f64,
    /// Threshold driving the Fourier cutoff M; must be > 6.
    #[arg(long = "x")]
    pub x: f64,
    /// Exponent offset in the Gaussian cutoff.
    #[arg(long, default_value_t = CUTOFF_EPSILON)]
    pub epsilon: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Family half-width in a: curves have 0 < |a| <= A.
    #[arg(long = "A")]
    pub a_max: u32,
    /// Family half-width in b: curves have 0 < |b| <= B.
    #[arg(long = "B")]
    pub b_max: u32,
    /// Window threshold; must be > 6.
    #[arg(long = "x")]
    pub x: f64,
    /// Window kind: "dyadic" (x/2 < p <= x) or "full" (p <= x).
    #[arg(long, default_value = "dyadic")]
    pub window: String,
    /// Cache file path; defaults to a derived name under the cache directory.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub kernel: String,
    #[arg(long = "L")]
    pub l: f64,
    #[arg(long = "x")]
    pub x: f64,
    #[arg(long = "A")]
    pub a_max: u32,
    #[arg(long = "B")]
    pub b_max: u32,
    /// Highest moment order, 1..=8.
    #[arg(long = "r-max", default_value_t = 4)]
    pub r_max: u32,
    /// Cache file to reuse; built on demand (and persisted) when missing.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Attach the binned normalized errors to the report.
    #[arg(long, default_value_t = false)]
    pub histogram: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct ModularCheckArgs {
    /// Weight of the level-1 eigenform (12, 16, 18, 20, 22 or 26).
    #[arg(long = "k")]
    pub k: u32,
    #[arg(long = "x")]
    pub x: f64,
    #[arg(long, default_value = "fejer")]
    pub kernel: String,
    #[arg(long = "L", default_value_t = 2.0)]
    pub l: f64,
    /// Export the q-expansion as CSV `n,c_n` to this path.
    #[arg(long)]
    pub export_coeffs: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Serialize)]
struct KernelsReport {
    mean: f64,
    #[serde(rename = "varianceSeries")]
    variance_series: f64,
    #[serde(rename = "varianceQuadrature")]
    variance_quadrature: f64,
    #[serde(rename = "M")]
    m_cutoff: u32,
    #[serde(rename = "U")]
    u: Vec<f64>,
    degenerate: bool,
    #[serde(rename = "dualityDefect")]
    duality_defect: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ModularCheckReport {
    k: u32,
    x: f64,
    kernel: String,
    #[serde(rename = "L")]
    l: f64,
    identity_defect: f64,
    identity_budget: f64,
    deligne_ok: bool,
    hecke_chebyshev_max_err: f64,
    trace_residuals: Vec<TraceResidual>,
}

fn check_scale_range(l: f64) -> Result<()> {
    if !(1.0..=8.0).contains(&l) {
        return Err(Error::Config(format!("L must lie in [1, 8], got {l}")));
    }
    Ok(())
}

fn emit(out: Option<&Path>, payload: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, payload).map_err(|e| Error::io(path, e)),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Resolves the cache path: explicit flag wins, otherwise a derived name
/// under `$SATOTATE_CACHE_DIR` (falling back to the working directory).
pub fn resolve_cache_path(
    explicit: Option<&Path>,
    a_max: u32,
    b_max: u32,
    x: f64,
    dyadic: bool,
) -> PathBuf {
    if let Some(path) = explicit {
        return path.to_path_buf();
    }
    let dir = std::env::var_os("SATOTATE_CACHE_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    let window = if dyadic { "dyadic" } else { "full" };
    dir.join(format!("apcache_A{a_max}_B{b_max}_x{x}_{window}.csv"))
}

fn parse_window_kind(name: &str) -> Result<bool> {
    match name {
        "dyadic" => Ok(true),
        "full" => Ok(false),
        other => Err(Error::Config(format!("window must be \"dyadic\" or \"full\", got {other:?}"))),
    }
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        f()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool construction");
        pool.install(f)
    }
}

pub fn cmd_kernels(args: &KernelsArgs) -> Result<i32> {
    let kernel = SmoothKernel::parse(&args.kernel)?;
    check_scale_range(args.l)?;
    let m_cutoff = cutoff_m_with_epsilon(kernel, args.l, args.x, args.epsilon)?;
    let series = variance_series(kernel, args.l, m_cutoff);
    let quadrature = variance_quadrature(kernel, args.l);
    let defect = (series - quadrature).abs();
    let report = KernelsReport {
        mean: crate::kernels::mean_value(kernel, args.l),
        variance_series: series,
        variance_quadrature: quadrature,
        m_cutoff,
        u: (1..=m_cutoff).map(|m| crate::kernels::u_coeff(kernel, args.l, m)).collect(),
        degenerate: series == 0.0,
        duality_defect: defect,
    };
    emit(args.out.as_deref(), &json_line(&report))?;
    Ok(if defect < DUALITY_TOL { 0 } else { 2 })
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let dyadic = parse_window_kind(&args.window)?;
    let window = prime_window(args.x, dyadic)?;
    let cache = with_pool(args.threads, || sweep(args.a_max, args.b_max, &window))?;
    let path = resolve_cache_path(args.cache.as_deref(), args.a_max, args.b_max, args.x, dyadic);
    cache.write_csv(&path)?;
    eprintln!(
        "wrote {} rows ({} curves x {} primes) to {}",
        cache.family_count() * cache.window_count(),
        cache.family_count(),
        cache.window_count(),
        path.display()
    );
    Ok(0)
}

/// Loads the cache if the file exists, otherwise sweeps and persists it.
fn load_or_build_cache(
    path: &Path,
    a_max: u32,
    b_max: u32,
    x: f64,
    threads: usize,
) -> Result<ApCache> {
    if path.exists() {
        let cache = ApCache::read_csv(path)?;
        if cache.a_max() != a_max || cache.b_max() != b_max || cache.x() != x || !cache.dyadic() {
            return Err(Error::Config(format!(
                "cache {} holds A={} B={} x={} window={}, which does not match the request",
                path.display(),
                cache.a_max(),
                cache.b_max(),
                cache.x(),
                if cache.dyadic() { "dyadic" } else { "full" },
            )));
        }
        return Ok(cache);
    }
    let window = prime_window(x, true)?;
    let cache = with_pool(threads, || sweep(a_max, b_max, &window))?;
    cache.write_csv(path)?;
    Ok(cache)
}

/// Builds the moments report for a cache and weight; used by both the CLI and
/// the determinism criterion of the selftest.
pub fn moments_report(
    cache: &ApCache,
    weight: &PeriodicWeight,
    r_max: u32,
    histogram: bool,
) -> Result<MomentReport> {
    let errors = normalized_errors(cache, weight)?;
    let mut report = family_moments_from_errors(&errors, cache, weight, r_max);
    if histogram {
        report.histogram = Some(histogram_of(&errors));
    }
    Ok(report)
}

pub fn cmd_moments(args: &MomentsArgs) -> Result<i32> {
    let kernel = SmoothKernel::parse(&args.kernel)?;
    check_scale_range(args.l)?;
    if !(1..=8).contains(&args.r_max) {
        return Err(Error::Config(format!("r-max must lie in 1..=8, got {}", args.r_max)));
    }
    let path = resolve_cache_path(args.cache.as_deref(), args.a_max, args.b_max, args.x, true);
    let cache = load_or_build_cache(&path, args.a_max, args.b_max, args.x, args.threads)?;
    let weight = PeriodicWeight::new(kernel, args.l, args.x)?;
    let report = with_pool(args.threads, || moments_report(&cache, &weight, args.r_max, args.histogram))?;
    emit(args.out.as_deref(), &json_line(&report))?;
    Ok(0)
}

pub fn cmd_modular_check(args: &ModularCheckArgs) -> Result<i32> {
    let kernel = SmoothKernel::parse(&args.kernel)?;
    check_scale_range(args.l)?;
    if args.x.is_nan() || args.x <= 6.0 {
        return Err(Error::ThresholdTooSmall(args.x));
    }
    // enough terms for the identity over p <= x and a meaningful Deligne range
    let nmax = (args.x.ceil() as usize).max(1000);
    let form = eigenform(args.k, nmax)?;
    if let Some(path) = &args.export_coeffs {
        std::fs::write(path, form.to_coeffs_csv()).map_err(|e| Error::io(path, e))?;
    }
    let weight = PeriodicWeight::new(kernel, args.l, args.x)?;
    let defect = n_phi_f_identity_check(&form, args.x, &weight);
    let budget = 1e-8 * primes_up_to(args.x.floor() as u64).len() as f64;
    let hecke_err = hecke_chebyshev_max_err(&form, 50, 5);
    let deligne = deligne_ok(&form);
    let residuals: Vec<TraceResidual> = (1..=16).map(|n| trace_residual(&form, n)).collect();
    let bounds_ok = residuals.iter().all(|r| r.divisor_bound_ok);
    let report = ModularCheckReport {
        k: args.k,
        x: args.x,
        kernel: kernel.name().to_string(),
        l: args.l,
        identity_defect: defect,
        identity_budget: budget,
        deligne_ok: deligne,
        hecke_chebyshev_max_err: hecke_err,
        trace_residuals: residuals,
    };
    emit(args.out.as_deref(), &json_line(&report))?;
    let ok = defect < budget && deligne && hecke_err < 1e-9 && bounds_ok;
    Ok(if ok { 0 } else { 2 })
}

pub fn cmd_selftest(args: &SelftestArgs) -> Result<i32> {
    let outcomes = selftest::run_all(args.threads);
    let mut all_ok = true;
    for o in &outcomes {
        all_ok &= o.passed;
        println!("{o}");
        eprintln!("{}", o.timing());
    }
    println!("{}", if all_ok { "selftest: all criteria passed" } else { "selftest: FAILURES present" });
    Ok(if all_ok { 0 } else { 2 })
}

/// Dispatches a parsed CLI invocation and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Kernels(args) => cmd_kernels(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Moments(args) => cmd_moments(args),
        Command::ModularCheck(args) => cmd_modular_check(args),
        Command::Selftest(args) => cmd_selftest(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
