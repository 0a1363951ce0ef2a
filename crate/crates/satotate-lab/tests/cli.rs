//! End-to-end checks of the binary: exit codes, JSON shapes, cache files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_satotate-lab"))
}

fn run(args: &[&str], cache_dir: &Path) -> Output {
    bin()
        .args(args)
        .env("SATOTATE_CACHE_DIR", cache_dir)
        .output()
        .expect("binary runs")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("satotate-cli-{tag}"));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

fn parse_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&output.stdout))
    })
}

#[test]
fn kernels_fejer_reports_exact_variance() {
    let dir = temp_dir("kernels");
    let out = run(&["kernels", "--kernel", "fejer", "--L", "2", "--x", "2000"], &dir);
    assert_eq!(out.status.code(), Some(0));
    let json = parse_json(&out);
    assert_eq!(json["varianceSeries"], 0.0625);
    assert_eq!(json["varianceQuadrature"], 0.0625);
    assert_eq!(json["M"], 2);
    assert_eq!(json["U"][0], 0.25);
    assert_eq!(json["degenerate"], false);
}

#[test]
fn kernels_flags_degenerate_scale() {
    let dir = temp_dir("kernels-degenerate");
    let out = run(&["kernels", "--kernel", "fejer", "--L", "1", "--x", "100"], &dir);
    assert_eq!(out.status.code(), Some(0), "duality still holds at 0 = 0");
    let json = parse_json(&out);
    assert_eq!(json["varianceSeries"], 0.0);
    assert_eq!(json["degenerate"], true);
}

#[test]
fn kernels_gaussian_cutoff() {
    let dir = temp_dir("kernels-gaussian");
    let out = run(&["kernels", "--kernel", "gaussian", "--L", "2", "--x", "2000"], &dir);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(parse_json(&out)["M"], 7);
}

#[test]
fn kernels_epsilon_widens_gaussian_cutoff() {
    let dir = temp_dir("kernels-epsilon");
    let out = run(
        &["kernels", "--kernel", "gaussian", "--L", "2", "--x", "2000", "--epsilon", "0.3"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    // ceil(2 (log 2000)^{0.5 + 0.3}) = 11
    assert_eq!(parse_json(&out)["M"], 11);
}

#[test]
fn moments_stdout_is_identical_across_thread_counts() {
    let one = temp_dir("threads-one");
    let many = temp_dir("threads-many");
    let args = |dir: &Path, threads: &str| {
        run(
            &[
                "moments", "--kernel", "gaussian", "--L", "2", "--x", "120", "--A", "3", "--B",
                "3", "--r-max", "4", "--histogram", "--threads", threads,
            ],
            dir,
        )
    };
    let a = args(&one, "1");
    let b = args(&many, "4");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    // the caches built along the way are byte-identical too
    let cache_a = std::fs::read(one.join("apcache_A3_B3_x120_dyadic.csv")).unwrap();
    let cache_b = std::fs::read(many.join("apcache_A3_B3_x120_dyadic.csv")).unwrap();
    assert_eq!(cache_a, cache_b);
}

#[test]
fn config_errors_exit_one() {
    let dir = temp_dir("config-errors");
    // unknown kernel
    let out = run(&["kernels", "--kernel", "sinc", "--L", "2", "--x", "100"], &dir);
    assert_eq!(out.status.code(), Some(1));
    // x below the threshold guard
    let out = run(&["kernels", "--kernel", "fejer", "--L", "2", "--x", "5"], &dir);
    assert_eq!(out.status.code(), Some(1));
    // clap usage error
    let out = run(&["kernels", "--no-such-flag"], &dir);
    assert_eq!(out.status.code(), Some(1));
    // weight 14 has a zero-dimensional cusp space
    let out = run(&["modular-check", "--k", "14", "--x", "100"], &dir);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn io_errors_exit_three() {
    let dir = temp_dir("io-error");
    let missing = dir.join("no-such-subdir").join("cache.csv");
    let out = run(
        &["sweep", "--A", "1", "--B", "1", "--x", "20", "--cache", missing.to_str().unwrap()],
        &dir,
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn degenerate_variance_exits_two() {
    let dir = temp_dir("moments-degenerate");
    let out = run(
        &["moments", "--kernel", "fejer", "--L", "1", "--x", "20", "--A", "1", "--B", "1"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("variance"), "diagnostic names the cause: {stderr}");
}

#[test]
fn sweep_writes_idempotent_cache() {
    let dir = temp_dir("sweep");
    let out = run(&["sweep", "--A", "1", "--B", "1", "--x", "20"], &dir);
    assert_eq!(out.status.code(), Some(0));
    let path = dir.join("apcache_A1_B1_x20_dyadic.csv");
    let first = std::fs::read(&path).expect("cache written");
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("# satotate-lab apcache v1 A=1 B=1 x=20 window=dyadic\na,b,p,ap\n"));
    // 4 curves x 4 primes plus two header lines
    assert_eq!(text.lines().count(), 2 + 16);
    // re-running overwrites with identical bytes
    let out = run(&["sweep", "--A", "1", "--B", "1", "--x", "20"], &dir);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn moments_report_shape_and_histogram() {
    let dir = temp_dir("moments");
    let out = run(
        &[
            "moments", "--kernel", "gaussian", "--L", "2", "--x", "60", "--A", "2", "--B", "2",
            "--r-max", "4", "--histogram",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let json = parse_json(&out);
    assert_eq!(json["config"]["kernel"], "gaussian");
    assert_eq!(json["config"]["A"], 2);
    assert_eq!(json["familyCount"], 16);
    assert_eq!(json["moments"][1]["r"], 2);
    assert_eq!(json["moments"][1]["gaussian"], 1.0);
    assert_eq!(json["moments"][3]["gaussian"], 3.0);
    let counts = json["histogram"]["counts"].as_array().unwrap();
    assert_eq!(counts.len(), 63);
    let total: u64 = counts.iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 16);
    assert_eq!(json["histogram"]["binEdges"].as_array().unwrap().len(), 62);
    // the sweep was cached on demand
    assert!(dir.join("apcache_A2_B2_x60_dyadic.csv").exists());
    // second run reuses the cache and emits identical bytes
    let again = run(
        &[
            "moments", "--kernel", "gaussian", "--L", "2", "--x", "60", "--A", "2", "--B", "2",
            "--r-max", "4", "--histogram",
        ],
        &dir,
    );
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn modular_check_passes_and_exports_coefficients() {
    let dir = temp_dir("modular");
    let coeffs = dir.join("tau.csv");
    let out = run(
        &[
            "modular-check", "--k", "12", "--x", "500", "--kernel", "fejer", "--L", "2",
            "--export-coeffs", coeffs.to_str().unwrap(),
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let json = parse_json(&out);
    assert_eq!(json["deligneOk"], true);
    let defect = json["identityDefect"].as_f64().unwrap();
    let budget = json["identityBudget"].as_f64().unwrap();
    assert!(defect < budget);
    assert!(json["heckeChebyshevMaxErr"].as_f64().unwrap() < 1e-9);
    let residuals = json["traceResiduals"].as_array().unwrap();
    assert_eq!(residuals.len(), 16);
    assert_eq!(residuals[0]["residual"], 0.0);
    assert_eq!(residuals[3]["mainTerm"], 0.5);
    assert_eq!(residuals[3]["lhs"], -0.71875);
    let exported = std::fs::read_to_string(&coeffs).unwrap();
    assert!(exported.starts_with("n,c_n\n1,1\n2,-24\n3,252\n"));
}
