//! Acceptance suite: runs every invariant criterion at its pinned tolerance
//! and prints one pass/fail line per criterion (visible with
//! `cargo test --test acceptance -- --nocapture`).

use satotate_lab::curves::{prime_window, sweep};
use satotate_lab::kernels::{PeriodicWeight, SmoothKernel};
use satotate_lab::runner::moments_report;
use satotate_lab::selftest;

#[test]
fn all_criteria_pass() {
    let results = selftest::run_all(0);
    assert_eq!(results.len(), 10);
    let mut failures = Vec::new();
    for r in &results {
        println!("{r} ({})", r.timing());
        if !r.passed {
            failures.push(r.to_string());
        }
    }
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}

/// Regression pin for the deterministic CLT run (Gaussian, L=2, x=2000,
/// A=B=25). The pipeline is bit-reproducible, so these goldens from the first
/// verified run only move if the computation itself changes; the 1e-12 slack
/// absorbs cross-platform libm differences, nothing else.
#[test]
fn clt_run_matches_frozen_goldens() {
    let window = prime_window(2000.0, true).expect("window");
    let cache = sweep(25, 25, &window).expect("sweep");
    let weight = PeriodicWeight::new(SmoothKernel::Gaussian, 2.0, 2000.0).expect("weight");
    let report = moments_report(&cache, &weight, 4, false).expect("report");

    assert_eq!(report.family_count, 2496);
    assert_eq!(report.window_count, 135);
    assert!((report.mean - 0.2720309361170019).abs() < 1e-15);
    assert!((report.variance - 0.043034142961832514).abs() < 1e-15);

    let golden = [
        -0.03712513822884374,
        1.0114927283447117,
        0.024778487673855595,
        2.875358094709052,
    ];
    for (entry, expected) in report.moments.iter().zip(golden) {
        assert!(
            (entry.empirical - expected).abs() < 1e-12,
            "moment r={}: {} vs frozen {}",
            entry.r,
            entry.empirical,
            expected
        );
    }
    let gaussian: Vec<f64> = report.moments.iter().map(|m| m.gaussian).collect();
    assert_eq!(gaussian, vec![0.0, 1.0, 0.0, 3.0]);
}
