//! The invariant suite behind `satotate-lab selftest` and the acceptance
//! integration test: ten criteria, each with its tolerances pinned in code,
//! reported as one pass/fail line apiece.

use crate::chebyshev::{
    cheb_eval_x, cheb_poly, cheb_product, d_table, measure_moment, MeasureSpec,
};
use crate::curves::{
    ap, ap_via_jacobi, prime_window, sweep, ApCache, Curve,
};
use crate::elliptic_stats::s_average;
use crate::error::Result;
use crate::kernels::{
    cutoff_m, variance_quadrature, variance_series, PeriodicWeight, SmoothKernel,
};
use crate::modular_forms::{
    deligne_ok, eigenform_family, hecke_chebyshev_max_err, n_phi_f_identity_check,
};
use crate::primes::{primes_in_range, primes_up_to};
use crate::runner::moments_report;
use crate::sampling::SplitMix64;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use std::fmt;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionResult {
    /// One-line timing note; kept off the canonical pass/fail line so command
    /// stdout stays byte-identical across runs.
    pub fn timing(&self) -> String {
        format!("criterion {:02} took {:.2}s", self.id, self.elapsed.as_secs_f64())
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:02} {:<26} {} {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

fn timed(
    id: u32,
    name: &'static str,
    run: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = match run() {
        Ok(pair) => pair,
        Err(err) => (false, format!("error: {err}")),
    };
    CriterionResult { id, name, passed, detail, elapsed: start.elapsed() }
}

/// Runs every criterion; `threads = 0` uses the ambient rayon pool.
pub fn run_all(threads: usize) -> Vec<CriterionResult> {
    if threads == 0 {
        run_all_inner()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool construction");
        pool.install(run_all_inner)
    }
}

fn run_all_inner() -> Vec<CriterionResult> {
    let mut results = vec![
        timed(1, "variance-duality", c1_variance_duality),
        timed(2, "chebyshev-algebra", c2_chebyshev_algebra),
        timed(3, "mu-p-moments", c3_mu_p_moments),
        timed(4, "d-tables", c4_d_tables),
        timed(5, "point-counting", c5_point_counting),
    ];
    // criteria 6 and 8 share one family sweep; its cost lands in criterion 6
    let mut shared: Option<ApCache> = None;
    results.push(timed(6, "smoothed-count-identity", || c6_smoothed_identity(&mut shared)));
    results.push(timed(7, "modular-identity", c7_modular_identity));
    results.push(timed(8, "clt-smoke", || c8_clt_smoke(&mut shared)));
    results.push(timed(9, "determinism", c9_determinism));
    results.push(timed(10, "s-average", c10_s_average));
    results
}

fn c1_variance_duality() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut ok = true;
    for kernel in [SmoothKernel::Gaussian, SmoothKernel::Fejer] {
        for l in [1.5, 2.0, 4.0, 8.0] {
            let m_cut = cutoff_m(kernel, l, 2000.0)?;
            let series = variance_series(kernel, l, m_cut);
            let quad = variance_quadrature(kernel, l);
            worst = worst.max((series - quad).abs());
            ok &= (series - quad).abs() < 1e-10;
        }
    }
    let fejer2_series = variance_series(SmoothKernel::Fejer, 2.0, 2);
    let fejer2_quad = variance_quadrature(SmoothKernel::Fejer, 2.0);
    ok &= (fejer2_series - 0.0625).abs() <= 1e-12 && (fejer2_quad - 0.0625).abs() <= 1e-12;
    Ok((ok, format!("max |series - quadrature| = {worst:.2e}; Fejer L=2 gives {fejer2_series}")))
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn c2_chebyshev_algebra() -> Result<(bool, String)> {
    // product formula vs literal polynomial multiplication, exact
    let mut product_ok = true;
    for n in 0..=20u32 {
        for m in n..=20u32 {
            let direct = poly_mul(&cheb_poly(n), &cheb_poly(m));
            let expanded = cheb_product(n, m).to_monomial();
            product_ok &= direct == expanded;
        }
    }

    // orthonormality against the Sato-Tate measure
    let nodes = 4096;
    let max_n = 30usize;
    let mut values = vec![vec![0.0f64; nodes]; max_n + 1];
    let mut mu = vec![0.0f64; nodes];
    for j in 0..nodes {
        let t = j as f64 / nodes as f64;
        let x = 2.0 * (std::f64::consts::PI * t).cos();
        mu[j] = 2.0 * (std::f64::consts::PI * t).sin().powi(2);
        values[0][j] = 1.0;
        values[1][j] = x;
        for n in 2..=max_n {
            values[n][j] = x * values[n - 1][j] - values[n - 2][j];
        }
    }
    let mut ortho_worst = 0.0f64;
    for n in 0..=max_n {
        for m in 0..=max_n {
            let integral =
                crate::sum::kahan_sum((0..nodes).map(|j| values[n][j] * values[m][j] * mu[j]))
                    / nodes as f64;
            let expected = if n == m { 1.0 } else { 0.0 };
            ortho_worst = ortho_worst.max((integral - expected).abs());
        }
    }

    // generating-function identity at 50 deterministic points
    let mut gen_worst = 0.0f64;
    let points = crate::sampling::unit_points(0x5EED, 50);
    for p in [2u64, 3, 5] {
        for &t in &points {
            let x = 2.0 * (std::f64::consts::PI * t).cos();
            let mut sum = 0.0;
            let mut power = 1.0;
            for m in 0..=200u32 {
                sum += cheb_eval_x(2 * m, x) * power;
                power /= p as f64;
            }
            let sp = (p as f64).sqrt();
            let closed = (p as f64 + 1.0) / ((sp + 1.0 / sp).powi(2) - x * x);
            gen_worst = gen_worst.max((sum - closed).abs());
        }
    }

    let ok = product_ok && ortho_worst < 1e-10 && gen_worst < 1e-8;
    Ok((
        ok,
        format!(
            "products exact: {product_ok}; orthonormality defect {ortho_worst:.2e}; generating-fn defect {gen_worst:.2e}"
        ),
    ))
}

fn c3_mu_p_moments() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for p in [2u64, 3, 5, 7] {
        for m in 0..=5u32 {
            let even = measure_moment(MeasureSpec::MuP { p }, 2 * m);
            worst = worst.max((even - (p as f64).powi(-(m as i32))).abs());
            if m >= 1 {
                let odd = measure_moment(MeasureSpec::MuP { p }, 2 * m - 1);
                worst = worst.max(odd.abs());
            }
        }
    }
    Ok((worst < 1e-8, format!("max moment defect {worst:.2e}")))
}

fn compositions(max_r: usize, max_sum: u64) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<u32>> = (1..=max_sum as u32).map(|m| vec![m]).collect();
    while let Some(tuple) = stack.pop() {
        let sum: u64 = tuple.iter().map(|&m| m as u64).sum();
        out.push(tuple.clone());
        if tuple.len() < max_r {
            for next in 1..=(max_sum - sum) as u32 {
                let mut t = tuple.clone();
                t.push(next);
                stack.push(t);
            }
        }
    }
    out
}

fn c4_d_tables() -> Result<(bool, String)> {
    let mut ok = true;
    let mut count = 0usize;
    for args in compositions(4, 16) {
        let table = d_table(&args)?;
        count += 1;
        let sigma: u64 = args.iter().map(|&m| m as u64).sum();

        // nonnegativity, support, parity
        for (m, v) in table.entries() {
            ok &= !v.is_negative();
            ok &= (m as u64) <= sigma;
            ok &= (m as u64) % 2 == sigma % 2;
        }
        // permutation symmetry against the sorted argument list
        let mut sorted = args.clone();
        sorted.sort_unstable();
        let canonical = d_table(&sorted)?;
        ok &= table.entries().eq(canonical.entries());
        // closed forms for r <= 2
        if args.len() == 1 {
            ok &= table.value(args[0]) == BigInt::from(1) && table.entries().count() == 1;
        }
        if args.len() == 2 {
            let expected = if args[0] == args[1] { 1 } else { 0 };
            ok &= table.value(0) == BigInt::from(expected);
        }
        // mass identity: sum_m D(m)(m+1) = prod (m_i + 1)
        let mass: BigInt = table.entries().map(|(m, v)| v * BigInt::from(m + 1)).sum();
        let expected: BigInt = args.iter().map(|&m| BigInt::from(m + 1)).product();
        ok &= mass == expected;
    }
    Ok((ok, format!("{count} argument tuples checked exactly")))
}

fn c5_point_counting() -> Result<(bool, String)> {
    // exhaustive-enumeration oracle for (1,1,5)
    let oracle = {
        let (a, b, p) = (1u64, 1u64, 5u64);
        let mut count = 1u64;
        for x in 0..p {
            let fx = (x * x % p * x % p + a * x % p + b) % p;
            for y in 0..p {
                if y * y % p == fx {
                    count += 1;
                }
            }
        }
        p as i64 + 1 - count as i64
    };
    let curve = Curve::new(1, 1).expect("admissible");
    let mut ok = oracle == -3 && ap(&curve, 5).ap == -3;

    // square-table route vs jacobi route on 200 sampled pairs
    let primes = primes_in_range(5, 600);
    let mut rng = SplitMix64::new(0xAB5E);
    let mut checked = 0;
    while checked < 200 {
        let a = (rng.next_u64() % 41) as i64 - 20;
        let b = (rng.next_u64() % 41) as i64 - 20;
        let p = primes[(rng.next_u64() % primes.len() as u64) as usize];
        let Ok(c) = Curve::new(a, b) else { continue };
        ok &= ap(&c, p) == ap_via_jacobi(&c, p);
        checked += 1;
    }

    // Hasse bound (and flag consistency) on a full sweep
    let window = prime_window(500.0, true)?;
    let cache = sweep(10, 10, &window)?;
    let mut records = 0usize;
    for i in 0..cache.family_count() {
        for j in 0..cache.window_count() {
            let rec = cache.record(i, j);
            records += 1;
            ok &= (rec.ap * rec.ap) as u64 <= 4 * rec.p;
            ok &= rec.theta_available == !cache.curves()[i].divides_delta(rec.p);
        }
    }
    Ok((ok, format!("oracle a_5 = {oracle}; 200 route pairs; {records} sweep records Hasse-checked")))
}

/// The family sweep shared by criteria 6 and 8: A = B = 25, dyadic x = 2000.
fn shared_sweep(slot: &mut Option<ApCache>) -> Result<&ApCache> {
    if slot.is_none() {
        let window = prime_window(2000.0, true)?;
        *slot = Some(sweep(25, 25, &window)?);
    }
    Ok(slot.as_ref().expect("just filled"))
}

fn c6_smoothed_identity(slot: &mut Option<ApCache>) -> Result<(bool, String)> {
    let cache = shared_sweep(slot)?;
    let budget = 1e-8 * cache.window_count() as f64;
    // 100 evenly strided curves from the admissible family
    let stride = cache.family_count() / 100;
    let sample: Vec<&Curve> = (0..100).map(|i| &cache.curves()[i * stride]).collect();
    let mut worst = 0.0f64;
    for kernel in [SmoothKernel::Gaussian, SmoothKernel::Fejer] {
        let weight = PeriodicWeight::new(kernel, 2.0, cache.x())?;
        for curve in &sample {
            let direct = crate::elliptic_stats::n_phi_direct(curve, cache, &weight)?;
            let fourier = crate::elliptic_stats::n_phi_fourier(curve, cache, &weight)?;
            worst = worst.max((direct - fourier).abs());
        }
    }
    Ok((worst < budget, format!("max |direct - fourier| = {worst:.2e} (budget {budget:.2e})")))
}

fn c7_modular_identity() -> Result<(bool, String)> {
    let forms = eigenform_family(10_000)?;
    let delta = &forms[0];

    // tau values against an independent eta-product expansion
    let tau_oracle = {
        let n = 6usize;
        let mut eta = vec![0i64; n];
        eta[0] = 1;
        for k in 1..n {
            for _ in 0..24 {
                for j in (k..n).rev() {
                    eta[j] -= eta[j - k];
                }
            }
        }
        eta
    };
    let mut ok = delta.c(2) == &BigInt::from(tau_oracle[1])
        && delta.c(3) == &BigInt::from(tau_oracle[2])
        && delta.c(5) == &BigInt::from(tau_oracle[4])
        && tau_oracle[1] == -24
        && tau_oracle[2] == 252
        && tau_oracle[4] == 4830;

    // smoothed identity over the full window p <= 500, both kernels
    let pi_x = primes_up_to(500).len() as f64;
    let mut worst_defect = 0.0f64;
    for kernel in [SmoothKernel::Gaussian, SmoothKernel::Fejer] {
        let weight = PeriodicWeight::new(kernel, 2.0, 500.0)?;
        worst_defect = worst_defect.max(n_phi_f_identity_check(delta, 500.0, &weight));
    }
    ok &= worst_defect < 1e-8 * pi_x;

    // Hecke recursion vs Chebyshev evaluation
    let hecke_err = hecke_chebyshev_max_err(delta, 50, 5);
    ok &= hecke_err < 1e-9;

    // exact Deligne bound for all six weights to Nmax = 10^4
    let mut deligne = true;
    for form in &forms {
        deligne &= deligne_ok(form);
    }
    ok &= deligne;

    Ok((
        ok,
        format!(
            "identity defect {worst_defect:.2e} (budget {:.2e}); hecke-cheb {hecke_err:.2e}; deligne x6: {deligne}",
            1e-8 * pi_x
        ),
    ))
}

/// Acceptance windows for the empirical moments at A=B=25, x=2000. These are
/// finite-sample design tolerances, deliberately loose.
pub const CLT_M1_MAX: f64 = 0.15;
pub const CLT_M2_RANGE: (f64, f64) = (0.7, 1.3);
pub const CLT_M3_MAX: f64 = 0.6;
pub const CLT_M4_RANGE: (f64, f64) = (1.8, 4.5);

fn c8_clt_smoke(slot: &mut Option<ApCache>) -> Result<(bool, String)> {
    let cache = shared_sweep(slot)?;
    let weight = PeriodicWeight::new(SmoothKernel::Gaussian, 2.0, cache.x())?;
    let report = moments_report(cache, &weight, 4, false)?;
    let m: Vec<f64> = report.moments.iter().map(|e| e.empirical).collect();
    let ok = m[0].abs() < CLT_M1_MAX
        && (CLT_M2_RANGE.0..=CLT_M2_RANGE.1).contains(&m[1])
        && m[2].abs() < CLT_M3_MAX
        && (CLT_M4_RANGE.0..=CLT_M4_RANGE.1).contains(&m[3]);
    Ok((
        ok,
        format!(
            "family {} curves, {} primes; m1 = {:+.4}, m2 = {:.4}, m3 = {:+.4}, m4 = {:.4}",
            report.family_count, report.window_count, m[0], m[1], m[2], m[3]
        ),
    ))
}

fn c9_determinism() -> Result<(bool, String)> {
    let run = |threads: usize| -> Result<(String, String)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool construction");
        pool.install(|| {
            let window = prime_window(2000.0, true)?;
            let cache = sweep(25, 25, &window)?;
            let weight = PeriodicWeight::new(SmoothKernel::Gaussian, 2.0, 2000.0)?;
            let report = moments_report(&cache, &weight, 4, true)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            Ok((cache.to_csv_string(), json))
        })
    };
    let (csv_one, json_one) = run(1)?;
    let (csv_many, json_many) = run(rayon::current_num_threads().max(2))?;
    let ok = csv_one == csv_many && json_one == json_many;
    Ok((
        ok,
        format!(
            "cache bytes equal: {}; report bytes equal: {}",
            csv_one == csv_many,
            json_one == json_many
        ),
    ))
}

fn c10_s_average() -> Result<(bool, String)> {
    let mut ok = true;
    for p in [5u64, 7, 11] {
        ok &= s_average(p, 0)? == 1.0;
    }
    // exhaustive enumeration oracle over the 25 residue pairs, jacobi route
    let p = 5u64;
    let mut acc = 0.0f64;
    let mut admissible = 0u32;
    let mut sum_ap2 = 0i64;
    for a in 1..p as i64 {
        for b in 1..p as i64 {
            let delta = 4 * a * a * a + 27 * b * b;
            if delta.rem_euclid(p as i64) == 0 {
                continue;
            }
            let rec = ap_via_jacobi(&Curve::new(a, b).expect("admissible"), p);
            acc += cheb_eval_x(2, rec.ap as f64 / (p as f64).sqrt());
            admissible += 1;
            sum_ap2 += rec.ap * rec.ap;
        }
    }
    let oracle = acc / 25.0;
    let rational = (sum_ap2 - admissible as i64 * 5) as f64 / 125.0;
    let value = s_average(5, 2)?;
    ok &= (value - oracle).abs() <= 1e-15;
    ok &= (value - rational).abs() <= 1e-15;
    Ok((ok, format!("S(5^2) = {value} (oracle {oracle}, exact {rational})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_enumerate_ordered_tuples() {
        let all = compositions(4, 16);
        // 16 + 120 + 560 + 1820 ordered tuples with r <= 4 parts summing <= 16
        assert_eq!(all.len(), 16 + 120 + 560 + 1820);
        assert!(all.iter().all(|t| t.iter().map(|&m| m as u64).sum::<u64>() <= 16));
        assert!(all.iter().all(|t| !t.is_empty() && t.len() <= 4));
        assert!(all.contains(&vec![16]));
        assert!(all.contains(&vec![1, 1, 1, 13]));
    }

    #[test]
    fn fast_criteria_pass() {
        for result in [
            timed(1, "variance-duality", c1_variance_duality),
            timed(3, "mu-p-moments", c3_mu_p_moments),
            timed(10, "s-average", c10_s_average),
        ] {
            assert!(result.passed, "{result}");
        }
    }

    #[test]
    fn display_format_is_one_deterministic_line() {
        let r = CriterionResult {
            id: 3,
            name: "mu-p-moments",
            passed: true,
            detail: "ok".into(),
            elapsed: Duration::from_millis(1234),
        };
        let line = r.to_string();
        assert!(line.starts_with("criterion 03 mu-p-moments"));
        assert!(line.contains("PASS"));
        assert!(!line.contains('\n'));
        // wall-clock time stays off the canonical line
        assert!(!line.contains("1.23"));
        assert!(r.timing().contains("1.23"));
    }
}
