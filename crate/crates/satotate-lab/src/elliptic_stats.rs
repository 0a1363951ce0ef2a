//! The family moment harness.
//!
//! For each admissible curve the smoothed count over a dyadic window is
//!
//! ```text
//! N(E) = sum_{x/2 < p <= x, p not | Delta} phi_L(theta_E(p)),
//! ```
//!
//! with the Fourier-side identity
//!
//! ```text
//! N(E) = pi~_Delta(x) int phi_L mu + sum_{m=1}^{M} U(m) sum_p X_{2m}(2 cos pi theta_E(p))
//! ```
//!
//! (both routes are implemented and tested against each other). The family
//! statistic is the normalized error
//!
//! ```text
//! e(a,b) = (N(E) - pi~(x) int phi_L mu) / sqrt(pi~(x) V),
//! ```
//!
//! whose empirical moments are compared against the Gaussian reference
//! `r! / ((r/2)! 2^(r/2))`. Note the centering uses the full window count
//! `pi~(x)`: primes dividing the discriminant contribute no weight but stay
//! in the centering term, so their deficit is part of the measured error.

use crate::chebyshev::cheb_eval_x;
use crate::curves::{square_table, theta, ApCache, Curve};
use crate::error::{Error, Result};
use crate::kernels::PeriodicWeight;
use crate::sum::{chunked_sum, KahanSum};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

/// Histogram layout: 61 uniform bins on [-4, 4] plus one overflow bin on each
/// side, so `counts.len() == 63` and `counts[0]`/`counts[62]` are the
/// overflow counts. `bin_edges` holds the 62 uniform edges.
pub const HISTOGRAM_BINS: usize = 61;

#[derive(Debug, Clone, Serialize)]
pub struct MomentConfig {
    pub kernel: String,
    #[serde(rename = "L")]
    pub l: f64,
    pub x: f64,
    #[serde(rename = "A")]
    pub a_max: u32,
    #[serde(rename = "B")]
    pub b_max: u32,
    #[serde(rename = "M")]
    pub m_cutoff: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentEntry {
    pub r: u32,
    pub empirical: f64,
    pub gaussian: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MomentReport {
    pub config: MomentConfig,
    pub family_count: usize,
    pub window_count: usize,
    pub mean: f64,
    pub variance: f64,
    pub moments: Vec<MomentEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Histogram>,
}

fn cache_row<'c>(cache: &'c ApCache, curve: &Curve) -> Result<(usize, &'c [i64])> {
    let idx = cache.curve_index(curve).ok_or(Error::MissingCacheRow(curve.a(), curve.b()))?;
    Ok((idx, cache.ap_row(idx)))
}

/// Direct route: sum of `phi_L(theta_E(p))` over window primes with good
/// reduction.
pub fn n_phi_direct(curve: &Curve, cache: &ApCache, weight: &PeriodicWeight) -> Result<f64> {
    let (idx, _) = cache_row(cache, curve)?;
    let mut acc = KahanSum::new();
    for j in 0..cache.window_count() {
        let rec = cache.record(idx, j);
        if rec.theta_available {
            acc.add(weight.eval(theta(&rec).expect("record is available")));
        }
    }
    Ok(acc.value())
}

/// Fourier route: `pi~_Delta * mean + sum_m U(m) sum_p X_{2m}(2 cos pi theta)`.
/// Agrees with [`n_phi_direct`] up to the truncated U-tail (which vanishes for
/// a compactly supported transform).
pub fn n_phi_fourier(curve: &Curve, cache: &ApCache, weight: &PeriodicWeight) -> Result<f64> {
    let (idx, _) = cache_row(cache, curve)?;
    let m_cut = weight.m_cutoff() as usize;
    let mut power_sums = vec![KahanSum::new(); m_cut];
    let mut good_primes = 0usize;
    for j in 0..cache.window_count() {
        let rec = cache.record(idx, j);
        if !rec.theta_available {
            continue;
        }
        good_primes += 1;
        let x = 2.0 * (std::f64::consts::PI * theta(&rec).expect("record is available")).cos();
        // one recurrence pass collects X_2, X_4, ..., X_2M
        let mut prev = 1.0;
        let mut curr = x;
        for n in 2..=2 * m_cut as u32 {
            (prev, curr) = (curr, x * curr - prev);
            if n % 2 == 0 {
                power_sums[(n / 2 - 1) as usize].add(curr);
            }
        }
    }
    let mut total = KahanSum::new();
    total.add(good_primes as f64 * weight.mean());
    for (i, sum) in power_sums.iter().enumerate() {
        total.add(weight.u(i as u32 + 1) * sum.value());
    }
    Ok(total.value())
}

/// Normalized error `e(a,b)` for every curve in the cache, in cache order.
/// Per-curve sums run in parallel; each curve's own accumulation is
/// sequential, so the output is independent of the worker count.
pub fn normalized_errors(cache: &ApCache, weight: &PeriodicWeight) -> Result<Vec<f64>> {
    let variance = weight.variance();
    if variance <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let window = cache.window_count() as f64;
    let center = window * weight.mean();
    let denom = (window * variance).sqrt();
    cache
        .curves()
        .par_iter()
        .map(|curve| Ok((n_phi_direct(curve, cache, weight)? - center) / denom))
        .collect()
}

/// Empirical moments `r = 1..=r_max` of precomputed normalized errors.
pub fn family_moments_from_errors(
    errors: &[f64],
    cache: &ApCache,
    weight: &PeriodicWeight,
    r_max: u32,
) -> MomentReport {
    assert!((1..=8).contains(&r_max), "r_max must be in 1..=8, got {r_max}");
    let n = errors.len() as f64;
    let moments = (1..=r_max)
        .map(|r| {
            let powers: Vec<f64> = errors.iter().map(|e| e.powi(r as i32)).collect();
            MomentEntry {
                r,
                empirical: chunked_sum(&powers) / n,
                gaussian: gaussian_moment_f64(r),
            }
        })
        .collect();
    MomentReport {
        config: MomentConfig {
            kernel: weight.kernel().name().to_string(),
            l: weight.l(),
            x: cache.x(),
            a_max: cache.a_max(),
            b_max: cache.b_max(),
            m_cutoff: weight.m_cutoff(),
        },
        family_count: errors.len(),
        window_count: cache.window_count(),
        mean: weight.mean(),
        variance: weight.variance(),
        moments,
        histogram: None,
    }
}

/// Moment report for the whole family in the cache. Rejects weights with
/// zero variance (the Fejer kernel at L = 1), whose normalized error is
/// undefined.
pub fn family_moments(cache: &ApCache, weight: &PeriodicWeight, r_max: u32) -> Result<MomentReport> {
    let errors = normalized_errors(cache, weight)?;
    Ok(family_moments_from_errors(&errors, cache, weight, r_max))
}

/// Bins normalized errors into the fixed histogram layout.
pub fn histogram_of(errors: &[f64]) -> Histogram {
    let lo = -4.0;
    let hi = 4.0;
    let bin_edges: Vec<f64> =
        (0..=HISTOGRAM_BINS).map(|k| lo + (hi - lo) * k as f64 / HISTOGRAM_BINS as f64).collect();
    let mut counts = vec![0u64; HISTOGRAM_BINS + 2];
    for &e in errors {
        let slot = if e < lo {
            0
        } else if e >= hi {
            HISTOGRAM_BINS + 1
        } else {
            1 + ((e - lo) / (hi - lo) * HISTOGRAM_BINS as f64) as usize
        };
        counts[slot.min(HISTOGRAM_BINS + 1)] += 1;
    }
    Histogram { bin_edges, counts }
}

/// `r`-th moment of the standard Gaussian, exactly: 0 for odd `r`, the double
/// factorial `(r-1)!! = r! / ((r/2)! 2^(r/2))` for even `r`.
pub fn gaussian_moment(r: u32) -> BigUint {
    assert!(r <= 64, "gaussian_moment guard: r = {r}");
    if r % 2 == 1 {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    let mut i = 1u32;
    while i < r {
        acc *= BigUint::from(i);
        i += 2;
    }
    acc
}

pub fn gaussian_moment_f64(r: u32) -> f64 {
    gaussian_moment(r).to_f64().expect("double factorial fits f64 for r <= 64")
}

/// Birch-style residue-family average
/// `S(p^alpha) = p^{-2} sum_{a,b=1..p, gcd(ab Delta, p)=1} X_alpha(a_p / sqrt p)`,
/// with the convention `S(p^0) = S(1) = 1`.
pub fn s_average(p: u64, alpha: u32) -> Result<f64> {
    if p > 500 || alpha > 12 {
        return Err(Error::SAverageTooLarge(p, alpha));
    }
    if alpha == 0 {
        return Ok(1.0);
    }
    // the quadratic-character point count needs an odd prime
    assert!(p >= 3 && p % 2 == 1, "s_average needs an odd prime, got {p}");
    let table = square_table(p)?;
    let sqrt_p = (p as f64).sqrt();
    let mut acc = KahanSum::new();
    for a in 1..p as i64 {
        for b in 1..p as i64 {
            let delta = 4 * a * a * a + 27 * b * b;
            if delta.rem_euclid(p as i64) == 0 {
                continue;
            }
            let curve = Curve::new(a, b).expect("nonzero residues below p are admissible");
            let ap = crate::curves::ap_with_table(&curve, &table);
            acc.add(cheb_eval_x(alpha, ap as f64 / sqrt_p));
        }
    }
    Ok(acc.value() / (p * p) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{ap_via_jacobi, prime_window, sweep};
    use crate::kernels::SmoothKernel;

    fn fejer2(x: f64) -> PeriodicWeight {
        PeriodicWeight::new(SmoothKernel::Fejer, 2.0, x).unwrap()
    }

    #[test]
    fn gaussian_moments_exact() {
        assert_eq!(gaussian_moment(0), BigUint::from(1u32));
        assert_eq!(gaussian_moment(2), BigUint::from(1u32));
        assert_eq!(gaussian_moment(3), BigUint::zero());
        assert_eq!(gaussian_moment(4), BigUint::from(3u32));
        assert_eq!(gaussian_moment(6), BigUint::from(15u32));
        assert_eq!(gaussian_moment(8), BigUint::from(105u32));
        // r = 64 stays finite in f64
        assert!(gaussian_moment_f64(64).is_finite());
    }

    #[test]
    fn n_phi_direct_closed_form_on_singleton_window() {
        // window (5, 10] = {7}; ap(1,1,7) = 3 gives cos(2 pi theta) = -5/14,
        // so phi_2(theta) = (1 - 5/14)/2 = 9/28
        let w = prime_window(10.0, true).unwrap();
        let cache = sweep(1, 2, &w).unwrap();
        let curve = Curve::new(1, 1).unwrap();
        let v = n_phi_direct(&curve, &cache, &fejer2(10.0)).unwrap();
        assert!((v - 9.0 / 28.0).abs() < 1e-13, "{v}");
        // Delta(1, 2) = 112 = 16 * 7: the only window prime is bad, empty sum
        let bad = Curve::new(1, 2).unwrap();
        assert_eq!(n_phi_direct(&bad, &cache, &fejer2(10.0)).unwrap(), 0.0);
        assert_eq!(n_phi_fourier(&bad, &cache, &fejer2(10.0)).unwrap(), 0.0);
    }

    #[test]
    fn n_phi_with_constant_weight_counts_good_primes() {
        // Fejer at L = 1 periodizes to the constant 1
        let w = prime_window(40.0, true).unwrap();
        let cache = sweep(2, 2, &w).unwrap();
        let weight = PeriodicWeight::new(SmoothKernel::Fejer, 1.0, 40.0).unwrap();
        for curve in cache.curves() {
            let idx = cache.curve_index(curve).unwrap();
            let good = (0..cache.window_count())
                .filter(|&j| cache.record(idx, j).theta_available)
                .count();
            let direct = n_phi_direct(curve, &cache, &weight).unwrap();
            let fourier = n_phi_fourier(curve, &cache, &weight).unwrap();
            assert!((direct - good as f64).abs() < 1e-12);
            assert!((fourier - good as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_route_matches_direct_route() {
        let window = prime_window(300.0, true).unwrap();
        let cache = sweep(4, 4, &window).unwrap();
        let tol = 1e-9 * cache.window_count() as f64;
        for kernel in [SmoothKernel::Gaussian, SmoothKernel::Fejer] {
            for l in [2.0, 4.0] {
                let weight = PeriodicWeight::new(kernel, l, 300.0).unwrap();
                for curve in cache.curves() {
                    let d = n_phi_direct(curve, &cache, &weight).unwrap();
                    let f = n_phi_fourier(curve, &cache, &weight).unwrap();
                    assert!((d - f).abs() < tol, "{kernel:?} L={l} {curve:?}: {d} vs {f}");
                }
            }
        }
    }

    #[test]
    fn missing_curve_is_an_error() {
        let w = prime_window(20.0, true).unwrap();
        let cache = sweep(1, 1, &w).unwrap();
        let outside = Curve::new(5, 5).unwrap();
        assert!(matches!(
            n_phi_direct(&outside, &cache, &fejer2(20.0)),
            Err(Error::MissingCacheRow(5, 5))
        ));
    }

    #[test]
    fn degenerate_variance_is_rejected() {
        let w = prime_window(20.0, true).unwrap();
        let cache = sweep(1, 1, &w).unwrap();
        let weight = PeriodicWeight::new(SmoothKernel::Fejer, 1.0, 20.0).unwrap();
        assert!(matches!(family_moments(&cache, &weight, 2), Err(Error::DegenerateVariance)));
    }

    #[test]
    fn singleton_family_first_moment_is_its_error() {
        let w = prime_window(50.0, true).unwrap();
        let cache = sweep(1, 1, &w).unwrap();
        let weight = fejer2(50.0);
        let errors = normalized_errors(&cache, &weight).unwrap();
        let report = family_moments(&cache, &weight, 2).unwrap();
        assert_eq!(report.family_count, 4);
        // moments over a 4-curve family: plain averages of powers
        let mean: f64 = errors.iter().sum::<f64>() / 4.0;
        assert!((report.moments[0].empirical - mean).abs() < 1e-15);
        assert_eq!(report.moments[0].gaussian, 0.0);
        assert_eq!(report.moments[1].gaussian, 1.0);
        // Cauchy-Schwarz on the empirical distribution
        assert!(report.moments[0].empirical.powi(2) <= report.moments[1].empirical + 1e-15);
    }

    #[test]
    fn moments_are_scale_covariant() {
        let w = prime_window(200.0, true).unwrap();
        let cache = sweep(3, 3, &w).unwrap();
        let weight = PeriodicWeight::new(SmoothKernel::Gaussian, 2.0, 200.0).unwrap();
        let base = normalized_errors(&cache, &weight).unwrap();
        let scaled = normalized_errors(&cache, &weight.scaled(3.5)).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn errors_are_deterministic_across_pool_sizes() {
        let w = prime_window(100.0, true).unwrap();
        let cache = sweep(3, 3, &w).unwrap();
        let weight = PeriodicWeight::new(SmoothKernel::Gaussian, 2.0, 100.0).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| normalized_errors(&cache, &weight).unwrap())
        };
        let one = run(1);
        let many = run(4);
        assert!(one.iter().zip(&many).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn histogram_bins_and_overflow() {
        let errors = [-5.0, -4.0, -3.99, 0.0, 3.99, 4.0, 7.0];
        let h: Histogram = histogram_of(&errors);
        assert_eq!(h.bin_edges.len(), HISTOGRAM_BINS + 1);
        assert_eq!(h.counts.len(), HISTOGRAM_BINS + 2);
        assert_eq!(h.counts.iter().sum::<u64>(), errors.len() as u64);
        assert_eq!(h.counts[0], 1); // -5.0
        assert_eq!(h.counts[HISTOGRAM_BINS + 1], 2); // 4.0 and 7.0
        assert_eq!(h.counts[1], 2); // -4.0 and -3.99 land in the first bin
    }

    #[test]
    fn s_average_conventions_and_oracle() {
        for p in [5, 7, 11] {
            assert_eq!(s_average(p, 0).unwrap(), 1.0);
        }
        // exhaustive enumeration over the 25 residue pairs gives the exact
        // rational (sum ap^2 - 12 * 5) / 125 = -4/125
        assert!((s_average(5, 2).unwrap() + 4.0 / 125.0).abs() <= 1e-15);

        // independent jacobi-route oracle for (7, 1) and (5, 2)
        for (p, alpha) in [(7u64, 1u32), (5, 2)] {
            let mut acc = 0.0;
            for a in 1..p as i64 {
                for b in 1..p as i64 {
                    let delta = 4 * a * a * a + 27 * b * b;
                    if delta.rem_euclid(p as i64) == 0 {
                        continue;
                    }
                    let rec = ap_via_jacobi(&Curve::new(a, b).unwrap(), p);
                    acc += cheb_eval_x(alpha, rec.ap as f64 / (p as f64).sqrt());
                }
            }
            let oracle = acc / (p * p) as f64;
            assert!((s_average(p, alpha).unwrap() - oracle).abs() < 1e-14, "p={p} alpha={alpha}");
        }
    }

    #[test]
    fn s_average_guards() {
        assert!(s_average(503, 2).is_err());
        assert!(s_average(5, 13).is_err());
    }
}
