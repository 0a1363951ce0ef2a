//! Level-1 Hecke eigenforms through exact q-expansions.
//!
//! For the six weights k in {12, 16, 18, 20, 22, 26} the cusp space for the
//! full modular group is one-dimensional, so the normalized eigenform is an
//! explicit integer series: Delta = (E4^3 - E6^2)/1728 times a monomial in
//! E4 = 1 + 240 sum sigma_3(n) q^n and E6 = 1 - 504 sum sigma_5(n) q^n.
//! Everything downstream is an identity on those exact coefficients: the
//! Deligne bound c(p)^2 <= 4 p^(k-1), the Hecke recursion at prime powers
//! against Chebyshev evaluation at the Frobenius angle, the smoothed-count
//! identity over full prime windows, and divisor-bounded trace residuals.

use crate::chebyshev::{cheb_eval, zm_power_integral, MeasureSpec};
use crate::error::{Error, Result};
use crate::kernels::PeriodicWeight;
use crate::primes::primes_up_to;
use crate::sum::KahanSum;
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Weights whose level-1 cusp space is one-dimensional.
pub const SUPPORTED_WEIGHTS: [u32; 6] = [12, 16, 18, 20, 22, 26];

/// Cap on the q-expansion length.
pub const MAX_EXPANSION: usize = 100_000;

/// A normalized level-1 eigenform as its integer q-expansion `c(1..=nmax)`,
/// with `c(1) = 1`. The Deligne-normalized coefficients are
/// `a_f(n) = c(n) / n^((k-1)/2)`.
#[derive(Debug, Clone)]
pub struct EigenformQExpansion {
    k: u32,
    /// `coeffs[n]` is `c(n)`; index 0 is unused (zero).
    coeffs: Vec<BigInt>,
}

impl EigenformQExpansion {
    pub fn weight(&self) -> u32 {
        self.k
    }

    pub fn nmax(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Integer coefficient `c(n)`, 1-based.
    pub fn c(&self, n: usize) -> &BigInt {
        &self.coeffs[n]
    }

    /// Deligne-normalized coefficient `a_f(n) = c(n) / n^((k-1)/2)`.
    pub fn af(&self, n: usize) -> f64 {
        big_f64(&self.coeffs[n]) / (n as f64).powf((self.k as f64 - 1.0) / 2.0)
    }

    /// CSV export `n,c_n` with exact decimal coefficients.
    pub fn to_coeffs_csv(&self) -> String {
        let mut out = String::from("n,c_n\n");
        for n in 1..=self.nmax() {
            let _ = writeln!(out, "{},{}", n, self.coeffs[n]);
        }
        out
    }
}

fn big_f64(v: &BigInt) -> f64 {
    v.to_f64().expect("coefficient in f64 range")
}

/// Divisor power sums `sigma_e(1..=nmax)` by a divisor sieve.
fn sigma_sieve(nmax: usize, e: u32) -> Vec<u128> {
    let mut out = vec![0u128; nmax + 1];
    for d in 1..=nmax {
        let de = (d as u128).pow(e);
        let mut m = d;
        while m <= nmax {
            out[m] += de;
            m += d;
        }
    }
    out
}

/// Truncated product of two q-series (dense schoolbook convolution).
fn series_mul(a: &[BigInt], b: &[BigInt], nmax: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); nmax + 1];
    for i in 0..=nmax.min(a.len() - 1) {
        if a[i].is_zero() {
            continue;
        }
        for j in 0..=(nmax - i).min(b.len() - 1) {
            if !b[j].is_zero() {
                out[i + j] += &a[i] * &b[j];
            }
        }
    }
    out
}

fn eisenstein(nmax: usize, factor: i64, e: u32) -> Vec<BigInt> {
    let sigma = sigma_sieve(nmax, e);
    let mut out = vec![BigInt::zero(); nmax + 1];
    out[0] = BigInt::from(1);
    for n in 1..=nmax {
        out[n] = BigInt::from(factor) * BigInt::from(sigma[n]);
    }
    out
}

/// Shared intermediates for the whole weight family.
struct LevelOneBasis {
    delta: Vec<BigInt>,
    e4: Vec<BigInt>,
    e6: Vec<BigInt>,
}

fn level_one_basis(nmax: usize) -> Result<LevelOneBasis> {
    let e4 = eisenstein(nmax, 240, 3);
    let e6 = eisenstein(nmax, -504, 5);
    let e4_sq = series_mul(&e4, &e4, nmax);
    let e4_cube = series_mul(&e4_sq, &e4, nmax);
    let e6_sq = series_mul(&e6, &e6, nmax);
    let mut delta = vec![BigInt::zero(); nmax + 1];
    let modulus = BigInt::from(1728);
    for n in 0..=nmax {
        let num = &e4_cube[n] - &e6_sq[n];
        let (q, r) = num_integer::Integer::div_rem(&num, &modulus);
        if !r.is_zero() {
            return Err(Error::InexactDivision(n));
        }
        delta[n] = q;
    }
    Ok(LevelOneBasis { delta, e4, e6 })
}

fn form_from_basis(basis: &LevelOneBasis, k: u32, nmax: usize) -> Result<EigenformQExpansion> {
    let series = match k {
        12 => basis.delta.clone(),
        16 => series_mul(&basis.delta, &basis.e4, nmax),
        18 => series_mul(&basis.delta, &basis.e6, nmax),
        20 => {
            let d4 = series_mul(&basis.delta, &basis.e4, nmax);
            series_mul(&d4, &basis.e4, nmax)
        }
        22 => {
            let d4 = series_mul(&basis.delta, &basis.e4, nmax);
            series_mul(&d4, &basis.e6, nmax)
        }
        26 => {
            let d4 = series_mul(&basis.delta, &basis.e4, nmax);
            let d44 = series_mul(&d4, &basis.e4, nmax);
            series_mul(&d44, &basis.e6, nmax)
        }
        other => return Err(Error::UnsupportedWeight(other)),
    };
    debug_assert!(series[0].is_zero() && series[1] == BigInt::from(1));
    Ok(EigenformQExpansion { k, coeffs: series })
}

/// The normalized eigenform of weight `k` to `nmax` q-expansion terms, by
/// exact integer series arithmetic.
pub fn eigenform(k: u32, nmax: usize) -> Result<EigenformQExpansion> {
    if nmax > MAX_EXPANSION {
        return Err(Error::ExpansionTooLong(nmax));
    }
    if !SUPPORTED_WEIGHTS.contains(&k) {
        return Err(Error::UnsupportedWeight(k));
    }
    let basis = level_one_basis(nmax)?;
    form_from_basis(&basis, k, nmax)
}

/// All six dimension-one forms at once, sharing the Eisenstein intermediates
/// (k = 26 alone costs three of the eight large convolutions).
pub fn eigenform_family(nmax: usize) -> Result<Vec<EigenformQExpansion>> {
    if nmax > MAX_EXPANSION {
        return Err(Error::ExpansionTooLong(nmax));
    }
    let basis = level_one_basis(nmax)?;
    // build in a chain so Delta*E4 and Delta*E4^2 are reused
    let d4 = series_mul(&basis.delta, &basis.e4, nmax);
    let d44 = series_mul(&d4, &basis.e4, nmax);
    let forms = vec![
        EigenformQExpansion { k: 12, coeffs: basis.delta.clone() },
        EigenformQExpansion { k: 16, coeffs: d4.clone() },
        EigenformQExpansion { k: 18, coeffs: series_mul(&basis.delta, &basis.e6, nmax) },
        EigenformQExpansion { k: 20, coeffs: d44.clone() },
        EigenformQExpansion { k: 22, coeffs: series_mul(&d4, &basis.e6, nmax) },
        EigenformQExpansion { k: 26, coeffs: series_mul(&d44, &basis.e6, nmax) },
    ];
    Ok(forms)
}

/// Frobenius angle `theta_f(p) in [0, 1]` with `a_f(p) = 2 cos(pi theta)`.
pub fn theta_f(form: &EigenformQExpansion, p: u64) -> Result<f64> {
    if p as usize > form.nmax() {
        return Err(Error::PrimeOutOfRange { p, nmax: form.nmax() });
    }
    let ratio = big_f64(form.c(p as usize))
        / (2.0 * (p as f64).powf((form.weight() as f64 - 1.0) / 2.0));
    // Deligne guarantees |ratio| <= 1; the clamp only absorbs float rounding
    debug_assert!(ratio.abs() <= 1.0 + 1e-12);
    Ok(ratio.clamp(-1.0, 1.0).acos() / PI)
}

/// `a_f(p^m) = X_m(2 cos pi theta_f(p))` by Chebyshev evaluation; agrees with
/// the exact Hecke recursion `c(p^(j+1)) = c(p) c(p^j) - p^(k-1) c(p^(j-1))`
/// whenever `p^m <= nmax`.
pub fn af_prime_power(form: &EigenformQExpansion, p: u64, m: u32) -> f64 {
    let t = theta_f(form, p).expect("p within the computed expansion");
    cheb_eval(m, t)
}

/// Largest error over `p <= p_max`, `1 <= m <= m_max`, `p^m <= nmax` between
/// the Hecke-recursion value of `a_f(p^m)` and its Chebyshev evaluation.
pub fn hecke_chebyshev_max_err(form: &EigenformQExpansion, p_max: u64, m_max: u32) -> f64 {
    let k = form.weight();
    let mut worst = 0.0f64;
    for p in primes_up_to(p_max.min(form.nmax() as u64)) {
        let pk = BigInt::from(p).pow(k - 1);
        let mut c_prev = BigInt::from(1); // c(p^0)
        let mut c_curr = form.c(p as usize).clone(); // c(p^1)
        let mut pm = p as u128; // p^m
        for m in 1..=m_max {
            if pm > form.nmax() as u128 {
                break;
            }
            // the recursion must reproduce the tabulated coefficient exactly
            debug_assert_eq!(&c_curr, form.c(pm as usize), "p={p} m={m}");
            let normalized = big_f64(&c_curr) / (pm as f64).powf((k as f64 - 1.0) / 2.0);
            let err = (normalized - af_prime_power(form, p, m)).abs();
            worst = worst.max(err);
            let next = form.c(p as usize) * &c_curr - &pk * &c_prev;
            c_prev = std::mem::replace(&mut c_curr, next);
            pm = pm.saturating_mul(p as u128);
        }
    }
    worst
}

/// Exact Deligne check `c(p)^2 <= 4 p^(k-1)` for every prime up to `nmax`.
pub fn deligne_ok(form: &EigenformQExpansion) -> bool {
    let k = form.weight();
    primes_up_to(form.nmax() as u64).into_iter().all(|p| {
        let c = form.c(p as usize);
        c * c <= BigInt::from(4) * BigInt::from(p).pow(k - 1)
    })
}

/// Defect `|LHS - RHS|` of the smoothed-count identity over the full window
/// `p <= x`:
///
/// ```text
/// sum_p phi_L(theta_f(p)) - pi(x) int phi_L mu  =  sum_{m<=M} U(m) sum_p a_f(p^{2m}).
/// ```
pub fn n_phi_f_identity_check(form: &EigenformQExpansion, x: f64, weight: &PeriodicWeight) -> f64 {
    assert!(x > 6.0, "identity check needs x > 6");
    assert!(x as usize <= form.nmax(), "identity check needs x <= nmax");
    let primes = primes_up_to(x.floor() as u64);
    let m_cut = weight.m_cutoff() as usize;

    let mut direct = KahanSum::new();
    let mut power_sums = vec![KahanSum::new(); m_cut];
    for &p in &primes {
        let t = theta_f(form, p).expect("p <= nmax");
        direct.add(weight.eval(t));
        let x_val = 2.0 * (PI * t).cos();
        let mut prev = 1.0;
        let mut curr = x_val;
        for n in 2..=(2 * m_cut) as u32 {
            (prev, curr) = (curr, x_val * curr - prev);
            if n % 2 == 0 {
                power_sums[(n / 2 - 1) as usize].add(curr);
            }
        }
    }
    let lhs = direct.value() - primes.len() as f64 * weight.mean();
    let mut rhs = KahanSum::new();
    for (i, s) in power_sums.iter().enumerate() {
        rhs.add(weight.u(i as u32 + 1) * s.value());
    }
    (lhs - rhs.value()).abs()
}

/// One trace-average residual: for a dimension-one space the family average
/// of `a_f(n)` is `a_f(n)` itself; the square main term is `1/sqrt(n)`.
#[derive(Debug, Clone, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceResidual {
    pub n: u64,
    pub lhs: f64,
    pub main_term: f64,
    pub residual: f64,
    /// The one asserted bound: `|a_f(n)| <= sigma_0(n)`.
    pub divisor_bound_ok: bool,
}

/// Residual of `a_f(n)` against the square main term. The residual is
/// reported, not asserted; only the divisor bound `|a_f(n)| <= sigma_0(n)`
/// is checked.
pub fn trace_residual(form: &EigenformQExpansion, n: u64) -> TraceResidual {
    assert!(n >= 1 && n as usize <= form.nmax(), "trace_residual needs 1 <= n <= nmax");
    let lhs = form.af(n as usize);
    let root = (n as f64).sqrt();
    let is_square = {
        let r = root.round() as u64;
        r * r == n
    };
    let main_term = if is_square { 1.0 / root } else { 0.0 };
    let sigma0 = (1..=n).filter(|d| n.is_multiple_of(*d)).count() as f64;
    TraceResidual {
        n,
        lhs,
        main_term,
        residual: lhs - main_term,
        divisor_bound_ok: lhs.abs() <= sigma0 + 1e-12,
    }
}

/// Product of `int Z_M(t)^{r_i} mu_{p_i}(t) dt` over a partition attached to
/// distinct primes; the main-term shape of the moment expansion. The empty
/// partition gives 1.
pub fn zm_main_term(weight: &PeriodicWeight, partition: &[u32], primes: &[u64]) -> Result<f64> {
    if partition.len() != primes.len() {
        return Err(Error::LengthMismatch(partition.len(), primes.len()));
    }
    let mut product = 1.0;
    for (&r, &p) in partition.iter().zip(primes) {
        product *= zm_power_integral(weight, r, MeasureSpec::MuP { p });
    }
    Ok(product)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::SmoothKernel;

    /// Independent oracle: Delta = q prod (1 - q^n)^24 expanded directly.
    fn tau_eta_product(nmax: usize) -> Vec<i64> {
        let mut eta = vec![0i64; nmax];
        eta[0] = 1;
        for k in 1..nmax {
            for _ in 0..24 {
                for j in (k..nmax).rev() {
                    eta[j] -= eta[j - k];
                }
            }
        }
        // tau(m) = eta24[m - 1]
        let mut tau = vec![0i64; nmax + 1];
        tau[1..=nmax].copy_from_slice(&eta);
        tau
    }

    #[test]
    fn delta_matches_eta_product_oracle() {
        let form = eigenform(12, 12).unwrap();
        let tau = tau_eta_product(12);
        for (n, &t) in tau.iter().enumerate().skip(1) {
            assert_eq!(form.c(n), &BigInt::from(t), "n={n}");
        }
        assert_eq!(form.c(2), &BigInt::from(-24));
        assert_eq!(form.c(3), &BigInt::from(252));
        assert_eq!(form.c(5), &BigInt::from(4830));
    }

    #[test]
    fn normalization_and_weight16_coefficient() {
        let form = eigenform(12, 2).unwrap();
        assert_eq!(form.c(1), &BigInt::from(1));
        let f16 = eigenform(16, 5).unwrap();
        assert_eq!(f16.c(2), &BigInt::from(216));
    }

    #[test]
    fn family_matches_individual_constructions() {
        let family = eigenform_family(60).unwrap();
        assert_eq!(family.len(), 6);
        for form in &family {
            let single = eigenform(form.weight(), 60).unwrap();
            assert_eq!(form.coeffs, single.coeffs, "k={}", form.weight());
        }
    }

    #[test]
    fn unsupported_weights_are_rejected() {
        assert!(matches!(eigenform(14, 10), Err(Error::UnsupportedWeight(14))));
        assert!(matches!(eigenform(13, 10), Err(Error::UnsupportedWeight(13))));
        assert!(eigenform(12, MAX_EXPANSION + 1).is_err());
    }

    #[test]
    fn multiplicativity_spot_checks() {
        let form = eigenform(12, 400).unwrap();
        let pairs =
            [(2, 3), (2, 5), (3, 5), (2, 7), (3, 7), (5, 7), (2, 9), (4, 5), (2, 11), (3, 11), (8, 9)];
        for (m, n) in pairs {
            assert_eq!(form.c(m) * form.c(n), form.c(m * n).clone(), "({m}, {n})");
        }
    }

    #[test]
    fn deligne_bound_small_range() {
        for form in eigenform_family(600).unwrap() {
            assert!(deligne_ok(&form), "k={}", form.weight());
        }
    }

    #[test]
    fn theta_f_values() {
        let form = eigenform(12, 50).unwrap();
        let t = theta_f(&form, 2).unwrap();
        // frozen from this oracle; inverse identity pins it independently
        assert!((t - 0.5854264439114003).abs() < 1e-15);
        let back = 2.0 * 2f64.powf(5.5) * (PI * t).cos();
        assert!((back + 24.0).abs() < 1e-9);
        assert!(theta_f(&form, 97).is_err());
    }

    #[test]
    fn prime_power_values_against_hecke_recursion() {
        let form = eigenform(12, 50).unwrap();
        assert_eq!(af_prime_power(&form, 2, 0), 1.0);
        // c(4) = c(2)^2 - 2^11 = -1472
        assert_eq!(form.c(4), &BigInt::from(-1472));
        let x2 = af_prime_power(&form, 2, 2);
        assert!((x2 - (-1472.0 / 2f64.powi(11))).abs() < 1e-9);
    }

    #[test]
    fn hecke_chebyshev_agreement_and_deligne_size_bound() {
        let form = eigenform(12, 3200).unwrap();
        assert!(hecke_chebyshev_max_err(&form, 50, 5) < 1e-9);
        // |a_f(p^{2m})| <= 2m + 1 on [-2, 2]
        for p in [2u64, 3, 5, 7] {
            for m in 0..=5u32 {
                let v = af_prime_power(&form, p, 2 * m);
                assert!(v.abs() <= (2 * m + 1) as f64 + 1e-12, "p={p} m={m}");
            }
        }
    }

    #[test]
    fn double_angle_identity() {
        // 2 cos(2 pi m theta) = a_f(p^{2m}) - a_f(p^{2m-2})
        let form = eigenform(12, 50).unwrap();
        for p in [2u64, 3, 5, 7, 11] {
            let t = theta_f(&form, p).unwrap();
            for m in 1..=5u32 {
                let lhs = 2.0 * (2.0 * PI * m as f64 * t).cos();
                let rhs = cheb_eval(2 * m, t) - cheb_eval(2 * m - 2, t);
                assert!((lhs - rhs).abs() < 1e-9, "p={p} m={m}");
            }
        }
    }

    #[test]
    fn identity_defect_is_tiny_for_both_kernels() {
        let form = eigenform(12, 600).unwrap();
        let pi_x = primes_up_to(500).len() as f64;
        for kernel in [SmoothKernel::Fejer, SmoothKernel::Gaussian] {
            let weight = PeriodicWeight::new(kernel, 2.0, 500.0).unwrap();
            let defect = n_phi_f_identity_check(&form, 500.0, &weight);
            assert!(defect < 1e-8 * pi_x, "{kernel:?}: {defect:e}");
        }
        // L = 1 Fejer: both sides are identically zero
        let flat = PeriodicWeight::new(SmoothKernel::Fejer, 1.0, 500.0).unwrap();
        let defect = n_phi_f_identity_check(&form, 500.0, &flat);
        assert!(defect < 1e-10);
    }

    #[test]
    fn trace_residuals() {
        let form = eigenform(12, 50).unwrap();
        let r1 = trace_residual(&form, 1);
        assert_eq!(r1.residual, 0.0);
        let r4 = trace_residual(&form, 4);
        assert_eq!(r4.main_term, 0.5);
        assert!((r4.lhs - (-0.71875)).abs() < 1e-12);
        let r2 = trace_residual(&form, 2);
        assert_eq!(r2.main_term, 0.0);
        assert!((r2.lhs - (-24.0 / 2f64.powf(5.5))).abs() < 1e-12);
        for n in 1..=50 {
            assert!(trace_residual(&form, n).divisor_bound_ok, "n={n}");
        }
    }

    #[test]
    fn zm_main_term_products() {
        let weight = PeriodicWeight::new(SmoothKernel::Fejer, 2.0, 2000.0).unwrap();
        assert_eq!(zm_main_term(&weight, &[], &[]).unwrap(), 1.0);
        assert!(zm_main_term(&weight, &[2], &[3, 5]).is_err());
        // single first power: sum_m U(m) p^{-m}; Fejer L=2 has U(1)=1/4 only
        let single = zm_main_term(&weight, &[1], &[5]).unwrap();
        assert!((single - 0.05).abs() < 1e-10);
        // all-2 partitions stay within 4 M^2 / p of the variance
        let m = weight.m_cutoff() as f64;
        let v = zm_main_term(&weight, &[2], &[10007]).unwrap();
        assert!((v - 0.0625).abs() < 4.0 * m * m / 10007.0);
    }

    #[test]
    fn coefficient_csv_export() {
        let form = eigenform(12, 5).unwrap();
        assert_eq!(form.to_coeffs_csv(), "n,c_n\n1,1\n2,-24\n3,252\n4,-1472\n5,4830\n");
    }
}
