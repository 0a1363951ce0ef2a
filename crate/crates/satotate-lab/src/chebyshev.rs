//! Chebyshev polynomials of the second kind on [-2, 2] and the measures they
//! are orthogonal against.
//!
//! With `x = 2 cos(pi t)` the polynomials are `X_n(x) = sin((n+1) pi t) / sin(pi t)`,
//! so `X_0 = 1, X_1 = x, X_2 = x^2 - 1, ...` and the three-term recurrence
//! `X_{n+1} = x X_n - X_{n-1}` holds. They are orthonormal against the
//! Sato-Tate measure `mu(t) = 2 sin^2(pi t)`, satisfy the linearization
//! `X_n X_m = sum_{i=0}^{n} X_{m-n+2i}` (n <= m), and have the generating
//! identity `sum_m X_{2m}(2 cos pi t) p^{-m} = (p+1) / ((p^{1/2}+p^{-1/2})^2 - 4 cos^2 pi t)`
//! whose right-hand side (times mu) is the measure `mu_p` with even moments
//! `p^{-m}`. Products of normalized Hecke eigenvalues expand through the same
//! linearization into the integer tables `D(m_1,...,m_r; m)` computed here.

use crate::error::{Error, Result};
use crate::kernels::PeriodicWeight;
use crate::quadrature::periodic_integral;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Upper degree guard for [`cheb_poly`].
pub const MAX_POLY_DEGREE: u32 = 10_000;
/// Guards for [`d_table`]: at most `r` factors with index sum at most this.
pub const MAX_DTABLE_ARGS: usize = 8;
pub const MAX_DTABLE_SUM: u64 = 64;

/// A finite integer linear combination `sum_n c_n X_n` in the Chebyshev basis.
/// No explicit zero coefficients are stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChebyshevExpansion {
    coeffs: BTreeMap<u32, BigInt>,
}

impl ChebyshevExpansion {
    /// The single basis element `X_n`.
    pub fn basis(n: u32) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(n, BigInt::one());
        Self { coeffs }
    }

    pub fn add_term(&mut self, n: u32, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(n).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&n);
        }
    }

    /// Terms in ascending degree-index order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, &BigInt)> {
        self.coeffs.iter().map(|(&n, c)| (n, c))
    }

    pub fn coeff(&self, n: u32) -> BigInt {
        self.coeffs.get(&n).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn max_index(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Evaluates the expansion at `x = 2 cos(pi t)`.
    pub fn eval(&self, t: f64) -> f64 {
        self.terms().map(|(n, c)| big_to_f64(c) * cheb_eval(n, t)).sum()
    }

    /// Expands into monomial coefficients (constant term first), exactly.
    pub fn to_monomial(&self) -> Vec<BigInt> {
        let deg = match self.max_index() {
            Some(d) => d as usize,
            None => return vec![],
        };
        let mut out = vec![BigInt::zero(); deg + 1];
        for (n, c) in self.terms() {
            for (k, mono) in cheb_poly(n).iter().enumerate() {
                out[k] += c * mono;
            }
        }
        out
    }
}

fn big_to_f64(v: &BigInt) -> f64 {
    num_traits::ToPrimitive::to_f64(v).expect("BigInt out of f64 range")
}

/// Monomial coefficients of `X_n` (constant term first), via the exact integer
/// recurrence `X_{n+1} = x X_n - X_{n-1}`.
pub fn cheb_poly(n: u32) -> Vec<BigInt> {
    assert!(n <= MAX_POLY_DEGREE, "cheb_poly degree guard: n = {n}");
    let mut prev = vec![BigInt::one()]; // X_0
    if n == 0 {
        return prev;
    }
    let mut curr = vec![BigInt::zero(), BigInt::one()]; // X_1 = x
    for _ in 1..n {
        // next = x * curr - prev
        let mut next = vec![BigInt::zero(); curr.len() + 1];
        for (k, c) in curr.iter().enumerate() {
            next[k + 1] += c;
        }
        for (k, c) in prev.iter().enumerate() {
            next[k] -= c;
        }
        prev = curr;
        curr = next;
    }
    curr
}

/// `X_n(2 cos pi t)` by the value-domain three-term recurrence, which is
/// numerically stable and yields the limits `n+1` at `t = 0` and
/// `(-1)^n (n+1)` at `t = 1` without special cases.
pub fn cheb_eval(n: u32, t: f64) -> f64 {
    cheb_eval_x(n, 2.0 * (PI * t).cos())
}

/// `X_n(x)` for `x` already in the coefficient domain [-2, 2].
pub fn cheb_eval_x(n: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut curr = x;
    for _ in 1..n {
        (prev, curr) = (curr, x * curr - prev);
    }
    curr
}

/// The linearization `X_n X_m = sum_{i=0}^{n} X_{m-n+2i}` (indices swapped so
/// `n <= m`); all coefficients are 1.
pub fn cheb_product(n: u32, m: u32) -> ChebyshevExpansion {
    let (n, m) = if n <= m { (n, m) } else { (m, n) };
    let mut out = ChebyshevExpansion::default();
    let one = BigInt::one();
    for i in 0..=n {
        out.add_term(m - n + 2 * i, &one);
    }
    out
}

/// The expansion table of a product of Chebyshev basis elements:
/// `prod_i X_{m_i} = sum_m D(m_1,...,m_r; m) X_m` with nonnegative integer
/// entries supported on `m <= sum m_i` of the same parity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DTable {
    args: Vec<u32>,
    values: BTreeMap<u32, BigInt>,
}

impl DTable {
    pub fn args(&self) -> &[u32] {
        &self.args
    }

    /// `D(args; m)`; zero outside the stored support.
    pub fn value(&self, m: u32) -> BigInt {
        self.values.get(&m).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Nonzero entries in ascending `m`.
    pub fn entries(&self) -> impl Iterator<Item = (u32, &BigInt)> {
        self.values.iter().map(|(&m, v)| (m, v))
    }

    /// JSON map `{"m": "value"}` with values as decimal strings, preserving
    /// arbitrary precision.
    pub fn values_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .values
            .iter()
            .map(|(m, v)| (m.to_string(), serde_json::Value::String(v.to_string())))
            .collect();
        serde_json::Value::Object(map)
    }
}

impl serde::Serialize for DTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("DTable", 2)?;
        s.serialize_field("args", &self.args)?;
        s.serialize_field("values", &self.values_json())?;
        s.end()
    }
}

/// Computes `D(m_1,...,m_r; m)` by folding [`cheb_product`] over the argument
/// list in the Chebyshev basis, exactly.
pub fn d_table(args: &[u32]) -> Result<DTable> {
    let sum: u64 = args.iter().map(|&m| m as u64).sum();
    if args.len() > MAX_DTABLE_ARGS || sum > MAX_DTABLE_SUM {
        return Err(Error::DTableTooLarge {
            r: args.len(),
            sum,
            max_r: MAX_DTABLE_ARGS,
            max_sum: MAX_DTABLE_SUM,
        });
    }
    assert!(args.iter().all(|&m| m >= 1), "d_table arguments must be positive");
    let mut acc = ChebyshevExpansion::basis(args[0]);
    for &a in &args[1..] {
        let mut next = ChebyshevExpansion::default();
        for (n, c) in acc.terms() {
            for (j, unit) in cheb_product(n, a).terms() {
                debug_assert!(unit.is_one());
                next.add_term(j, c);
            }
        }
        acc = next;
    }
    Ok(DTable { args: args.to_vec(), values: acc.coeffs })
}

/// A measure on [0, 1]: the Sato-Tate measure `mu(t) = 2 sin^2(pi t)` or its
/// p-adic deformation `mu_p` with even Chebyshev moments `p^{-m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureSpec {
    SatoTate,
    MuP { p: u64 },
}

/// Density of the measure at `t`.
pub fn measure_density(measure: MeasureSpec, t: f64) -> f64 {
    let mu = 2.0 * (PI * t).sin().powi(2);
    match measure {
        MeasureSpec::SatoTate => mu,
        MeasureSpec::MuP { p } => {
            let sp = (p as f64).sqrt();
            let denom = (sp + 1.0 / sp).powi(2) - (2.0 * (PI * t).cos()).powi(2);
            (p as f64 + 1.0) / denom * mu
        }
    }
}

/// `int_0^1 X_n(2 cos pi t)` against the measure, by periodic quadrature. Contract:
/// SatoTate gives `delta_{n,0}`; `mu_p` gives `p^{-n/2}` for even `n`, 0 for odd.
pub fn measure_moment(measure: MeasureSpec, n: u32) -> f64 {
    assert!(n <= 200, "measure_moment degree guard: n = {n}");
    periodic_integral(|t| cheb_eval(n, t) * measure_density(measure, t))
}

/// Total mass of the measure (1 for both kinds, up to quadrature error).
pub fn measure_mass(measure: MeasureSpec) -> f64 {
    periodic_integral(|t| measure_density(measure, t))
}

/// `Z_M(t) = sum_{m=1}^{M} U(m) X_{2m}(2 cos pi t)` for a periodized weight.
pub fn zm_eval(weight: &PeriodicWeight, t: f64) -> f64 {
    let x = 2.0 * (PI * t).cos();
    let m_cut = weight.m_cutoff();
    // one pass of the recurrence collects every even index up to 2M
    let mut sum = 0.0;
    let mut prev = 1.0;
    let mut curr = x;
    for j in 2..=2 * m_cut {
        (prev, curr) = (curr, x * curr - prev);
        if j % 2 == 0 {
            sum += weight.u(j / 2) * curr;
        }
    }
    sum
}

/// `int_0^1 Z_M(t)^r` against the measure, by periodic quadrature.
pub fn zm_power_integral(weight: &PeriodicWeight, r: u32, measure: MeasureSpec) -> f64 {
    assert!(r <= 8, "zm_power_integral power guard: r = {r}");
    if r == 0 {
        return measure_mass(measure);
    }
    periodic_integral(|t| zm_eval(weight, t).powi(r as i32) * measure_density(measure, t))
}
