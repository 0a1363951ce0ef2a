//! Finite-field point counting for the family `E(a,b): y^2 = x^3 + a x + b`.
//!
//! For a prime `p` not dividing the discriminant `Delta(a,b) = 4a^3 + 27b^2`,
//! the trace `a_p` satisfies `#E(F_p) = p + 1 - a_p` and is computed as the
//! character sum `a_p = -sum_x chi_p(x^3 + a x + b)` with the quadratic
//! character read off a precomputed square table. Windows of primes are
//! dyadic `(x/2, x]` (the elliptic side) or full `p <= x` (the modular side),
//! and family sweeps persist every `(a, b, p, a_p)` into a columnar CSV cache
//! whose bytes are independent of the worker count.

use crate::error::{Error, Result};
use crate::primes::{primes_in_range, primes_up_to};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

/// Largest prime supported by the square-table path (the bitmask for `p`
/// takes `p/8` bytes).
pub const MAX_TABLE_PRIME: u64 = 1 << 26;

/// Per-block memory budget for shared square tables during a sweep.
const TABLE_BLOCK_BYTES: u64 = 64 << 20;

/// An admissible curve of the family: `a != 0`, `b != 0`, `Delta != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Curve {
    a: i64,
    b: i64,
}

impl Curve {
    pub fn new(a: i64, b: i64) -> Result<Self> {
        let inadmissible = |reason| Error::InadmissibleCurve { a, b, reason };
        if a == 0 {
            return Err(inadmissible("a = 0 is excluded (CM curve)"));
        }
        if b == 0 {
            return Err(inadmissible("b = 0 is excluded (CM curve)"));
        }
        let curve = Curve { a, b };
        if curve.delta() == 0 {
            return Err(inadmissible("singular: 4a^3 + 27b^2 = 0"));
        }
        Ok(curve)
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    /// Discriminant `Delta(a,b) = 4a^3 + 27b^2`.
    pub fn delta(&self) -> i128 {
        4 * (self.a as i128).pow(3) + 27 * (self.b as i128).pow(2)
    }

    /// Whether `p` divides the discriminant (bad reduction for p > 3).
    pub fn divides_delta(&self, p: u64) -> bool {
        self.delta().rem_euclid(p as i128) == 0
    }
}

/// One point-count result. `theta_available` is false when `p | Delta`;
/// such records are kept in caches but excluded from every statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApRecord {
    pub p: u64,
    pub ap: i64,
    pub theta_available: bool,
}

/// Jacobi symbol `(a | n)` for odd positive `n`; equals the Legendre symbol
/// when `n` is prime.
pub fn jacobi(a: i64, n: i64) -> Result<i8> {
    if n <= 0 || n % 2 == 0 {
        return Err(Error::BadJacobiModulus(n));
    }
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut sign = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    Ok(if n == 1 { sign } else { 0 })
}

/// Bitmask of the residue classes mod `p` that are squares (0 included).
pub struct SquareTable {
    p: u64,
    bits: Vec<u64>,
}

impl SquareTable {
    pub fn p(&self) -> u64 {
        self.p
    }

    /// Whether residue `r` (reduced mod p) is marked as a square.
    pub fn contains(&self, r: u64) -> bool {
        debug_assert!(r < self.p);
        self.bits[(r / 64) as usize] >> (r % 64) & 1 == 1
    }

    /// Quadratic character: 0 at 0, +1 on nonzero squares, -1 otherwise.
    #[inline]
    pub fn chi(&self, r: u64) -> i64 {
        if r == 0 {
            0
        } else if self.contains(r) {
            1
        } else {
            -1
        }
    }
}

/// Builds the square table for an odd prime `p <= 2^26` by squaring
/// `0..=(p-1)/2`.
pub fn square_table(p: u64) -> Result<SquareTable> {
    if p > MAX_TABLE_PRIME {
        return Err(Error::TableTooLarge(p));
    }
    let mut bits = vec![0u64; (p as usize).div_ceil(64)];
    for i in 0..=(p / 2) {
        let r = i * i % p;
        bits[(r / 64) as usize] |= 1 << (r % 64);
    }
    Ok(SquareTable { p, bits })
}

fn ap_sum(curve: &Curve, p: u64, chi: impl Fn(u64) -> i64) -> i64 {
    let a = curve.a.rem_euclid(p as i64) as u64;
    let b = curve.b.rem_euclid(p as i64) as u64;
    let mut sum = 0i64;
    for x in 0..p {
        let fx = (x * x % p * x % p + a * x % p + b) % p;
        sum += chi(fx);
    }
    -sum
}

pub(crate) fn ap_with_table(curve: &Curve, table: &SquareTable) -> i64 {
    ap_sum(curve, table.p(), |r| table.chi(r))
}

/// Point count via the character sum with a square table.
///
/// Requires `p > 3` (every window guarantees it) and `p <= 2^26`. A prime
/// dividing the discriminant is a flagged state, not an error.
pub fn ap(curve: &Curve, p: u64) -> ApRecord {
    assert!(p > 3, "ap requires p > 3, got {p}");
    let table = square_table(p).expect("prime exceeds the square-table cap");
    ApRecord {
        p,
        ap: ap_with_table(curve, &table),
        theta_available: !curve.divides_delta(p),
    }
}

/// The same count with the character evaluated through [`jacobi`]; the slow
/// cross-check route for the square-table path.
pub fn ap_via_jacobi(curve: &Curve, p: u64) -> ApRecord {
    assert!(p > 3, "ap requires p > 3, got {p}");
    let ap = ap_sum(curve, p, |r| jacobi(r as i64, p as i64).expect("odd prime modulus") as i64);
    ApRecord { p, ap, theta_available: !curve.divides_delta(p) }
}

/// Frobenius angle `theta in [0, 1]` with `a_p = 2 sqrt(p) cos(pi theta)`.
/// The clamp only absorbs rounding when `|a_p|` is at the Hasse boundary.
pub fn theta(rec: &ApRecord) -> Result<f64> {
    if !rec.theta_available {
        return Err(Error::ThetaUnavailable(rec.p));
    }
    let ratio = rec.ap as f64 / (2.0 * (rec.p as f64).sqrt());
    Ok(ratio.clamp(-1.0, 1.0).acos() / std::f64::consts::PI)
}

/// A window of primes: dyadic `(x/2, x]` or full `p <= x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeWindow {
    x: f64,
    dyadic: bool,
    primes: Vec<u64>,
}

impl PrimeWindow {
    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn dyadic(&self) -> bool {
        self.dyadic
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// `pi~(x)` for dyadic windows, `pi(x)` for full ones.
    pub fn count(&self) -> usize {
        self.primes.len()
    }
}

/// Builds the window for threshold `x > 6`. Dyadic windows never contain 2
/// or 3; the upper bound is capped at 2^26 to match the square-table path.
pub fn prime_window(x: f64, dyadic: bool) -> Result<PrimeWindow> {
    if x.is_nan() || x <= 6.0 {
        return Err(Error::ThresholdTooSmall(x));
    }
    let hi = x.floor() as u64;
    if hi > MAX_TABLE_PRIME {
        return Err(Error::WindowTooLarge(hi));
    }
    let primes = if dyadic {
        let lo = (x / 2.0).floor() as u64 + 1;
        primes_in_range(lo, hi)
    } else {
        primes_up_to(hi)
    };
    Ok(PrimeWindow { x, dyadic, primes })
}

/// Every a_p of an admissible family over a prime window, in a dense
/// curve-major matrix. Row order is ascending `(a, b, p)` everywhere: in
/// memory, in the CSV file, and independent of the sweep's worker count.
pub struct ApCache {
    a_max: u32,
    b_max: u32,
    x: f64,
    dyadic: bool,
    curves: Vec<Curve>,
    primes: Vec<u64>,
    ap: Vec<i64>,
}

impl ApCache {
    pub fn a_max(&self) -> u32 {
        self.a_max
    }

    pub fn b_max(&self) -> u32 {
        self.b_max
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn dyadic(&self) -> bool {
        self.dyadic
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn family_count(&self) -> usize {
        self.curves.len()
    }

    pub fn window_count(&self) -> usize {
        self.primes.len()
    }

    pub fn curve_index(&self, curve: &Curve) -> Option<usize> {
        self.curves.binary_search(curve).ok()
    }

    /// The a_p row of one curve, aligned with [`primes`](Self::primes).
    pub fn ap_row(&self, curve_index: usize) -> &[i64] {
        let n = self.primes.len();
        &self.ap[curve_index * n..(curve_index + 1) * n]
    }

    /// Record for (curve index, prime index), with the availability flag
    /// recomputed from the discriminant.
    pub fn record(&self, curve_index: usize, prime_index: usize) -> ApRecord {
        let p = self.primes[prime_index];
        ApRecord {
            p,
            ap: self.ap_row(curve_index)[prime_index],
            theta_available: !self.curves[curve_index].divides_delta(p),
        }
    }

    /// Serializes the cache in its canonical byte-exact form.
    pub fn to_csv_string(&self) -> String {
        let window = if self.dyadic { "dyadic" } else { "full" };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# satotate-lab apcache v1 A={} B={} x={} window={}",
            self.a_max, self.b_max, self.x, window
        );
        out.push_str("a,b,p,ap\n");
        for (i, curve) in self.curves.iter().enumerate() {
            let row = self.ap_row(i);
            for (j, &p) in self.primes.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{}", curve.a, curve.b, p, row[j]);
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text).map_err(|reason| Error::CacheFormat {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn from_csv_str(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty file")?;
        let rest = header
            .strip_prefix("# satotate-lab apcache v1 ")
            .ok_or("missing apcache v1 header comment")?;
        let mut a_max = None;
        let mut b_max = None;
        let mut x = None;
        let mut dyadic = None;
        for field in rest.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| format!("bad header field {field:?}"))?;
            match key {
                "A" => a_max = Some(value.parse::<u32>().map_err(|e| e.to_string())?),
                "B" => b_max = Some(value.parse::<u32>().map_err(|e| e.to_string())?),
                "x" => x = Some(value.parse::<f64>().map_err(|e| e.to_string())?),
                "window" => {
                    dyadic = Some(match value {
                        "dyadic" => true,
                        "full" => false,
                        other => return Err(format!("bad window kind {other:?}")),
                    })
                }
                other => return Err(format!("unknown header key {other:?}")),
            }
        }
        let (a_max, b_max, x, dyadic) = match (a_max, b_max, x, dyadic) {
            (Some(a), Some(b), Some(x), Some(d)) => (a, b, x, d),
            _ => return Err("header is missing one of A, B, x, window".into()),
        };
        if lines.next() != Some("a,b,p,ap") {
            return Err("missing column header line".into());
        }

        let mut rows: Vec<(Curve, u64, i64)> = Vec::new();
        for (idx, line) in lines.enumerate() {
            let mut parts = line.split(',');
            let mut next_int = || -> std::result::Result<i64, String> {
                parts
                    .next()
                    .ok_or_else(|| format!("row {}: too few fields", idx + 1))?
                    .parse::<i64>()
                    .map_err(|e| format!("row {}: {e}", idx + 1))
            };
            let a = next_int()?;
            let b = next_int()?;
            let p = next_int()?;
            let ap_val = next_int()?;
            if parts.next().is_some() {
                return Err(format!("row {}: too many fields", idx + 1));
            }
            let curve = Curve::new(a, b).map_err(|e| format!("row {}: {e}", idx + 1))?;
            if p <= 0 {
                return Err(format!("row {}: nonpositive prime {p}", idx + 1));
            }
            rows.push((curve, p as u64, ap_val));
        }
        if rows.is_empty() {
            return Err("cache has no data rows".into());
        }

        // the first curve's block defines the prime list; every other block
        // must repeat it, and blocks must be in ascending curve order
        let first = rows[0].0;
        let primes: Vec<u64> = rows.iter().take_while(|(c, _, _)| *c == first).map(|&(_, p, _)| p).collect();
        if !primes.windows(2).all(|w| w[0] < w[1]) {
            return Err("primes are not strictly ascending within a curve".into());
        }
        if !rows.len().is_multiple_of(primes.len()) {
            return Err("row count is not (curves x primes)".into());
        }
        let mut curves: Vec<Curve> = Vec::with_capacity(rows.len() / primes.len());
        let mut ap: Vec<i64> = Vec::with_capacity(rows.len());
        for block in rows.chunks(primes.len()) {
            let curve = block[0].0;
            if block.iter().any(|(c, _, _)| *c != curve)
                || block.iter().zip(&primes).any(|(&(_, p, _), &q)| p != q)
            {
                return Err(format!(
                    "curve ({}, {}) does not cover exactly the window primes",
                    curve.a, curve.b
                ));
            }
            if curves.last().is_some_and(|last| *last >= curve) {
                return Err("curves are not in ascending (a, b) order".into());
            }
            curves.push(curve);
            ap.extend(block.iter().map(|&(_, _, v)| v));
        }
        if curves != admissible_curves(a_max, b_max) {
            return Err("curve set does not match the admissible family for (A, B)".into());
        }
        Ok(ApCache { a_max, b_max, x, dyadic, curves, primes, ap })
    }
}

/// The admissible curves with `0 < |a| <= A`, `0 < |b| <= B`, `Delta != 0`,
/// in ascending `(a, b)` order.
pub fn admissible_curves(a_max: u32, b_max: u32) -> Vec<Curve> {
    let mut out = Vec::new();
    for a in -(a_max as i64)..=a_max as i64 {
        for b in -(b_max as i64)..=b_max as i64 {
            if let Ok(curve) = Curve::new(a, b) {
                out.push(curve);
            }
        }
    }
    out
}

/// Point-counts the whole family over the window. Square tables are built
/// once per prime (in blocks bounded by a memory budget) and shared read-only
/// across the curve-parallel loop; every matrix cell is written exactly once,
/// so the result is identical for any worker count.
pub fn sweep(a_max: u32, b_max: u32, window: &PrimeWindow) -> Result<ApCache> {
    let curves = admissible_curves(a_max, b_max);
    if curves.is_empty() {
        return Err(Error::EmptyFamily(a_max, b_max));
    }
    if let Some(&p) = window.primes().iter().rev().find(|&&p| p > MAX_TABLE_PRIME) {
        return Err(Error::TableTooLarge(p));
    }
    let primes = window.primes();
    let n_primes = primes.len();
    let mut ap = vec![0i64; curves.len() * n_primes];

    let mut offset = 0usize;
    while offset < n_primes {
        // grow the block until the square tables hit the memory budget
        let mut end = offset;
        let mut bytes = 0u64;
        while end < n_primes && (end == offset || bytes + primes[end] / 8 <= TABLE_BLOCK_BYTES) {
            bytes += primes[end] / 8;
            end += 1;
        }
        let block = &primes[offset..end];
        let tables: Vec<SquareTable> =
            block.par_iter().map(|&p| square_table(p).expect("prime below cap")).collect();
        ap.par_chunks_mut(n_primes).zip(curves.par_iter()).for_each(|(row, curve)| {
            for (j, table) in tables.iter().enumerate() {
                row[offset + j] = ap_with_table(curve, table);
            }
        });
        offset = end;
    }

    Ok(ApCache {
        a_max,
        b_max,
        x: window.x(),
        dyadic: window.dyadic(),
        curves,
        primes: primes.to_vec(),
        ap,
    })
}
