//! Uniform-grid trapezoid quadrature on [0, 1] for 1-periodic integrands.
//!
//! For smooth periodic functions the trapezoid rule is spectrally accurate,
//! and it is exact for trigonometric polynomials whose degree is below the
//! node count. The integrands here (Fourier series of the weights, Chebyshev
//! polynomials of cos(pi t), the Sato-Tate and mu_p densities) are all of
//! that kind, so the grid is doubled only until two successive values agree.

use crate::sum::KahanSum;

/// Initial node count.
pub const QUADRATURE_NODES: usize = 4096;
/// Hard cap on the node count while doubling.
pub const QUADRATURE_NODE_CAP: usize = 1 << 20;
/// Convergence threshold between successive grid doublings.
pub const QUADRATURE_TOL: f64 = 1e-12;

/// Trapezoid rule with `n` nodes for a 1-periodic function: (1/n) sum f(j/n).
pub fn periodic_trapezoid(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let mut acc = KahanSum::new();
    for j in 0..n {
        acc.add(f(j as f64 / n as f64));
    }
    acc.value() / n as f64
}

/// Integrates a smooth 1-periodic function over [0, 1], doubling the grid
/// from [`QUADRATURE_NODES`] until successive values differ by less than
/// [`QUADRATURE_TOL`], capped at [`QUADRATURE_NODE_CAP`].
pub fn periodic_integral(f: impl Fn(f64) -> f64) -> f64 {
    let mut n = QUADRATURE_NODES;
    let mut prev = periodic_trapezoid(&f, n);
    while n < QUADRATURE_NODE_CAP {
        n *= 2;
        let next = periodic_trapezoid(&f, n);
        if (next - prev).abs() < QUADRATURE_TOL {
            return next;
        }
        prev = next;
    }
    prev
}
