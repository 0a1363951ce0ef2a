//! Numerical laboratory for smoothed Sato-Tate statistics.
//!
//! The crate instantiates, at desk scale, the machinery relating smooth
//! periodic test functions to the arithmetic of elliptic curve families and
//! level-1 Hecke eigenforms:
//!
//! - [`kernels`] — smooth kernels (Gaussian, Fejer), their periodizations
//!   `phi_L`, the differenced Fourier coefficients `U(m)`, tail cutoffs, and
//!   the mean/variance functionals against the Sato-Tate measure;
//! - [`chebyshev`] — exact algebra of Chebyshev polynomials of the second
//!   kind, product-expansion `D`-tables, the measures `mu` and `mu_p`, and
//!   spectrally accurate quadrature against them;
//! - [`curves`] — point counting for `y^2 = x^3 + ax + b` over `F_p`,
//!   Frobenius angles, prime windows, deterministic parallel family sweeps,
//!   and the persistent a_p cache;
//! - [`elliptic_stats`] — smoothed per-curve counts (direct and Fourier
//!   routes), normalized family moments with Gaussian references, and the
//!   residue-family averages `S(p^alpha)`;
//! - [`modular_forms`] — exact q-expansions of the six dimension-one level-1
//!   eigenforms and the identity checks they support;
//! - [`runner`] — the CLI command layer; [`selftest`] — the invariant suite.
//!
//! Everything is deterministic: no randomness, no time-dependent output, and
//! all parallel reductions merge in fixed index order, so every report and
//! cache is byte-identical across runs and worker counts.

pub mod chebyshev;
pub mod curves;
pub mod elliptic_stats;
mod error;
pub mod kernels;
pub mod modular_forms;
pub mod primes;
pub mod quadrature;
pub mod runner;
mod sampling;
pub mod selftest;
pub mod sum;

pub use error::{Error, Result};
