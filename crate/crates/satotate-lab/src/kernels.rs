//! Smooth test kernels and their 1-periodizations.
//!
//! A kernel is an even Schwartz-type function `Phi` with Fourier transform
//! `Phi_hat` (convention `Phi_hat(xi) = int Phi(t) e(-2 pi i xi t) dt`). For a
//! localization scale `L >= 1` the periodized weight is
//!
//! ```text
//! phi_L(t) = sum_{m in Z} Phi(L (t + m)) = (1/L) sum_{m in Z} Phi_hat(m/L) e(m t),
//! ```
//!
//! a smooth surrogate for the indicator of a ~1/L neighbourhood of the
//! integers. The differenced coefficients
//!
//! ```text
//! U(m) = (Phi_hat(m/L) - Phi_hat((m+1)/L)) / L,     m >= 1,
//! ```
//!
//! express weighted sums over Frobenius angles in terms of normalized Hecke
//! eigenvalues at even prime powers; the mean of phi_L against the Sato-Tate
//! measure is (Phi_hat(0) - Phi_hat(1/L))/L and its variance equals
//! sum_{m>=1} U(m)^2. Two kernels are provided, one for each decay regime:
//! the self-dual Gaussian (super-exponential Fourier decay) and the Fejer
//! kernel (compactly supported Fourier transform).

use crate::error::{Error, Result};
use crate::quadrature::periodic_integral;
use crate::sum::{kahan_sum, KahanSum};
use std::f64::consts::PI;

/// Relative tail budget for truncating the Fourier series of `phi_L`.
const SERIES_TAIL: f64 = 1e-15;

/// The two supported smooth kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothKernel {
    /// `Phi(t) = exp(-pi t^2)`, self-dual; `Phi_hat(t) <= exp(-lambda |t|^omega)`
    /// with `lambda = pi`, `omega = 2`.
    Gaussian,
    /// `Phi(t) = (sin(pi t) / (pi t))^2`; `Phi_hat(t) = max(0, 1 - |t|)`,
    /// supported in `[-1, 1]`.
    Fejer,
}

impl SmoothKernel {
    /// Fourier decay rate `lambda` (Gaussian regime only).
    pub fn lambda(self) -> Option<f64> {
        match self {
            SmoothKernel::Gaussian => Some(PI),
            SmoothKernel::Fejer => None,
        }
    }

    /// Fourier decay exponent `omega` (Gaussian regime only).
    pub fn omega(self) -> Option<f64> {
        match self {
            SmoothKernel::Gaussian => Some(2.0),
            SmoothKernel::Fejer => None,
        }
    }

    /// Radius `B` of `supp Phi_hat` (Fejer regime only).
    pub fn support_radius(self) -> Option<f64> {
        match self {
            SmoothKernel::Gaussian => None,
            SmoothKernel::Fejer => Some(1.0),
        }
    }

    /// Parses the CLI/config spelling: `"gaussian"` or `"fejer"`.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(SmoothKernel::Gaussian),
            "fejer" => Ok(SmoothKernel::Fejer),
            other => Err(Error::Config(format!(
                "unknown kernel {other:?}: expected \"gaussian\" or \"fejer\""
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SmoothKernel::Gaussian => "gaussian",
            SmoothKernel::Fejer => "fejer",
        }
    }
}

/// `Phi(t)`. Even by construction: both branches evaluate through `|t|`.
pub fn kernel_phi(kernel: SmoothKernel, t: f64) -> f64 {
    let u = t.abs();
    match kernel {
        SmoothKernel::Gaussian => (-PI * u * u).exp(),
        SmoothKernel::Fejer => {
            if u == 0.0 {
                1.0
            } else {
                let s = (PI * u).sin() / (PI * u);
                s * s
            }
        }
    }
}

/// `Phi_hat(t)`; for Fejer this is the triangle function, exactly 0 for |t| >= 1.
pub fn kernel_phi_hat(kernel: SmoothKernel, t: f64) -> f64 {
    let u = t.abs();
    match kernel {
        SmoothKernel::Gaussian => (-PI * u * u).exp(),
        SmoothKernel::Fejer => {
            if u >= 1.0 {
                0.0
            } else {
                1.0 - u
            }
        }
    }
}

fn check_scale(l: f64) -> Result<()> {
    // NaN must fail the guard too
    if l.is_nan() || l < 1.0 {
        return Err(Error::ScaleTooSmall(l));
    }
    Ok(())
}

fn check_threshold(x: f64) -> Result<()> {
    if x.is_nan() || x <= 6.0 {
        return Err(Error::ThresholdTooSmall(x));
    }
    Ok(())
}

/// Number of Fourier modes needed so the dropped tail of the phi_L series is
/// below 1e-12. Finite for Fejer; super-exponentially convergent for Gaussian.
fn series_modes(kernel: SmoothKernel, l: f64) -> u32 {
    match kernel {
        // Phi_hat vanishes for m/L >= B, i.e. m >= B*L.
        SmoothKernel::Fejer => (l.ceil() as u32).max(1),
        SmoothKernel::Gaussian => {
            // e^{-pi (m/L)^2} < SERIES_TAIL once m > L sqrt(ln(1/SERIES_TAIL)/pi);
            // subsequent terms decay faster than geometrically with ratio < 1e-2.
            (l * ((1.0 / SERIES_TAIL).ln() / PI).sqrt()).ceil() as u32 + 1
        }
    }
}

/// Evaluates `phi_L(t)` through its Fourier series
/// `(1/L) [Phi_hat(0) + 2 sum_{m>=1} Phi_hat(m/L) cos(2 pi m t)]`,
/// truncated where the tail drops below 1e-12.
pub fn periodic_weight_eval(kernel: SmoothKernel, l: f64, t: f64) -> Result<f64> {
    check_scale(l)?;
    let modes = series_modes(kernel, l);
    let mut acc = KahanSum::new();
    acc.add(kernel_phi_hat(kernel, 0.0));
    for m in 1..=modes {
        let c = kernel_phi_hat(kernel, m as f64 / l);
        if c == 0.0 {
            break;
        }
        acc.add(2.0 * c * (2.0 * PI * m as f64 * t).cos());
    }
    Ok(acc.value() / l)
}

/// `U(m) = (Phi_hat(m/L) - Phi_hat((m+1)/L)) / L` for `m >= 1`.
pub fn u_coeff(kernel: SmoothKernel, l: f64, m: u32) -> f64 {
    debug_assert!(l >= 1.0 && m >= 1);
    let lf = l;
    (kernel_phi_hat(kernel, m as f64 / lf) - kernel_phi_hat(kernel, (m + 1) as f64 / lf)) / lf
}

/// Exponent offset used in the Gaussian cutoff `M = ceil(L (log x)^(1/omega + eps))`.
pub const CUTOFF_EPSILON: f64 = 0.1;

/// Guaranteed bound on the dropped U-tail beyond the cutoff.
pub const CUTOFF_TAIL_BUDGET: f64 = 1e-12;

/// `sum_{m > m_cut} |U(m)|`, summed until the terms are exhausted in f64.
fn u_tail(kernel: SmoothKernel, l: f64, m_cut: u32) -> f64 {
    let mut acc = KahanSum::new();
    let mut m = m_cut + 1;
    loop {
        let term = u_coeff(kernel, l, m).abs();
        acc.add(term);
        // superexponential decay: once a term is this small the rest are dust
        if term < 1e-25 || m > 20 * (m_cut + 2) {
            return acc.value();
        }
        m += 1;
    }
}

/// Fourier cutoff `M` beyond which the U-tail is negligible: `ceil(B L)` in
/// the compact-support regime, `ceil(L (log x)^(1/omega + eps))` in the
/// Gaussian regime -- then verified by an explicit tail sum and raised until
/// the dropped tail is below [`CUTOFF_TAIL_BUDGET`].
pub fn cutoff_m(kernel: SmoothKernel, l: f64, x: f64) -> Result<u32> {
    cutoff_m_with_epsilon(kernel, l, x, CUTOFF_EPSILON)
}

/// [`cutoff_m`] with an explicit exponent offset `eps`.
pub fn cutoff_m_with_epsilon(kernel: SmoothKernel, l: f64, x: f64, eps: f64) -> Result<u32> {
    check_scale(l)?;
    check_threshold(x)?;
    match kernel {
        SmoothKernel::Fejer => {
            // U(m) vanishes exactly from ceil(B L) on
            Ok((kernel.support_radius().unwrap() * l).ceil() as u32)
        }
        SmoothKernel::Gaussian => {
            let omega = kernel.omega().unwrap();
            let mut m = (l * x.ln().powf(1.0 / omega + eps)).ceil() as u32;
            while u_tail(kernel, l, m) >= CUTOFF_TAIL_BUDGET {
                m += 1;
            }
            Ok(m)
        }
    }
}

/// `int_0^1 phi_L(t) mu(t) dt = (Phi_hat(0) - Phi_hat(1/L)) / L`.
pub fn mean_value(kernel: SmoothKernel, l: f64) -> f64 {
    debug_assert!(l >= 1.0);
    (kernel_phi_hat(kernel, 0.0) - kernel_phi_hat(kernel, 1.0 / l)) / l
}

/// `sum_{m=1}^{M} U(m)^2`; with `M` from [`cutoff_m`] the dropped tail is
/// below machine precision at every supported scale.
pub fn variance_series(kernel: SmoothKernel, l: f64, m_cutoff: u32) -> f64 {
    debug_assert!(l >= 1.0);
    kahan_sum((1..=m_cutoff).map(|m| u_coeff(kernel, l, m).powi(2)))
}

/// The same variance through the integral representation
/// `int phi_L^2 mu - (int phi_L mu)^2`, evaluated by periodic trapezoid
/// quadrature with `mu(t) = 2 sin^2(pi t)`.
pub fn variance_quadrature(kernel: SmoothKernel, l: f64) -> f64 {
    debug_assert!(l >= 1.0);
    let weight = FourierWeight::new(kernel, l);
    let mu = |t: f64| 2.0 * (PI * t).sin().powi(2);
    let second = periodic_integral(|t| weight.eval(t).powi(2) * mu(t));
    let first = periodic_integral(|t| weight.eval(t) * mu(t));
    second - first * first
}

/// Cached cosine-series evaluator for `phi_L`; shared by the weight struct and
/// the quadrature routines so every evaluation path sums the same modes.
#[derive(Debug, Clone)]
struct FourierWeight {
    /// `Phi_hat(m/L)/L` for `m = 0..=modes`.
    coeffs: Vec<f64>,
}

impl FourierWeight {
    fn new(kernel: SmoothKernel, l: f64) -> Self {
        let modes = series_modes(kernel, l);
        let coeffs = (0..=modes).map(|m| kernel_phi_hat(kernel, m as f64 / l) / l).collect();
        Self { coeffs }
    }

    fn eval(&self, t: f64) -> f64 {
        let mut acc = KahanSum::new();
        acc.add(self.coeffs[0]);
        for (m, &c) in self.coeffs.iter().enumerate().skip(1) {
            if c == 0.0 {
                break;
            }
            acc.add(2.0 * c * (2.0 * PI * m as f64 * t).cos());
        }
        acc.value()
    }
}

/// A periodized weight with everything the moment harness needs: the Fourier
/// cutoff `M`, the coefficients `U(1..=M)`, the Sato-Tate mean and variance.
#[derive(Debug, Clone)]
pub struct PeriodicWeight {
    kernel: SmoothKernel,
    l: f64,
    m_cutoff: u32,
    u_coeffs: Vec<f64>,
    mean: f64,
    variance: f64,
    series: FourierWeight,
    /// Multiplier applied to the whole weight (1 except for scale-covariance checks).
    scale: f64,
}

impl PeriodicWeight {
    /// Builds the weight for kernel and scale, with the cutoff chosen for
    /// threshold `x`. Rejects `L < 1` and `x <= 6`.
    pub fn new(kernel: SmoothKernel, l: f64, x: f64) -> Result<Self> {
        let m_cutoff = cutoff_m(kernel, l, x)?;
        let u_coeffs: Vec<f64> = (1..=m_cutoff).map(|m| u_coeff(kernel, l, m)).collect();
        let variance = kahan_sum(u_coeffs.iter().map(|u| u * u));
        Ok(Self {
            kernel,
            l,
            m_cutoff,
            u_coeffs,
            mean: mean_value(kernel, l),
            variance,
            series: FourierWeight::new(kernel, l),
            scale: 1.0,
        })
    }

    pub fn kernel(&self) -> SmoothKernel {
        self.kernel
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn m_cutoff(&self) -> u32 {
        self.m_cutoff
    }

    /// `U(1..=M)` (scaled if [`scaled`](Self::scaled) was applied).
    pub fn u_coeffs(&self) -> Vec<f64> {
        self.u_coeffs.iter().map(|u| u * self.scale).collect()
    }

    /// `U(m)`, zero beyond the cutoff.
    pub fn u(&self, m: u32) -> f64 {
        if m == 0 || m > self.m_cutoff {
            0.0
        } else {
            self.u_coeffs[(m - 1) as usize] * self.scale
        }
    }

    /// Mean against the Sato-Tate measure.
    pub fn mean(&self) -> f64 {
        self.mean * self.scale
    }

    /// Variance `sum U(m)^2`.
    pub fn variance(&self) -> f64 {
        self.variance * self.scale * self.scale
    }

    /// `phi_L(t)` (scaled).
    pub fn eval(&self, t: f64) -> f64 {
        self.series.eval(t) * self.scale
    }

    /// The same weight multiplied by a constant `c`: every value, mean and
    /// U(m) scale by `c`, the variance by `c^2`. Normalized moments must be
    /// invariant under this, which the test suite exercises.
    pub fn scaled(&self, c: f64) -> Self {
        let mut w = self.clone();
        w.scale *= c;
        w
    }
}
