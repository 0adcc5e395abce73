//! The bounding smoothing filter and its derived constants.
//!
//! The filter is the compactly supported multiplier
//!
//! ```text
//! M(t) = [ (1 - |t|) * pi*t * cot(pi*t) + |t| - i * (1 - |t|) * pi*t ] * 1{|t| < 1}
//! ```
//!
//! extended by continuity to `M(0) = 1` and `M(+-1) = 0`. Multiplying a
//! Fourier-Stieltjes transform by `M(t/T)` and applying the principal-value
//! transform in [`crate::pv_transform`] yields one-sided bounds on the
//! underlying distribution function: the real (even) part controls the
//! centering and the imaginary (odd) part controls the bracketing width.
//!
//! The odd part divided by its argument, `N2(t) = M2(t)/t = -pi*(1-|t|)+`,
//! is a scaled triangle kernel whose Fourier transform
//! `N2_hat(u) = -pi * (sin(u/2)/(u/2))^2` drives every moment-weighted
//! constant exported here: `c_{2,p} = sup_u |u|^p |N2_hat(u)|` measures how
//! much mass the odd filter component can move across a power weight.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::pv_transform::{adaptive_complex, PvError};

/// Errors from filter-constant computations.
#[derive(Debug, Error)]
pub enum FilterError {
    /// `sup_u |u|^p |N2_hat(u)|` is finite only for p in (0, 2].
    #[error("moment exponent p={0} outside (0, 2]; the weighted supremum is unbounded or empty")]
    ExponentOutOfRange(f64),
    /// Thresholds index a tail supremum and must be finite and nonnegative.
    #[error("threshold must be finite and nonnegative, got {0}")]
    BadThreshold(f64),
    /// Residual quadrature failure.
    #[error(transparent)]
    Quadrature(#[from] PvError),
}

/// The bounding smoothing filter: unit mass at zero, support radius one.
///
/// `eval` is Hermitian (`M(-t) = conj(M(t))`): the real part is even, the
/// imaginary part odd. Exactly zero outside `(-1, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothingFilter {
    kappa: f64,
    support_radius: f64,
}

impl SmoothingFilter {
    /// The filter above; the only member of the family exported today.
    pub fn standard() -> Self {
        Self {
            kappa: 1.0,
            support_radius: 1.0,
        }
    }

    /// Value at zero frequency (the mass the principal-value split peels off).
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// The filter vanishes for `|t| >= support_radius`.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Full complex filter value.
    pub fn eval(&self, t: f64) -> Complex64 {
        filter_eval(t)
    }

    /// Even real component `M1`.
    pub fn real_part(&self, t: f64) -> f64 {
        filter_real_part(t)
    }

    /// Odd real component `M2` (the coefficient of `i`).
    pub fn imag_part(&self, t: f64) -> f64 {
        filter_imag_part(t)
    }
}

/// `pi*y * cot(pi*y)` for `y` in `[0, 0.05)`, by its even power series.
///
/// The direct quotient is fine away from zero; the series removes the 0/0
/// at the origin and keeps full precision where `sin(pi*y)` is tiny.
fn pt_cot_series(y: f64) -> f64 {
    let w = (PI * y) * (PI * y);
    // y*cot(y) = 1 - w/3 - w^2/45 - 2 w^3/945 - w^4/4725 - 2 w^5/93555 - ...,
    // with w = y^2; truncation below w^6 is < 5e-16 for y <= 0.05
    1.0 - w
        * (1.0 / 3.0
            + w * (1.0 / 45.0 + w * (2.0 / 945.0 + w * (1.0 / 4725.0 + w * (2.0 / 93555.0)))))
}

fn filter_real_part(t: f64) -> f64 {
    let a = t.abs();
    if a >= 1.0 {
        return 0.0;
    }
    if a < 0.05 {
        (1.0 - a) * pt_cot_series(a) + a
    } else {
        // cot(pi*a) = -cot(pi*(1-a)); with s = 1 - a the pole at a = 1 cancels:
        // (1-a)*pi*a*cot(pi*a) = -a * cos(pi*s) * (pi*s)/sin(pi*s)
        let s = 1.0 - a;
        let ps = PI * s;
        a - a * ps.cos() * ps / ps.sin()
    }
}

fn filter_imag_part(t: f64) -> f64 {
    let a = t.abs();
    if a >= 1.0 {
        return 0.0;
    }
    -(1.0 - a) * PI * t
}

/// The filter value `M(t)`; zero outside the open unit interval.
pub fn filter_eval(t: f64) -> Complex64 {
    Complex64::new(filter_real_part(t), filter_imag_part(t))
}

/// Fourier transform of the odd filter component divided by its argument:
/// `N2(t) = M2(t)/t = -pi*(1-|t|)+`, so `N2_hat(u) = -pi * (sin(u/2)/(u/2))^2`
/// with `N2_hat(0) = -pi`.
pub fn n2_hat_eval(u: f64) -> f64 {
    if u == 0.0 {
        return -PI;
    }
    let h = u / 2.0;
    let s = h.sin() / h;
    -PI * s * s
}

/// A weighted supremum of the odd-component transform.
#[derive(Debug, Clone, Copy)]
pub struct FilterConstant {
    /// Power weight exponent.
    pub p: f64,
    /// `sup_u |u|^p |N2_hat(u)|`.
    pub value: f64,
    /// Location where the supremum is attained (the smallest one for p = 2,
    /// where every odd multiple of pi attains it).
    pub argmax_u: f64,
}

fn weighted_n2_hat(p: f64, u: f64) -> f64 {
    u.powf(p) * n2_hat_eval(u).abs()
}

/// Golden-section maximization of a unimodal-on-bracket function.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > rel_tol * (a.abs() + b.abs() + 1e-3) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let u = 0.5 * (a + b);
    (u, f(u))
}

/// Grid scan plus golden-section refinement over `[lo, hi]`.
fn scan_max(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    let step = (hi - lo) / grid as f64;
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=grid {
        let u = lo + step * i as f64;
        let v = f(u);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    golden_max(f, a, b, 1e-10)
}

/// `c_{2,p} = sup_{u} |u|^p |N2_hat(u)|` for `p` in `(0, 2]`.
///
/// For `p = 2` the supremum is `4*pi` exactly, attained at every odd multiple
/// of pi. For `p < 2` the decreasing envelope `4*pi*u^(p-2)` confines the
/// supremum to a finite interior maximum, located by a 1e5-point scan of
/// `(0, 200]` refined by golden section.
pub fn c2p_constant(p: f64) -> Result<FilterConstant, FilterError> {
    if !(p > 0.0 && p <= 2.0) || !p.is_finite() {
        return Err(FilterError::ExponentOutOfRange(p));
    }
    if (p - 2.0).abs() < 1e-12 {
        return Ok(FilterConstant {
            p,
            value: 4.0 * PI,
            argmax_u: PI,
        });
    }
    let f = |u: f64| weighted_n2_hat(p, u);
    let (argmax_u, value) = scan_max(&f, 1e-9, 200.0, 100_000);
    Ok(FilterConstant { p, value, argmax_u })
}

/// `sup_{u >= threshold} |u|^p |N2_hat(u)|` for `p` in `(0, 2]`.
///
/// `|N2_hat|` has period-2pi oscillation under a decreasing power envelope
/// for `p < 2`, so the tail supremum over `[threshold, inf)` is attained in
/// `[threshold, threshold + 2pi]`. Coincides with [`c2p_constant`] whenever
/// the threshold sits at or below the global argmax.
pub fn refined_sup(p: f64, threshold: f64) -> Result<f64, FilterError> {
    if !(p > 0.0 && p <= 2.0) || !p.is_finite() {
        return Err(FilterError::ExponentOutOfRange(p));
    }
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(FilterError::BadThreshold(threshold));
    }
    if (p - 2.0).abs() < 1e-12 {
        // 4*pi*sin^2(u/2) reaches 4*pi inside any window of length 2*pi
        return Ok(4.0 * PI);
    }
    let global = c2p_constant(p)?;
    if threshold <= global.argmax_u {
        return Ok(global.value);
    }
    let f = |u: f64| weighted_n2_hat(p, u);
    let (_, value) = scan_max(&f, threshold, threshold + 2.0 * PI, 20_000);
    Ok(value)
}

/// Residual of the inverse-transform decay law for the filter.
#[derive(Debug, Clone, Copy)]
pub struct KernelResidual {
    /// `x^2 * M_check(x) - sin(x)`, which tends to zero as `|x| -> inf`.
    pub value: f64,
    /// The inverse transform `M_check(x) = (1/2pi) int e^{-itx} M(t) dt`.
    pub inverse_value: f64,
    /// Absolute quadrature error bound on `value`.
    pub abs_error: f64,
}

/// Evaluates `x^2 * M_check(x) - sin(x)` by direct quadrature of the inverse
/// transform over the filter support.
///
/// Hermitian symmetry collapses the inverse transform to the real integral
/// `M_check(x) = (1/pi) int_0^1 [M1(t) cos(tx) + M2(t) sin(tx)] dt`.
pub fn kernel_residual(x: f64) -> Result<KernelResidual, FilterError> {
    if !x.is_finite() {
        return Err(FilterError::BadThreshold(x));
    }
    let integrand = |t: f64| {
        let v = (filter_real_part(t) * (t * x).cos() + filter_imag_part(t) * (t * x).sin()) / PI;
        Complex64::new(v, 0.0)
    };
    // panel width tied to the oscillation rate of cos(tx) on [0, 1]
    let width = (PI / (4.0 * (x.abs() + 1.0))).min(0.125);
    let init = (1.0 / width).ceil() as usize;
    let inner_tol = 5e-15 * (1.0 + x.abs());
    let (integral, err, _panels) = adaptive_complex(&integrand, 0.0, 1.0, inner_tol, init, 50_000)?;
    let inverse_value = integral.re;
    Ok(KernelResidual {
        value: x * x * inverse_value - x.sin(),
        inverse_value,
        abs_error: x * x * err,
    })
}
