//! Dimension bookkeeping and the kernels of the radial wave propagator.
//!
//! Odd dimensions use the Legendre polynomial `P_m`; even dimensions use the
//! singular kernel
//!
//! ```text
//! U_m(z) = (√2/π) ∫_{max(z,-1)}^1 (σ - z)^{-1/2} T_m(σ) (1 - σ²)^{-1/2} dσ
//! ```
//!
//! which is finite for every `z ≠ -1`, equals 1 at `z = 1` and has a
//! logarithmic singularity at `z = -1`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};

/// Space dimension together with the derived exponents `a`, `m` and the
/// critical power `p_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionParams {
    pub n: u32,
    pub a: f64,
    pub m: f64,
    pub p_n: f64,
}

impl DimensionParams {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "space dimension must be at least 1"));
        }
        let nf = n as f64;
        let (a, m) = if n % 2 == 1 {
            (1.0, (nf - 3.0) / 2.0)
        } else {
            (0.5, (nf - 2.0) / 2.0)
        };
        let p_n = if n == 1 {
            f64::INFINITY
        } else {
            let (qa, qb) = (nf - 1.0, nf + 1.0);
            (qb + (qb * qb + 8.0 * qa).sqrt()) / (2.0 * qa)
        };
        Ok(Self { n, a, m, p_n })
    }

    pub fn is_odd(&self) -> bool {
        self.n % 2 == 1
    }

    /// Integer kernel order `m`; only defined for `n ≥ 2`.
    pub fn order(&self) -> Result<usize> {
        if self.n < 2 {
            return Err(Error::Domain(format!(
                "the radial propagator needs n >= 2, got n = {}",
                self.n
            )));
        }
        Ok(self.m.round() as usize)
    }

    /// `(n - 1) / 2`, the power of λ and r in the propagator.
    pub fn half_n_minus_one(&self) -> f64 {
        (self.n as f64 - 1.0) / 2.0
    }

    /// Upper end `1 + 2/m` of the existence range of p (infinite for m ≤ 0).
    pub fn p_upper(&self) -> f64 {
        if self.m > 0.0 {
            1.0 + 2.0 / self.m
        } else {
            f64::INFINITY
        }
    }
}

/// `(λ² + r² − t²) / (2 r λ)`.
pub fn z_ratio(lambda: f64, r: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(r > 0.0) {
        return Err(Error::Domain(format!(
            "z_ratio needs lambda > 0 and r > 0 (lambda = {lambda}, r = {r})"
        )));
    }
    Ok(z_unchecked(lambda, r, t))
}

#[inline]
pub(crate) fn z_unchecked(lambda: f64, r: f64, t: f64) -> f64 {
    ((lambda - t) * (lambda + t) + r * r) / (2.0 * r * lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyKind {
    Legendre,
    Chebyshev,
}

/// `P_m(x)` or `T_m(x)` by the three-term recurrence.
pub fn orthopoly(kind: PolyKind, m: usize, x: f64) -> f64 {
    match kind {
        PolyKind::Legendre => legendre(m, x),
        PolyKind::Chebyshev => chebyshev(m, x),
    }
}

#[inline]
pub fn legendre(m: usize, x: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..m {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

#[inline]
pub fn chebyshev(m: usize, x: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let (mut t0, mut t1) = (1.0, x);
    for _ in 1..m {
        let t2 = 2.0 * x * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

/// Accuracy controls for [`u_kernel_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelOptions {
    /// Starting Gauss–Chebyshev order on `[0, 1]`.
    pub chebyshev_order: usize,
    /// Absolute tolerance.
    pub tol: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            chebyshev_order: 64,
            tol: 1e-9,
        }
    }
}

const MAX_CHEBYSHEV_ORDER: usize = 1 << 14;

/// `U_m(z)` with default accuracy.
pub fn u_kernel(m: usize, z: f64) -> Result<f64> {
    u_kernel_with(m, z, &KernelOptions::default())
}

/// `U_m(z)`; returns `+∞` at the logarithmic singularity `z = -1` and 0 for
/// `z > 1`, where the integration range is empty.
pub fn u_kernel_with(m: usize, z: f64, opts: &KernelOptions) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::Domain("U_m evaluated at NaN".into()));
    }
    if z > 1.0 + 1e-12 {
        return Ok(0.0);
    }
    let z = z.min(1.0);
    if z >= 0.0 {
        return u_kernel_chebyshev(m, z, opts);
    }
    if z == -1.0 {
        return Ok(f64::INFINITY);
    }
    let scale = SQRT_2 / PI;
    let piece_opts = AdaptiveOptions {
        initial_panels: 2,
        max_depth: 30,
        abs_tol: 0.5 * opts.tol / scale,
    };
    let tm = |s: f64| chebyshev(m, s);
    let value = if z > -1.0 {
        // [z, 0]: σ = (z−1)/2 + ((1+z)/2) cosh w absorbs both square roots.
        let c0 = 0.5 * (z - 1.0);
        let c = 0.5 * (1.0 + z);
        let w_end = ((1.0 - z) / (1.0 + z)).acosh();
        let lower = integrate_adaptive(
            |w| {
                let s = (c0 + c * w.cosh()).min(0.0);
                tm(s) / (1.0 - s).sqrt()
            },
            0.0,
            w_end,
            piece_opts,
            "U_m lower piece",
        )?;
        // [0, 1]: σ = z + (1−z) sin²θ.
        let theta0 = (-z / (1.0 - z)).sqrt().asin();
        let upper = integrate_adaptive(
            |th| {
                let s = z + (1.0 - z) * th.sin().powi(2);
                2.0 * tm(s) / (1.0 + s).sqrt()
            },
            theta0,
            FRAC_PI_2,
            piece_opts,
            "U_m upper piece",
        )?;
        lower.value + upper.value
    } else {
        // [−1, 0] with roots z < −1: σ = (z−1)/2 + ((−1−z)/2) cosh w.
        let c0 = 0.5 * (z - 1.0);
        let c = 0.5 * (-1.0 - z);
        let w_end = ((1.0 - z) / (-1.0 - z)).acosh();
        let lower = integrate_adaptive(
            |w| {
                let s = (c0 + c * w.cosh()).min(0.0);
                tm(s) / (1.0 - s).sqrt()
            },
            0.0,
            w_end,
            piece_opts,
            "U_m lower piece",
        )?;
        // [0, 1]: σ = 1 − s².
        let upper = integrate_adaptive(
            |q| {
                let s = 1.0 - q * q;
                2.0 * tm(s) / ((s - z).sqrt() * (1.0 + s).sqrt())
            },
            0.0,
            1.0,
            piece_opts,
            "U_m upper piece",
        )?;
        lower.value + upper.value
    };
    Ok(scale * value)
}

/// Gauss–Chebyshev evaluation on z ∈ [0, 1] after σ = z + ν(1 − z).
fn u_kernel_chebyshev(m: usize, z: f64, opts: &KernelOptions) -> Result<f64> {
    let rule = |order: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..order {
            let x = ((2 * i + 1) as f64 * PI / (2 * order) as f64).cos();
            let nu = 0.5 * (1.0 + x);
            let sigma = z + nu * (1.0 - z);
            s += chebyshev(m, sigma) / (1.0 + sigma).sqrt();
        }
        // ∫₀¹ [ν(1−ν)]^{-1/2} g dν = ∫_{-1}^{1} (1−x²)^{-1/2} g dx ≈ (π/N) Σ g.
        SQRT_2 / PI * (PI / order as f64) * s
    };
    let mut order = (opts.chebyshev_order / 2).max(2);
    let mut prev = rule(order);
    while order < MAX_CHEBYSHEV_ORDER {
        order *= 2;
        let next = rule(order);
        if (next - prev).abs() <= opts.tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::ToleranceNotMet {
        context: "U_m Gauss-Chebyshev",
        achieved: f64::NAN,
        requested: opts.tol,
    })
}

/// Kernel of the propagator in dimension `dims`, as a function of z.
pub(crate) fn propagator_kernel(dims: &DimensionParams, m: usize, z: f64) -> Result<f64> {
    if dims.is_odd() {
        Ok(legendre(m, z))
    } else {
        u_kernel(m, z)
    }
}

/// Certified positivity threshold of the propagator kernel near z = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityConstants {
    pub alpha_m: f64,
    pub beta_n: f64,
    pub scan_resolution: f64,
}

/// Default scan step for [`positivity_constants`].
pub const DEFAULT_SCAN_RESOLUTION: f64 = 1e-4;

pub fn positivity_constants(n: u32, tol: f64) -> Result<PositivityConstants> {
    positivity_constants_with(n, tol, DEFAULT_SCAN_RESOLUTION)
}

/// Scans z downward from 1 in steps of `resolution` until the kernel drops to
/// `tol` or below. Even dimensions keep `alpha_m ≥ resolution` so that
/// `beta_n > 1`; odd dimensions may return `alpha_m = 0`.
pub fn positivity_constants_with(
    n: u32,
    tol: f64,
    resolution: f64,
) -> Result<PositivityConstants> {
    let dims = DimensionParams::new(n)?;
    let m = dims.order()?;
    if !(resolution > 0.0 && resolution < 0.5) {
        return Err(invalid("scan_resolution", "must lie in (0, 0.5)"));
    }
    let steps = (1.0 / resolution).round() as usize;
    let floor_index = if dims.is_odd() { steps } else { steps - 1 };
    let mut alpha = None;
    for j in 0..=floor_index {
        let z = 1.0 - j as f64 * resolution;
        if propagator_kernel(&dims, m, z)? <= tol {
            if j <= 1 {
                return Err(Error::Certification(format!(
                    "kernel of order {m} is not positive below z = 1"
                )));
            }
            alpha = Some(1.0 - (j - 1) as f64 * resolution);
            break;
        }
    }
    let lowest = if dims.is_odd() { 0.0 } else { resolution };
    let alpha_m = alpha.unwrap_or(lowest);
    Ok(PositivityConstants {
        alpha_m,
        beta_n: 1.0 / (1.0 - alpha_m),
        scan_resolution: resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_parameters() {
        for n in 1..=12 {
            let d = DimensionParams::new(n).unwrap();
            assert_eq!(d.a + d.m, (n as f64 - 1.0) / 2.0);
            if n >= 4 {
                assert!(d.m >= 1.0);
            }
            if n >= 2 {
                let p = d.p_n;
                let q = (n as f64 - 1.0) * p * p - (n as f64 + 1.0) * p - 2.0;
                assert!(q.abs() < 1e-12, "n={n}: {q}");
            }
        }
        let d3 = DimensionParams::new(3).unwrap();
        assert!((d3.p_n - (1.0 + SQRT_2)).abs() < 1e-14);
        assert!(DimensionParams::new(0).is_err());
    }

    #[test]
    fn z_ratio_identities() {
        let (r, t) = (1.7, 0.4);
        assert!((z_ratio(r + t, r, t).unwrap() - 1.0).abs() < 1e-15);
        assert!((z_ratio((t - r).abs(), r, t).unwrap() - 1.0).abs() < 1e-15);
        assert!((z_ratio((t - r).abs(), 0.4, 1.7).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(z_ratio(1.0, 1.0, 1.0).unwrap(), 0.5);
        assert!(z_ratio(0.0, 1.0, 1.0).is_err());
        assert!(z_ratio(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn polynomial_values() {
        assert_eq!(orthopoly(PolyKind::Legendre, 0, 3.3), 1.0);
        assert!((orthopoly(PolyKind::Legendre, 2, 0.5) + 0.125).abs() < 1e-15);
        for m in 0..30 {
            assert!((orthopoly(PolyKind::Chebyshev, m, 1.0) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn u_kernel_at_one() {
        for m in 0..8 {
            assert!((u_kernel(m, 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn u_kernel_singular_and_empty_ranges() {
        assert_eq!(u_kernel(1, -1.0).unwrap(), f64::INFINITY);
        assert_eq!(u_kernel(1, 1.5).unwrap(), 0.0);
        assert!(u_kernel(0, -1.0 + 1e-9).unwrap() > u_kernel(0, -0.5).unwrap());
    }

    #[test]
    fn positivity_constants_small_dimensions() {
        let c3 = positivity_constants(3, 0.0).unwrap();
        assert_eq!(c3.alpha_m, 0.0);
        assert_eq!(c3.beta_n, 1.0);
        let c4 = positivity_constants(4, 0.0).unwrap();
        assert!(c4.beta_n > 1.0 && c4.alpha_m > 0.0 && c4.alpha_m < 1.0);
        let c5 = positivity_constants(5, 0.0).unwrap();
        assert!((c5.alpha_m - DEFAULT_SCAN_RESOLUTION).abs() < 1e-12);
    }
}
