//! The radial free-wave propagator and the homogeneous solution built from it.
//!
//! For a radial profile `f` the propagator is
//!
//! ```text
//! odd n:  [Lf](r,t) = 1/(2 r^{(n-1)/2}) ∫_{|t-r|}^{t+r} λ^{(n-1)/2} f(λ) P_m(z) dλ
//! even n: the same with U_m in place of P_m, plus, when t > r,
//!         1/(2 r^{(n-1)/2}) ∫_0^{t-r} λ^{(n-1)/2} f(λ) U_m(z) dλ
//! ```
//!
//! with `z = (λ² + r² − t²)/(2rλ)`. `Lψ` solves the free radial wave equation
//! with data `(0, ψ)`; `∂_t Lφ` handles the position datum.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernels::{legendre, u_kernel, z_unchecked, DimensionParams};
use crate::profile::RadialProfile;
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};

/// Panel quadrature controls shared by the propagator and Duhamel integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    /// Initial panels per unit length of the integration range.
    pub panels_per_unit: u32,
    /// Grade panels toward integrable endpoint singularities.
    pub singular_substitution: bool,
    /// Absolute error target for the returned value.
    pub abs_tol: f64,
    /// Maximum bisection depth per initial panel.
    pub max_refinements: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            panels_per_unit: 16,
            singular_substitution: true,
            abs_tol: 1e-8,
            max_refinements: 8,
        }
    }
}

/// Cap on the number of initial panels of one integral.
const MAX_INITIAL_PANELS: usize = 256;

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(invalid("abs_tol", "must be positive"));
        }
        if self.panels_per_unit < 4 {
            return Err(invalid("panels_per_unit", "must be at least 4"));
        }
        Ok(())
    }

    pub(crate) fn options(&self, length: f64, abs_tol: f64) -> AdaptiveOptions {
        let panels = (self.panels_per_unit as f64 * length).ceil();
        AdaptiveOptions {
            initial_panels: (panels as usize).clamp(4, MAX_INITIAL_PANELS),
            max_depth: self.max_refinements,
            abs_tol,
        }
    }

    pub fn with_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

/// Integrates `g` over `[a, b]`, grading the nodes toward `anchor` (which must
/// lie outside or on the boundary of the interval) by `λ = anchor ± L·u²`.
pub(crate) fn integrate_graded(
    g: impl Fn(f64) -> f64,
    anchor: f64,
    a: f64,
    b: f64,
    opts: AdaptiveOptions,
    context: &'static str,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    // The graded integrand keeps a weak `u log u` singularity at the anchor;
    // bisection there gains a factor four per level, so allow more levels.
    let opts = AdaptiveOptions {
        max_depth: opts.max_depth + 12,
        ..opts
    };
    if anchor <= a {
        let len = b - anchor;
        let u0 = ((a - anchor) / len).sqrt();
        integrate_adaptive(
            |u| 2.0 * len * u * g(anchor + len * u * u),
            u0,
            1.0,
            opts,
            context,
        )
        .map(|i| i.value)
    } else {
        debug_assert!(anchor >= b);
        let len = anchor - a;
        let u0 = ((anchor - b) / len).sqrt();
        integrate_adaptive(
            |u| 2.0 * len * u * g(anchor - len * u * u),
            u0,
            1.0,
            opts,
            context,
        )
        .map(|i| i.value)
    }
}

pub(crate) fn check_point(r: f64, t: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("propagator needs r > 0, got r = {r}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("propagator needs t >= 0, got t = {t}")));
    }
    Ok(())
}

/// `[Lf](r, t)` for `r > 0`, `t ≥ 0`, certified to `quad.abs_tol`.
pub fn apply_riemann(
    f: &RadialProfile,
    dims: &DimensionParams,
    r: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if f.is_zero() {
        check_point(r, t)?;
        return Ok(0.0);
    }
    propagate(
        |l| f.eval(l),
        (f.support_start(), f.support_end()),
        dims,
        r,
        t,
        quad,
    )
}

/// Propagator applied to an arbitrary radial function vanishing outside
/// `support`.
pub(crate) fn propagate(
    f: impl Fn(f64) -> f64,
    support: (f64, f64),
    dims: &DimensionParams,
    r: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_point(r, t)?;
    quad.validate()?;
    let m = dims.order()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let h = dims.half_n_minus_one();
    let pref = 0.5 * r.powf(-h);
    // Certify the final value, not the bare integral: scale by 1/pref.
    let tol = quad.abs_tol / pref;
    let (lo, hi) = ((t - r).abs(), t + r);
    let (s_lo, s_hi) = support;
    let a = lo.max(s_lo);
    let b = hi.min(s_hi);

    if dims.is_odd() {
        if b <= a {
            return Ok(0.0);
        }
        let g = |l: f64| l.powf(h) * f(l) * legendre(m, z_unchecked(l, r, t));
        let opts = quad.options(b - a, tol);
        let v = integrate_adaptive(g, a, b, opts, "propagator integral")?;
        return Ok(pref * v.value);
    }

    let kernel_err = std::cell::Cell::new(None);
    let g = |l: f64| -> f64 {
        match u_kernel(m, z_unchecked(l, r, t)) {
            Ok(k) => l.powf(h) * f(l) * k,
            Err(e) => {
                kernel_err.set(Some(e));
                0.0
            }
        }
    };
    let mut total = 0.0;
    let part_tol = if t > r { tol / 3.0 } else { tol };
    if b > a {
        let opts = quad.options(b - a, part_tol);
        total += if quad.singular_substitution && t > r {
            integrate_graded(g, lo, a, b, opts, "propagator integral")?
        } else {
            integrate_adaptive(g, a, b, opts, "propagator integral")?.value
        };
    }
    if t > r {
        // Second integral over (0, t − r): log singularity at t − r.
        let s0 = t - r;
        let mid = 0.5 * s0;
        let (a2, b2) = (s_lo, s0.min(s_hi));
        if quad.singular_substitution {
            if a2 < mid {
                let opts = quad.options(mid.min(b2) - a2, part_tol);
                total += integrate_graded(g, 0.0, a2, mid.min(b2), opts, "interior integral")?;
            }
            if b2 > mid {
                let opts = quad.options(b2 - mid.max(a2), part_tol);
                total += integrate_graded(g, s0, mid.max(a2), b2, opts, "interior integral")?;
            }
        } else if b2 > a2 {
            let opts = quad.options(b2 - a2, 2.0 * part_tol);
            total += integrate_adaptive(g, a2, b2, opts, "interior integral")?.value;
        }
    }
    if let Some(e) = kernel_err.take() {
        return Err(e);
    }
    Ok(pref * total)
}

/// `∂_t [Lφ](r, t)` by Richardson-extrapolated central differences.
///
/// Negative times inside the backward cone (`|t| < r`) use the oddness
/// `L(r, −t) = −L(r, t)`.
pub fn riemann_time_derivative(
    phi: &RadialProfile,
    dims: &DimensionParams,
    r: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_point(r, t)?;
    if phi.is_zero() {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(phi.eval(r));
    }
    let mut h = 0.01f64;
    while t < h && h - t >= r {
        h *= 0.5;
        if h < 1e-7 {
            return Err(Error::StepUnderflow { t, h });
        }
    }
    let mut last_err = f64::INFINITY;
    for _ in 0..6 {
        let inner = quad.with_tol(quad.abs_tol * h / 40.0);
        let l = |s: f64| -> Result<f64> {
            if s >= 0.0 {
                apply_riemann(phi, dims, r, s, &inner)
            } else {
                Ok(-apply_riemann(phi, dims, r, -s, &inner)?)
            }
        };
        let d = |step: f64| -> Result<f64> { Ok((l(t + step)? - l(t - step)?) / (2.0 * step)) };
        let (d1, d2, d4) = (d(h)?, d(0.5 * h)?, d(0.25 * h)?);
        let r1 = (4.0 * d2 - d1) / 3.0;
        let r2 = (4.0 * d4 - d2) / 3.0;
        last_err = (r2 - r1).abs();
        if last_err <= quad.abs_tol {
            return Ok((16.0 * r2 - r1) / 15.0);
        }
        h *= 0.5;
    }
    Err(Error::ToleranceNotMet {
        context: "time derivative of the propagator",
        achieved: last_err,
        requested: quad.abs_tol,
    })
}

/// Free solution with data `(φ, ψ)`: `Lψ + ∂_t Lφ`.
pub fn homogeneous_solution(
    phi: &RadialProfile,
    psi: &RadialProfile,
    dims: &DimensionParams,
    r: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_point(r, t)?;
    let half = quad.with_tol(0.5 * quad.abs_tol);
    let velocity = apply_riemann(psi, dims, r, t, &half)?;
    let position = riemann_time_derivative(phi, dims, r, t, &half)?;
    Ok(velocity + position)
}
