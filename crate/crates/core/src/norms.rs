//! Spacetime weights and the weighted sup-norms of the solution space.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::SpacetimeField;
use crate::kernels::DimensionParams;

/// Japanese bracket `⟨x⟩ = 1 + |x|`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    1.0 + x.abs()
}

/// Exponents of the weight `W_k` for a given data decay rate `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayParams {
    pub k: f64,
    pub mu: f64,
    pub nu: f64,
    pub log_flag: bool,
    pub dims: DimensionParams,
}

impl DecayParams {
    pub fn new(k: f64, dims: DimensionParams) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(invalid("k", "decay rate must be finite and non-negative"));
        }
        let (a, m) = (dims.a, dims.m);
        let mu = (k - m).min(a);
        let nu = (k - m - a).max(0.0);
        Ok(Self {
            k,
            mu,
            nu,
            log_flag: (k - (m + a)).abs() < 1e-12,
            dims,
        })
    }
}

/// `⟨t+r⟩^μ ⟨t−r⟩^ν (1 + ln(⟨t+r⟩/⟨t−r⟩))^{−δ}`.
pub fn weight_w(dp: &DecayParams, r: f64, t: f64) -> f64 {
    let plus = bracket(t + r);
    let minus = bracket(t - r);
    let mut w = plus.powf(dp.mu) * minus.powf(dp.nu);
    if dp.log_flag {
        w /= 1.0 + (plus / minus).ln();
    }
    w
}

/// `⟨y⟩^{max(2 − k(p−1), 0)}`.
pub fn phi_k(k: f64, p: f64, y: f64) -> f64 {
    bracket(y).powf((2.0 - k * (p - 1.0)).max(0.0))
}

/// Grid norms of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedNorms {
    /// Sum over j ∈ {0, 1} of the sup of `|∂_r^j u| r^{m−1+j} ⟨r⟩^{1−j} W_k`.
    pub norm_x: f64,
    /// Sup of `|u| r^m W_k`.
    pub norm_aux: f64,
    /// The j = 0 term of `norm_x`.
    pub value_part: f64,
    /// The j = 1 term of `norm_x`.
    pub derivative_part: f64,
}

/// Grid-sup norms over the valid nodes with `r > 0`.
pub fn weighted_norms(u: &SpacetimeField, dp: &DecayParams) -> Result<WeightedNorms> {
    let m = dp.dims.m;
    let (mut j0, mut j1, mut aux) = (0.0f64, 0.0f64, 0.0f64);
    for (i, &t) in u.t_grid().iter().enumerate() {
        for (j, &r) in u.r_grid().iter().enumerate() {
            if r <= 0.0 || !u.is_valid(i, j) {
                continue;
            }
            let (v, d) = (u.value(i, j), u.r_derivative(i, j));
            if !v.is_finite() || !d.is_finite() {
                return Err(Error::NonFinite("weighted norm"));
            }
            let w = weight_w(dp, r, t);
            let rm = r.powf(m);
            j0 = j0.max(v.abs() * rm / r * bracket(r) * w);
            j1 = j1.max(d.abs() * rm * w);
            aux = aux.max(v.abs() * rm * w);
        }
    }
    let out = WeightedNorms {
        norm_x: j0 + j1,
        norm_aux: aux,
        value_part: j0,
        derivative_part: j1,
    };
    if !out.norm_x.is_finite() || !out.norm_aux.is_finite() {
        return Err(Error::NonFinite("weighted norm"));
    }
    Ok(out)
}

/// Empirical envelope constant `sup |u₀| r^{m−1} ⟨t+r⟩ W_k / ε` over a grid.
pub fn envelope_diagnostic(
    mut u0: impl FnMut(f64, f64) -> Result<f64>,
    eps: f64,
    dp: &DecayParams,
    r_grid: &[f64],
    t_grid: &[f64],
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    let m = dp.dims.m;
    let mut sup = 0.0f64;
    for &t in t_grid {
        for &r in r_grid {
            if r <= 0.0 {
                continue;
            }
            let v = u0(r, t)?;
            let c = v.abs() * r.powf(m - 1.0) * bracket(t + r) * weight_w(dp, r, t) / eps;
            if !c.is_finite() {
                return Err(Error::NonFinite("envelope diagnostic"));
            }
            sup = sup.max(c);
        }
    }
    Ok(sup)
}

/// `count` points spaced logarithmically on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}
