//! The semilinear radial problem `u_tt − Δu + V u = F(u)` with data `(φ, ψ)`.

use serde::Serialize;
use serde_json::json;

use crate::error::{invalid, Result};
use crate::kernels::DimensionParams;
use crate::norms::bracket;
use crate::profile::{Extrapolation, RadialProfile};
use crate::quadrature::GaussRule;

/// Power nonlinearities; both satisfy `F(0) = F'(0) = 0` for `p > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Nonlinearity {
    /// `A |u|^p`
    Power { amplitude: f64, p: f64 },
    /// `A |u|^{p−1} u`
    Signed { amplitude: f64, p: f64 },
    Zero,
}

impl Nonlinearity {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Nonlinearity::Power { amplitude, p } => amplitude * u.abs().powf(p),
            Nonlinearity::Signed { amplitude, p } => amplitude * u.abs().powf(p - 1.0) * u,
            Nonlinearity::Zero => 0.0,
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Nonlinearity::Power { p, .. } | Nonlinearity::Signed { p, .. } => Some(p),
            Nonlinearity::Zero => None,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Nonlinearity::Power { amplitude, .. } | Nonlinearity::Signed { amplitude, .. } => {
                amplitude
            }
            Nonlinearity::Zero => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Zero)
    }

    pub fn validate(&self) -> Result<()> {
        if let Nonlinearity::Power { amplitude, p } | Nonlinearity::Signed { amplitude, p } = *self
        {
            if !(p > 1.0) || !p.is_finite() {
                return Err(invalid("p", format!("exponent must exceed 1, got {p}")));
            }
            if !(amplitude > 0.0) || !amplitude.is_finite() {
                return Err(invalid("A", format!("amplitude must be positive, got {amplitude}")));
            }
        }
        Ok(())
    }
}

/// Radial potentials `V(r)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// `sign · v0 · ⟨r⟩^{−κ}`.
    PowerTail { v0: f64, kappa: f64, negative: bool },
    /// `sign · v0 · b(r/radius)` with the bump `b(s) = (1 − s²)⁶`.
    CompactBump { v0: f64, radius: f64, negative: bool },
    /// `−depth` on `r < radius`, 0 outside.
    SquareWell { depth: f64, radius: f64 },
    /// Sign-changing `v0 ⟨r⟩^{−κ} cos(ω ln⟨r⟩) / (1 + κ + ω)`.
    LogOscillating { v0: f64, kappa: f64, omega: f64 },
    /// Tabulated profile.
    Table(RadialProfile),
}

impl PotentialSpec {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::PowerTail { v0, kappa, negative } => {
                sign(*negative) * v0 * bracket(r).powf(-kappa)
            }
            PotentialSpec::CompactBump { v0, radius, negative } => {
                sign(*negative) * v0 * smooth_bump(r / radius)
            }
            PotentialSpec::SquareWell { depth, radius } => {
                if r < *radius {
                    -depth
                } else {
                    0.0
                }
            }
            PotentialSpec::LogOscillating { v0, kappa, omega } => {
                let b = bracket(r);
                v0 * b.powf(-kappa) * (omega * b.ln()).cos() / (1.0 + kappa + omega)
            }
            PotentialSpec::Table(p) => p.eval(r),
        }
    }

    /// `V'(r)` (one-sided difference for tables and at the well edge).
    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Zero | PotentialSpec::SquareWell { .. } => 0.0,
            PotentialSpec::PowerTail { v0, kappa, negative } => {
                -sign(*negative) * v0 * kappa * bracket(r).powf(-kappa - 1.0)
            }
            PotentialSpec::CompactBump { v0, radius, negative } => {
                sign(*negative) * v0 * smooth_bump_derivative(r / radius) / radius
            }
            PotentialSpec::LogOscillating { v0, kappa, omega } => {
                let b = bracket(r);
                let c = v0 / (1.0 + kappa + omega);
                let phase = omega * b.ln();
                c * b.powf(-kappa - 1.0) * (-kappa * phase.cos() - omega * phase.sin())
            }
            PotentialSpec::Table(p) => {
                let h = 1e-6 * r.max(1.0);
                (p.eval(r + h) - p.eval((r - h).max(0.0))) / (r + h - (r - h).max(0.0))
            }
        }
    }

    /// The potential `a · V`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        Ok(match self {
            PotentialSpec::Zero => PotentialSpec::Zero,
            PotentialSpec::PowerTail { v0, kappa, negative } => PotentialSpec::PowerTail {
                v0: a * v0,
                kappa: *kappa,
                negative: *negative,
            },
            PotentialSpec::CompactBump { v0, radius, negative } => PotentialSpec::CompactBump {
                v0: a * v0,
                radius: *radius,
                negative: *negative,
            },
            PotentialSpec::SquareWell { depth, radius } => PotentialSpec::SquareWell {
                depth: a * depth,
                radius: *radius,
            },
            PotentialSpec::LogOscillating { v0, kappa, omega } => PotentialSpec::LogOscillating {
                v0: a * v0,
                kappa: *kappa,
                omega: *omega,
            },
            PotentialSpec::Table(p) => PotentialSpec::Table(RadialProfile::new(
                p.sample_points().to_vec(),
                p.values().iter().map(|v| a * v).collect(),
                p.derivative_values().map(|d| d.iter().map(|v| a * v).collect()),
                p.extrapolation(),
                p.smoothness_order(),
            )?),
        })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Zero => true,
            PotentialSpec::PowerTail { v0, .. }
            | PotentialSpec::CompactBump { v0, .. }
            | PotentialSpec::LogOscillating { v0, .. } => *v0 == 0.0,
            PotentialSpec::SquareWell { depth, .. } => *depth == 0.0,
            PotentialSpec::Table(p) => p.is_zero(),
        }
    }

    /// Average of `V` over `[a, b]`, exact at the square-well edge.
    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return self.eval(a);
        }
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::SquareWell { depth, radius } => {
                let inside = (radius.min(b) - a).max(0.0);
                -depth * inside / (b - a)
            }
            _ => {
                thread_local! {
                    static RULE: GaussRule = GaussRule::new(8);
                }
                RULE.with(|g| g.integrate(a, b, |r| self.eval(r))) / (b - a)
            }
        }
    }

    /// Smallest `C` with `|V| + ⟨r⟩|V'| ≤ C ⟨r⟩^{−κ}` on `samples`.
    pub fn decay_constant(&self, kappa: f64, samples: &[f64]) -> f64 {
        samples
            .iter()
            .map(|&r| {
                (self.eval(r).abs() + bracket(r) * self.derivative(r).abs())
                    * bracket(r).powf(kappa)
            })
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> serde_json::Value {
        match self {
            PotentialSpec::Zero => json!({"family": "zero"}),
            PotentialSpec::PowerTail { v0, kappa, negative } => json!({
                "family": "power-tail", "V0": v0, "kappa": kappa, "sign": if *negative { -1 } else { 1 }
            }),
            PotentialSpec::CompactBump { v0, radius, negative } => json!({
                "family": "compact-bump", "V0": v0, "radius": radius, "sign": if *negative { -1 } else { 1 }
            }),
            PotentialSpec::SquareWell { depth, radius } => {
                json!({"family": "square-well", "depth": depth, "radius": radius})
            }
            PotentialSpec::LogOscillating { v0, kappa, omega } => json!({
                "family": "log-oscillating", "V0": v0, "kappa": kappa, "omega": omega
            }),
            PotentialSpec::Table(p) => json!({"family": "table", "samples": p.sample_points().len()}),
        }
    }
}

fn sign(negative: bool) -> f64 {
    if negative {
        -1.0
    } else {
        1.0
    }
}

/// `(1 − s²)⁶` on `|s| < 1`: a C⁵ bump with peak value 1 at `s = 0`.
///
/// A polynomial profile keeps high derivatives moderate, so finite-difference
/// and quadrature errors stay at their nominal orders.
pub fn smooth_bump(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        q.powi(6)
    }
}

pub fn smooth_bump_derivative(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        -12.0 * s * q.powi(5)
    }
}

/// Radial data of bump shape: `amplitude · b((r − center)/half_width)`.
pub fn bump_profile(center: f64, half_width: f64, amplitude: f64) -> Result<RadialProfile> {
    if !(half_width > 0.0) || center - half_width < 0.0 {
        return Err(invalid("bump_width", "bump must have positive width and sit in r > 0"));
    }
    let lo = (center - half_width).max(1e-6);
    let hi = center + half_width;
    let count = ((hi - lo) / half_width * 400.0).ceil() as usize + 1;
    RadialProfile::from_fn(
        lo,
        hi,
        count,
        |r| amplitude * smooth_bump((r - center) / half_width),
        |r| amplitude * smooth_bump_derivative((r - center) / half_width) / half_width,
        Extrapolation::ZeroBeyondSupport,
    )
}

/// `scale · ⟨r⟩^{−k−1}` sampled on `(0, r_hi]` with a matching power tail.
pub fn decaying_profile(scale: f64, k: f64, r_hi: f64) -> Result<RadialProfile> {
    let count = (r_hi * 40.0).ceil().max(64.0) as usize + 1;
    RadialProfile::from_fn(
        1e-6,
        r_hi,
        count,
        |r| scale * bracket(r).powf(-k - 1.0),
        |r| -scale * (k + 1.0) * bracket(r).powf(-k - 2.0),
        Extrapolation::PowerLawTail(k + 1.0),
    )
}

/// Velocity datum `ψ = ε ⟨r⟩^{−k−1}/(k+2)`, scaled so that
/// `r|ψ| + r²|ψ'| ≤ ε r^{1−m} ⟨r⟩^{m−1−k}` holds for every `m ≥ 0`.
pub fn normalized_velocity(eps: f64, k: f64, r_hi: f64) -> Result<RadialProfile> {
    decaying_profile(eps / (k + 2.0), k, r_hi)
}

/// Full problem description.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub dims: DimensionParams,
    pub nonlinearity: Nonlinearity,
    pub potential: PotentialSpec,
    pub phi: RadialProfile,
    pub psi: RadialProfile,
    pub epsilon: f64,
    pub k: f64,
    pub horizon: f64,
}

impl ProblemSpec {
    /// Free problem with zero data; callers fill in the fields they need.
    pub fn free(n: u32) -> Result<Self> {
        Ok(Self {
            dims: DimensionParams::new(n)?,
            nonlinearity: Nonlinearity::Zero,
            potential: PotentialSpec::Zero,
            phi: RadialProfile::zero(),
            psi: RadialProfile::zero(),
            epsilon: 1.0,
            k: 0.0,
            horizon: 1.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.nonlinearity.validate()?;
        if !(self.epsilon > 0.0) {
            return Err(invalid("eps", "data amplitude must be positive"));
        }
        if !(self.k >= 0.0) {
            return Err(invalid("k", "decay rate must be non-negative"));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(invalid("T", "horizon must be positive and finite"));
        }
        if self.phi.smoothness_order() < 2 && self.phi.derivative_values().is_none() {
            return Err(invalid("phi", "position datum must be C² (smoothness order 2)"));
        }
        Ok(())
    }

    /// Whether `p_n < p < 1 + 2/m`, the range where small-data existence holds.
    pub fn in_existence_range(&self) -> bool {
        match self.nonlinearity.exponent() {
            Some(p) => p > self.dims.p_n && p < self.dims.p_upper(),
            None => true,
        }
    }

    /// `G(u) = F(u) − V(r) u`.
    #[inline]
    pub fn forcing(&self, r: f64, u: f64) -> f64 {
        self.nonlinearity.eval(u) - self.potential.eval(r) * u
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "n": self.dims.n,
            "nonlinearity": self.nonlinearity,
            "potential": self.potential.summary(),
            "epsilon": self.epsilon,
            "k": self.k,
            "horizon": self.horizon,
            "existence_range": self.in_existence_range(),
        })
    }
}
