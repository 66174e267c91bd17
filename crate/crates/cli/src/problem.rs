//! Problem description from flat configuration keys.

use radiant_core::problem::{bump_profile, normalized_velocity, Nonlinearity, PotentialSpec, ProblemSpec};
use radiant_core::RadialProfile;

use crate::config::{ensure, Config};
use crate::error::{during_validation, CliError, CliResult};

/// Per-command defaults for the problem keys.
pub struct Defaults {
    pub n: Option<u32>,
    pub p: Option<f64>,
    pub eps: f64,
    pub k: f64,
    pub horizon: f64,
    pub psi: &'static str,
    pub potential: &'static str,
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            n: None,
            p: None,
            eps: 1e-2,
            k: 0.0,
            horizon: 1.0,
            psi: "decaying",
            potential: "zero",
        }
    }
}

pub fn dimension(cfg: &Config, default: Option<u32>) -> CliResult<u32> {
    let n = match (cfg.has("n"), default) {
        (false, Some(n)) => n,
        (false, None) => return Err(CliError::validation("n", "required")),
        (true, _) => {
            let n = cfg.u64("n", 0)?;
            u32::try_from(n).map_err(|_| CliError::validation("n", "too large"))?
        }
    };
    ensure(n >= 2, "n", format!("dimension must be at least 2, got {n}"))?;
    Ok(n)
}

pub fn nonlinearity(cfg: &Config, default_p: Option<f64>) -> CliResult<Nonlinearity> {
    let kind = cfg.choice("nonlinearity", "power", &["power", "signed", "zero"])?;
    if kind == "zero" {
        return Ok(Nonlinearity::Zero);
    }
    let p = match default_p {
        Some(d) => cfg.f64("p", d)?,
        None => cfg.required_f64("p")?,
    };
    let amplitude = cfg.f64("A", 1.0)?;
    let f = if kind == "power" {
        Nonlinearity::Power { amplitude, p }
    } else {
        Nonlinearity::Signed { amplitude, p }
    };
    f.validate().map_err(during_validation)?;
    Ok(f)
}

pub fn potential(cfg: &Config, default: &str) -> CliResult<PotentialSpec> {
    let kind = cfg.choice(
        "potential",
        default,
        &["zero", "power-tail", "compact-bump", "square-well", "log-oscillating"],
    )?;
    let negative = || cfg.bool("V_negative", false);
    Ok(match kind {
        "zero" => PotentialSpec::Zero,
        "power-tail" => PotentialSpec::PowerTail {
            v0: cfg.positive("V0", 1.0)?,
            kappa: cfg.positive("kappa", 3.0)?,
            negative: negative()?,
        },
        "compact-bump" => PotentialSpec::CompactBump {
            v0: cfg.positive("V0", 1.0)?,
            radius: cfg.positive("V_radius", 1.0)?,
            negative: negative()?,
        },
        "square-well" => PotentialSpec::SquareWell {
            depth: cfg.positive("V_depth", 10.0)?,
            radius: cfg.positive("V_radius", 1.0)?,
        },
        _ => PotentialSpec::LogOscillating {
            v0: cfg.positive("V0", 1.0)?,
            kappa: cfg.positive("kappa", 3.0)?,
            omega: cfg.positive("omega", 1.0)?,
        },
    })
}

fn bump(cfg: &Config, prefix: &str, center: f64, width: f64, amplitude: f64) -> CliResult<RadialProfile> {
    let c = cfg.f64(&format!("{prefix}_center"), center)?;
    let w = cfg.positive(&format!("{prefix}_width"), width)?;
    bump_profile(c, w, amplitude).map_err(|e| match e {
        radiant_core::Error::InvalidParameter { reason, .. } => {
            CliError::validation(&format!("{prefix}_center"), reason)
        }
        other => CliError::Runtime(other),
    })
}

/// Builds and validates the full problem; `r_hi` is the radius up to which
/// decaying data are tabulated.
pub fn problem(cfg: &Config, d: &Defaults, r_hi: f64) -> CliResult<ProblemSpec> {
    let n = dimension(cfg, d.n)?;
    let mut prob = ProblemSpec::free(n).map_err(during_validation)?;
    prob.nonlinearity = nonlinearity(cfg, d.p)?;
    prob.potential = potential(cfg, d.potential)?;
    prob.epsilon = cfg.f64("eps", d.eps)?;
    prob.k = cfg.f64("k", d.k)?;
    prob.horizon = cfg.f64("T", d.horizon)?;
    ensure(prob.epsilon > 0.0, "eps", "data amplitude must be positive")?;
    ensure(prob.k >= 0.0, "k", "decay rate must be non-negative")?;
    prob.psi = match cfg.choice("psi", d.psi, &["decaying", "bump", "zero"])? {
        "decaying" => normalized_velocity(prob.epsilon, prob.k, r_hi).map_err(during_validation)?,
        "bump" => bump(cfg, "psi", 2.0, 1.0, prob.epsilon)?,
        _ => RadialProfile::zero(),
    };
    prob.phi = match cfg.choice("phi", "zero", &["zero", "bump"])? {
        "bump" => {
            let amplitude = cfg.f64("phi_amplitude", prob.epsilon)?;
            bump(cfg, "phi", 2.0, 1.0, amplitude)?
        }
        _ => RadialProfile::zero(),
    };
    prob.validate().map_err(during_validation)?;
    Ok(prob)
}
