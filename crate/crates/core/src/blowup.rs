//! Blow-up experiments: the cut-off construction, the functional
//! `f(t) = ∫ u r^{n−1} dr`, the comparison ODE `f'' = λf + c f^p`, and the
//! lifespan sweep over the data amplitude.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fd::{solve_fd_with, FdConfig};
use crate::kernels::{positivity_constants, DimensionParams};
use crate::problem::{decaying_profile, ProblemSpec};
use crate::profile::{Extrapolation, RadialProfile};
use crate::quadrature::simpson_weights;

/// `6s⁵ − 15s⁴ + 10s³` clamped to `[0, 1]`.
fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

/// Plateau cut-off: 0 up to `T*`, 1 on `[2T*, 3T*]`, 0 from `4T*` on.
pub fn cutoff_zeta(r: f64, t_star: f64) -> f64 {
    let s = r / t_star;
    if s <= 1.0 || s >= 4.0 {
        0.0
    } else if s < 2.0 {
        smoothstep(s - 1.0)
    } else if s <= 3.0 {
        1.0
    } else {
        smoothstep(4.0 - s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalValue {
    pub value: f64,
    /// The snapshot was not negligible at the outer grid edge.
    pub truncated: bool,
}

/// `∫ u r^{n−1} dr` by composite Simpson over a uniform grid.
pub fn functional_f(values: &[f64], r_grid: &[f64], dims: &DimensionParams) -> Result<FunctionalValue> {
    if values.len() != r_grid.len() {
        return Err(invalid("grid", "snapshot and grid lengths differ"));
    }
    if values.len() < 3 {
        return Err(invalid("grid", "need at least three samples"));
    }
    let h = r_grid[1] - r_grid[0];
    if !(h > 0.0)
        || r_grid
            .windows(2)
            .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(w[1].abs()))
    {
        return Err(invalid("grid", "functional quadrature needs a uniform grid"));
    }
    let power = dims.n as f64 - 1.0;
    let w = simpson_weights(values.len(), h);
    let mut value = 0.0;
    let mut peak = 0.0f64;
    for ((&u, &r), wi) in values.iter().zip(r_grid).zip(&w) {
        if !u.is_finite() {
            return Err(Error::NonFinite("functional f"));
        }
        value += wi * u * r.powf(power);
        peak = peak.max(u.abs());
    }
    let edge = values[values.len() - 1].abs();
    Ok(FunctionalValue {
        value,
        truncated: edge > 1e-10 * peak,
    })
}

/// Controls for [`ode_blowup_time_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeOptions {
    pub rtol: f64,
    /// First stopping level of `f`.
    pub threshold: f64,
    /// Second stopping level; both estimates must agree.
    pub confirm_threshold: f64,
    /// Relative agreement required between the two estimates.
    pub certify_rtol: f64,
    /// Give up (no blow-up) once `t` passes this.
    pub horizon: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            threshold: 1e12,
            confirm_threshold: 1e14,
            certify_rtol: 1e-4,
            horizon: 1e8,
        }
    }
}

/// Blow-up time of `f'' = λf + c|f|^p`, `f(0) = f0`, `f'(0) = fp0`.
pub fn ode_blowup_time(c: f64, p: f64, lambda: f64, f0: f64, fp0: f64) -> Result<f64> {
    ode_blowup_time_with(c, p, lambda, f0, fp0, &OdeOptions::default())
}

// Dormand–Prince 5(4) tableau. Row 6 doubles as the fifth-order weights.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand–Prince integration of a two-component system from `x`
/// until `stop` holds or `x` reaches `x_end`. Returns the final point.
#[allow(clippy::too_many_arguments)]
fn dopri(
    rhs: impl Fn(f64, [f64; 2]) -> [f64; 2],
    mut x: f64,
    mut y: [f64; 2],
    x_end: f64,
    mut h: f64,
    rtol: f64,
    atol: [f64; 2],
    mut stop: impl FnMut(f64, [f64; 2]) -> bool,
) -> Result<(f64, [f64; 2])> {
    let mut k = [[0.0f64; 2]; 7];
    while x < x_end && !stop(x, y) {
        h = h.min(x_end - x);
        if x + h == x {
            return Err(Error::StepUnderflow { t: x, h });
        }
        k[0] = rhs(x, y);
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for d in 0..2 {
                    ys[d] += h * A[s][j] * kj[d];
                }
            }
            k[s] = rhs(x + C[s] * h, ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for d in 0..2 {
            let hi: f64 = (0..6).map(|s| A[6][s] * k[s][d]).sum();
            let lo: f64 = (0..7).map(|s| B4[s] * k[s][d]).sum();
            y5[d] += h * hi;
            let scale = atol[d] + rtol * y[d].abs().max(y5[d].abs());
            err = err.max((h * (hi - lo) / scale).abs());
        }
        if !y5[0].is_finite() || !y5[1].is_finite() || !err.is_finite() {
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            x = if h == x_end - x { x_end } else { x + h };
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
        h *= factor.clamp(0.2, 5.0);
    }
    Ok((x, y))
}

/// As [`ode_blowup_time`]. Integrates until `f` reaches `threshold`, adds the
/// remaining time `(f/K)^{−(p−1)/2}` of the profile `K (T−t)^{−2/(p−1)}`,
/// `K^{p−1} = 2(p+1)/(c(p−1)²)`, and repeats at `confirm_threshold`.
///
/// Once `f ≥ 1` the independent variable becomes `x = ln f` (valid because
/// `f' > 0` throughout), which keeps the steps resolvable as `t → T`.
pub fn ode_blowup_time_with(
    c: f64,
    p: f64,
    lambda: f64,
    f0: f64,
    fp0: f64,
    opts: &OdeOptions,
) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid("c", "must be positive"));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(invalid("p", "must exceed 1"));
    }
    if !(lambda >= 0.0) {
        return Err(invalid("lambda", "must be non-negative"));
    }
    if !(f0 >= 0.0) {
        return Err(invalid("f0", "must be non-negative"));
    }
    if !(fp0 > 0.0) {
        return Err(invalid("fp0", "must be positive"));
    }
    if !(opts.confirm_threshold > opts.threshold && opts.threshold > f0.max(1.0)) {
        return Err(invalid(
            "threshold",
            "need max(f0, 1) < threshold < confirm_threshold",
        ));
    }
    let k_const = (2.0 * (p + 1.0) / (c * (p - 1.0).powi(2))).powf(1.0 / (p - 1.0));
    let tail = |f: f64| (f / k_const).powf(-(p - 1.0) / 2.0);

    // Phase 1 in t: (f, f').
    let by_time = |_t: f64, y: [f64; 2]| [y[1], lambda * y[0] + c * y[0].abs().powf(p)];
    let atol = 1e-3 * opts.rtol * (f0 + fp0);
    let h0 = (1e-3 * (1.0 + f0) / fp0).min(1e-2);
    let (t1, y1) = dopri(
        by_time,
        0.0,
        [f0, fp0],
        opts.horizon,
        h0,
        opts.rtol,
        [atol, atol],
        |_, y| y[0] >= 1.0,
    )?;
    if y1[0] < 1.0 {
        return Err(Error::NoBlowUp {
            horizon: opts.horizon,
        });
    }

    // Phase 2 in x = ln f: (t, f').
    let by_log = |x: f64, y: [f64; 2]| {
        let f = x.exp();
        [f / y[1], f * (lambda * f + c * f.powf(p)) / y[1]]
    };
    let mut x = y1[0].ln();
    let mut y = [t1, y1[1]];
    let mut estimates = [0.0; 2];
    for (slot, level) in [opts.threshold, opts.confirm_threshold].into_iter().enumerate() {
        let (xe, ye) = dopri(
            by_log,
            x,
            y,
            level.ln(),
            0.1,
            opts.rtol,
            [opts.rtol, atol],
            |_, y| y[0] > opts.horizon,
        )?;
        if ye[0] > opts.horizon {
            return Err(Error::NoBlowUp {
                horizon: opts.horizon,
            });
        }
        estimates[slot] = ye[0] + tail(xe.exp());
        x = xe;
        y = ye;
    }
    let [e1, e2] = estimates;
    if (e1 - e2).abs() > opts.certify_rtol * e2.abs() {
        return Err(Error::Certification(format!(
            "blow-up time moved from {e1} to {e2} between thresholds"
        )));
    }
    Ok(e2)
}

/// How the blow-up time of a run was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DetectionRule {
    /// First step with grid sup-norm above the blow-up threshold.
    Threshold,
    /// Comparison-ODE estimate from the recorded `f`.
    OdeExtrapolation,
}

/// Run with cut-off velocity data `ψζ` and zero position.
#[derive(Debug, Clone, Serialize)]
pub struct BlowupRun {
    #[serde(skip)]
    pub prob: ProblemSpec,
    pub support_radius: f64,
    pub t_star: f64,
    pub f_trajectory: Vec<(f64, f64)>,
    pub detected_t: Option<f64>,
    pub detection_rule: DetectionRule,
}

/// `T* = max((β_n + 2)T, 2T + R)`.
pub fn cutoff_scale(dims: &DimensionParams, lifespan: f64, support_radius: f64) -> Result<f64> {
    let beta = positivity_constants(dims.n, 1e-12)?.beta_n;
    Ok(((beta + 2.0) * lifespan).max(2.0 * lifespan + support_radius))
}

/// Evolves `prob` with velocity `ψζ(·/T*)`, recording `f(t)` every step.
pub fn cutoff_blowup_run(
    prob: &ProblemSpec,
    support_radius: f64,
    t_star: f64,
    cfg: &FdConfig,
    horizon: f64,
) -> Result<BlowupRun> {
    if !(t_star > 0.0) {
        return Err(invalid("T_star", "must be positive"));
    }
    let count = (3.0 * t_star / cfg.dr).ceil().max(64.0) as usize + 1;
    let (lo, hi) = (t_star, 4.0 * t_star);
    let points: Vec<f64> = (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect();
    let values = points
        .iter()
        .map(|&r| prob.psi.eval(r) * cutoff_zeta(r, t_star))
        .collect();
    let mut p = prob.clone();
    p.psi = RadialProfile::new(points, values, None, Extrapolation::ZeroBeyondSupport, 2)?;
    p.phi = RadialProfile::zero();
    let cfg = FdConfig {
        r_max: cfg.r_max.max(4.0 * t_star + horizon + 10.0 * cfg.dr),
        ..*cfg
    };
    let mut traj = vec![(0.0, 0.0)];
    let run = solve_fd_with(&p, &cfg, horizon, &[], |view| {
        let f = view.grid.integrate(|i| view.u[i]);
        traj.push((view.t, f));
    })?;
    Ok(BlowupRun {
        prob: p,
        support_radius,
        t_star,
        f_trajectory: traj,
        detected_t: run.blowup_time,
        detection_rule: DetectionRule::Threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifespanRow {
    pub epsilon: f64,
    pub detected_t: Option<f64>,
    /// Detected time with `dr` halved, when the refinement check ran.
    pub refined_t: Option<f64>,
}

impl LifespanRow {
    pub fn blew_up(&self) -> bool {
        self.detected_t.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanReport {
    pub rows: Vec<LifespanRow>,
    /// Least-squares slope of `ln T` against `ln ε` over the runs that blew up.
    pub fitted_slope: f64,
    /// `−(p−1)/(2 − k(p−1))`.
    pub expected_slope: f64,
    pub excluded: Vec<f64>,
    /// Largest relative change of `T` under `dr/2`, if checked.
    pub refinement_change: Option<f64>,
}

/// Settings of a lifespan sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LifespanOptions {
    pub fd: FdConfig,
    pub horizon: f64,
    /// Repeat each run with `dr/2` and report the change of `T`.
    pub refine_check: bool,
    pub jobs: usize,
}

/// Minimum span of the amplitude list, in decades.
pub const MIN_SWEEP_DECADES: f64 = 1.0;

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs the finite-difference engine with `φ = 0`, `ψ = ε⟨r⟩^{−k−1}` for each
/// `ε` and fits the lifespan exponent.
pub fn lifespan_experiment(
    base: &ProblemSpec,
    eps_list: &[f64],
    opts: &LifespanOptions,
) -> Result<LifespanReport> {
    base.validate()?;
    let p = base
        .nonlinearity
        .exponent()
        .ok_or_else(|| invalid("p", "lifespan sweep needs a power nonlinearity"))?;
    let k = base.k;
    if !(k * (p - 1.0) < 2.0) {
        return Err(invalid("k", "decay rate must be subcritical, k < 2/(p-1)"));
    }
    if eps_list.len() < 2 || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid("eps_list", "need at least two positive amplitudes"));
    }
    let (lo, hi) = eps_list
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    if (hi / lo).log10() < MIN_SWEEP_DECADES {
        return Err(invalid("eps_list", "amplitudes must span at least one decade"));
    }
    opts.fd.validate(opts.horizon)?;

    let run_one = |eps: f64, dr: f64| -> Result<Option<f64>> {
        let mut prob = base.clone();
        prob.epsilon = eps;
        prob.phi = RadialProfile::zero();
        prob.psi = decaying_profile(eps, k, opts.fd.r_max)?;
        let cfg = FdConfig { dr, ..opts.fd };
        let run = solve_fd_with(&prob, &cfg, opts.horizon, &[], |_| {})?;
        Ok(run.blowup_time)
    };
    let job = |eps: f64| -> Result<LifespanRow> {
        let detected_t = run_one(eps, opts.fd.dr)?;
        let refined_t = if opts.refine_check && detected_t.is_some() {
            run_one(eps, 0.5 * opts.fd.dr)?
        } else {
            None
        };
        Ok(LifespanRow {
            epsilon: eps,
            detected_t,
            refined_t,
        })
    };
    let rows = parallel_map(eps_list, opts.jobs, job)?;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    let mut change: Option<f64> = None;
    for row in &rows {
        match row.detected_t {
            Some(t) => {
                xs.push(row.epsilon.ln());
                ys.push(t.ln());
                if let Some(tr) = row.refined_t {
                    let c = ((tr - t) / t).abs();
                    change = Some(change.map_or(c, |m| m.max(c)));
                } else if opts.refine_check {
                    change = Some(f64::INFINITY);
                }
            }
            None => excluded.push(row.epsilon),
        }
    }
    if xs.len() < 2 {
        return Err(Error::NoBlowUp {
            horizon: opts.horizon,
        });
    }
    Ok(LifespanReport {
        rows,
        fitted_slope: fit_slope(&xs, &ys),
        expected_slope: -(p - 1.0) / (2.0 - k * (p - 1.0)),
        excluded,
        refinement_change: change,
    })
}

/// Maps `f` over `items` on up to `jobs` threads, preserving order.
pub fn parallel_map<T: Copy + Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(|&x| f(x)).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(|&x| f(x)).collect::<Result<Vec<R>>>())
            })
            .collect();
        let mut out = Vec::with_capacity(items.len());
        for h in handles {
            out.extend(h.join().expect("sweep worker panicked")?);
        }
        Ok(out)
    })
}
