//! Command pipelines. Each command first reads and checks every parameter,
//! then returns a job that performs the run and writes its files.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radiant_core::blowup::{lifespan_experiment, parallel_map, LifespanOptions, MIN_SWEEP_DECADES};
use radiant_core::duhamel::picard_solve;
use radiant_core::fd::{solve_fd, BoundaryRule, FdConfig};
use radiant_core::field::{stretched_grid, uniform_grid};
use radiant_core::kernels::{legendre, positivity_constants, u_kernel_with, KernelOptions};
use radiant_core::norms::{bracket, envelope_diagnostic, log_grid, weight_w, DecayParams};
use radiant_core::problem::{bump_profile, normalized_velocity, Nonlinearity, ProblemSpec};
use radiant_core::spectral::{eigen_blowup_run, ground_state};
use radiant_core::{apply_riemann, homogeneous_solution, DimensionParams, QuadratureSpec, RadialProfile};
use serde_json::{json, Value};

use crate::config::{ensure, Config};
use crate::error::{during_validation, CliError, CliResult};
use crate::output::{Cell, Outputs};
use crate::problem::{self, Defaults};

pub type Job = Box<dyn FnOnce(&mut Outputs, usize) -> CliResult<Value>>;

pub const COMMANDS: [&str; 7] = [
    "kernel-table",
    "homogeneous-decay",
    "picard",
    "oracle-compare",
    "lifespan",
    "spectral-blowup",
    "positivity-scan",
];

pub fn prepare(command: &str, cfg: &Config) -> CliResult<Job> {
    match command {
        "kernel-table" => kernel_table(cfg),
        "homogeneous-decay" => homogeneous_decay(cfg),
        "picard" => picard(cfg),
        "oracle-compare" => oracle_compare(cfg),
        "lifespan" => lifespan(cfg),
        "spectral-blowup" => spectral_blowup(cfg),
        "positivity-scan" => positivity_scan(cfg),
        other => Err(CliError::validation("command", format!("unknown command `{other}`"))),
    }
}

fn dims(n: u32) -> CliResult<DimensionParams> {
    DimensionParams::new(n).map_err(during_validation)
}

fn quadrature(cfg: &Config, default_tol: f64) -> CliResult<QuadratureSpec> {
    let q = QuadratureSpec::default().with_tol(cfg.tol("quad_tol", default_tol)?);
    q.validate().map_err(during_validation)?;
    Ok(q)
}

fn fd_config(cfg: &Config, dr: f64, r_max: f64, horizon: f64) -> CliResult<FdConfig> {
    let boundary = match cfg.choice("boundary", "outflow", &["outflow", "dirichlet"])? {
        "outflow" => BoundaryRule::Outflow,
        _ => BoundaryRule::Dirichlet,
    };
    let fd = FdConfig {
        dr: cfg.f64("dr", dr)?,
        cfl: cfg.f64("cfl", 0.5)?,
        r_max: cfg.f64("fd_r_max", r_max)?,
        boundary,
    };
    fd.validate(horizon).map_err(|e| match e {
        radiant_core::Error::InvalidParameter { key: "r_max", reason } => {
            CliError::validation("fd_r_max", reason)
        }
        other => during_validation(other),
    })?;
    Ok(fd)
}

fn kernel_table(cfg: &Config) -> CliResult<Job> {
    let n = problem::dimension(cfg, Some(4))?;
    let d = dims(n)?;
    let m = d.order().map_err(during_validation)?;
    let step = cfg.positive("z_step", 0.01)?;
    let intervals = (2.0 / step).round();
    ensure(
        (intervals * step - 2.0).abs() < 1e-9 && intervals <= 1e7,
        "z_step",
        "must divide 2 into at most 1e7 intervals",
    )?;
    let intervals = intervals as usize;
    let opts = KernelOptions { tol: cfg.tol("kernel_tol", 1e-9)?, ..Default::default() };
    let positivity_tol = cfg.tol("positivity_tol", 1e-12)?;
    Ok(Box::new(move |out, _jobs| {
        let mut rows = Vec::with_capacity(intervals + 1);
        for i in 0..=intervals {
            // Endpoints are set exactly so the last row is z = 1.
            let z = if i == intervals { 1.0 } else { -1.0 + 2.0 * i as f64 / intervals as f64 };
            let u = if d.is_odd() { legendre(m, z) } else { u_kernel_with(m, z, &opts)? };
            rows.push(vec![Cell::F(z), Cell::F(u)]);
        }
        out.csv("kernel_table.csv", &["z", "kernel"], rows)?;
        let pc = positivity_constants(n, positivity_tol)?;
        let summary = json!({
            "n": n,
            "m": m,
            "kernel": if d.is_odd() { "legendre" } else { "u_kernel" },
            "alpha_m": pc.alpha_m,
            "beta_n": pc.beta_n,
            "scan_resolution": pc.scan_resolution,
        });
        out.jsonl("kernel_summary.jsonl", &summary)?;
        Ok(summary)
    }))
}

fn homogeneous_decay(cfg: &Config) -> CliResult<Job> {
    let n = problem::dimension(cfg, Some(4))?;
    let d = dims(n)?;
    let k = cfg.f64("k", 1.0)?;
    let dp = DecayParams::new(k, d).map_err(during_validation)?;
    let eps = cfg.positive("eps", 1e-2)?;
    let r_min = cfg.positive("r_min", 0.1)?;
    let r_max = cfg.positive("r_max", 100.0)?;
    ensure(r_max > r_min, "r_max", "must exceed r_min")?;
    let r_count = cfg.count("r_count", 30, 2)?;
    let t_min = cfg.positive("t_min", 0.1)?;
    let t_max = cfg.positive("t_max", 50.0)?;
    ensure(t_max > t_min, "t_max", "must exceed t_min")?;
    let t_count = cfg.count("t_count", 30, 2)?;
    let q = quadrature(cfg, 1e-9)?;
    let r_hi = cfg.f64("data_r_max", 2.0 * (r_max + 2.0 * t_max) + 10.0)?;
    let psi = normalized_velocity(eps, k, r_hi).map_err(during_validation)?;
    Ok(Box::new(move |out, jobs| {
        let phi = RadialProfile::zero();
        let r = log_grid(r_min, r_max, r_count);
        let grids: Vec<(&str, f64, Vec<f64>)> = [("base", t_max), ("extended", 2.0 * t_max)]
            .into_iter()
            .map(|(name, hi)| {
                let mut t = vec![0.0];
                t.extend(log_grid(t_min, hi, t_count));
                (name, hi, t)
            })
            .collect();
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (_, _, t) in &grids {
            points.extend(t.iter().flat_map(|&t| r.iter().map(move |&r| (r, t))));
        }
        let values = parallel_map(&points, jobs, |(r, t)| homogeneous_solution(&phi, &psi, &d, r, t, &q))?;
        let table: HashMap<(u64, u64), f64> = points
            .iter()
            .zip(&values)
            .map(|(&(r, t), &v)| ((r.to_bits(), t.to_bits()), v))
            .collect();
        let lookup = |r: f64, t: f64| Ok(table[&(r.to_bits(), t.to_bits())]);

        let mut rows = Vec::new();
        let mut constants = Vec::new();
        for (name, hi, t) in &grids {
            constants.push((*hi, envelope_diagnostic(lookup, eps, &dp, &r, t)?));
            for &tt in t {
                for &rr in &r {
                    let u0 = table[&(rr.to_bits(), tt.to_bits())];
                    let scaled = u0.abs() * rr.powf(d.m - 1.0) * bracket(tt + rr) * weight_w(&dp, rr, tt) / eps;
                    rows.push(vec![Cell::S(name.to_string()), Cell::F(rr), Cell::F(tt), Cell::F(u0), Cell::F(scaled)]);
                }
            }
        }
        out.csv("envelope.csv", &["grid", "r", "t", "u0", "scaled"], rows)?;
        let (c0, c1) = (constants[0].1, constants[1].1);
        let summary = json!({
            "n": n,
            "k": k,
            "eps": eps,
            "t_max": constants[0].0,
            "constant": c0,
            "t_max_extended": constants[1].0,
            "constant_extended": c1,
            "relative_change": (c1 - c0).abs() / c0,
        });
        out.jsonl("decay_summary.jsonl", &summary)?;
        Ok(summary)
    }))
}

struct PicardSetup {
    prob: ProblemSpec,
    r: Vec<f64>,
    t: Vec<f64>,
    q: QuadratureSpec,
    max_iter: usize,
    tol: f64,
}

fn picard_setup(cfg: &Config) -> CliResult<PicardSetup> {
    let horizon = cfg.f64("T", 4.0)?;
    ensure(horizon > 0.0, "T", "horizon must be positive and finite")?;
    let r_max = cfg.f64("r_max", (3.0 * horizon).max(10.0))?;
    let d = Defaults { horizon, ..Default::default() };
    let prob = problem::problem(cfg, &d, 2.0 * r_max + 2.0 * horizon + 10.0)?;
    let r_min = cfg.positive("r_min", 0.05)?;
    ensure(r_max >= horizon, "r_max", "must be at least the horizon T")?;
    ensure(r_max > r_min, "r_max", "must exceed r_min")?;
    let r_count = cfg.count("r_count", 60, 4)?;
    let stretch = cfg.f64("r_stretch", 2.0)?;
    let t_count = cfg.count("t_count", 41, 2)?;
    let q = quadrature(cfg, 1e-9)?;
    let tol = cfg.tol("picard_tol", 1e-10)?;
    let max_iter = cfg.count("max_iter", 40, 1)?;
    Ok(PicardSetup {
        r: stretched_grid(r_min, r_max, r_count, stretch),
        t: uniform_grid(0.0, prob.horizon, t_count),
        prob,
        q,
        max_iter,
        tol,
    })
}

fn picard_outputs(out: &mut Outputs, s: &PicardSetup) -> CliResult<(radiant_core::duhamel::PicardSolution, Value)> {
    let sol = picard_solve(&s.prob, &s.r, &s.t, &s.q, s.max_iter, s.tol)?;
    let rep = &sol.report;
    let rows = rep
        .per_iteration
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let ratio = if i == 0 { None } else { rep.contraction_ratios.get(i - 1).copied() };
            vec![Cell::from(i + 1), rec.norm_x.into(), rec.norm_aux.into(), rec.residual.into(), ratio.into()]
        })
        .collect();
    out.csv("iterations.csv", &["iteration", "norm_x", "norm_aux", "residual", "contraction_ratio"], rows)?;
    let f = &sol.field;
    let mut rows = Vec::with_capacity(f.nr() * f.nt());
    for (i, &t) in f.t_grid().iter().enumerate() {
        for (j, &r) in f.r_grid().iter().enumerate() {
            rows.push(vec![
                Cell::F(r),
                Cell::F(t),
                Cell::F(f.value(i, j)),
                Cell::F(f.r_derivative(i, j)),
                Cell::F(sol.free_field.value(i, j)),
            ]);
        }
    }
    out.csv("solution.csv", &["r", "t", "u", "u_r", "u_free"], rows)?;
    let max_ratio = rep.contraction_ratios.iter().copied().fold(0.0f64, f64::max);
    let summary = json!({
        "problem": s.prob.summary(),
        "converged": rep.converged,
        "iterations": rep.iterations,
        "max_contraction_ratio": max_ratio,
        "final_residual": rep.per_iteration.last().map(|r| r.residual),
    });
    Ok((sol, summary))
}

fn picard(cfg: &Config) -> CliResult<Job> {
    let setup = picard_setup(cfg)?;
    Ok(Box::new(move |out, _jobs| {
        let (_, summary) = picard_outputs(out, &setup)?;
        out.jsonl("picard.jsonl", &summary)?;
        Ok(summary)
    }))
}

fn oracle_compare(cfg: &Config) -> CliResult<Job> {
    let setup = picard_setup(cfg)?;
    let r_max = *setup.r.last().expect("grid has nodes");
    let window = cfg.f64("compare_until", 0.5 * setup.prob.horizon)?;
    ensure(
        window > 0.0 && window <= setup.prob.horizon,
        "compare_until",
        "must lie in (0, T]",
    )?;
    let fd = fd_config(cfg, 0.005, r_max + window + 2.0, window)?;
    Ok(Box::new(move |out, _jobs| {
        let (sol, mut summary) = picard_outputs(out, &setup)?;
        let observe: Vec<f64> = setup.t.iter().copied().filter(|&s| s <= window * (1.0 + 1e-12)).collect();
        let run = solve_fd(&setup.prob, &fd, window, &observe)?;
        let snaps = run
            .snapshots
            .ok_or_else(|| radiant_core::Error::Coverage("finite-difference run stopped before the first observation".into()))?;
        let reached = snaps.t_grid().len();
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        let mut rows = Vec::new();
        for &s in &observe[..reached] {
            for &r in setup.r.iter().filter(|&&x| x + s <= r_max) {
                let (a, b) = (sol.field.eval(r, s), snaps.eval(r, s));
                diff = diff.max((a - b).abs());
                scale = scale.max(b.abs());
                rows.push(vec![Cell::F(r), Cell::F(s), Cell::F(a), Cell::F(b), Cell::F(a - b)]);
            }
        }
        out.csv("compare.csv", &["r", "t", "picard", "fd", "difference"], rows)?;
        let cmp = json!({
            "compare_until": window,
            "fd_blowup_time": run.blowup_time,
            "max_abs_difference": diff,
            "max_abs_fd": scale,
            "relative_difference": if scale > 0.0 { diff / scale } else { 0.0 },
        });
        out.jsonl("picard.jsonl", &summary)?;
        out.jsonl("compare.jsonl", &cmp)?;
        summary["comparison"] = cmp;
        Ok(summary)
    }))
}

fn lifespan(cfg: &Config) -> CliResult<Job> {
    let n = problem::dimension(cfg, Some(4))?;
    let mut base = ProblemSpec::free(n).map_err(during_validation)?;
    base.nonlinearity = problem::nonlinearity(cfg, Some(2.5))?;
    let p = base
        .nonlinearity
        .exponent()
        .ok_or_else(|| CliError::validation("nonlinearity", "lifespan sweep needs a power nonlinearity"))?;
    base.potential = problem::potential(cfg, "zero")?;
    base.k = cfg.f64("k", 0.0)?;
    ensure(base.k >= 0.0, "k", "decay rate must be non-negative")?;
    ensure(base.k * (p - 1.0) < 2.0, "k", "decay rate must be subcritical, k < 2/(p-1)")?;
    base.horizon = cfg.f64("T", 140.0)?;
    base.validate().map_err(during_validation)?;
    let eps = match cfg.f64_list("eps_list")? {
        Some(list) => list,
        None => {
            let lo = cfg.positive("eps_min", 0.02)?;
            let hi = cfg.positive("eps_max", 0.5)?;
            let count = cfg.count("eps_count", 8, 2)?;
            ensure(hi > lo, "eps_max", "must exceed eps_min")?;
            log_grid(lo, hi, count)
        }
    };
    ensure(eps.len() >= 2 && eps.iter().all(|e| *e > 0.0), "eps_list", "need at least two positive amplitudes")?;
    let (lo, hi) = eps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    ensure(
        (hi / lo).log10() >= MIN_SWEEP_DECADES,
        "eps_list",
        format!("amplitudes must span at least {MIN_SWEEP_DECADES} decade(s)"),
    )?;
    let fd = fd_config(cfg, 0.05, 150.0, base.horizon)?;
    let refine_check = cfg.bool("refine_check", false)?;
    Ok(Box::new(move |out, jobs| {
        let opts = LifespanOptions { fd, horizon: base.horizon, refine_check, jobs };
        let rep = lifespan_experiment(&base, &eps, &opts).map_err(during_validation)?;
        let rows = rep
            .rows
            .iter()
            .map(|row| vec![row.epsilon.into(), row.detected_t.into(), row.refined_t.into(), row.blew_up().into()])
            .collect();
        out.csv("lifespan.csv", &["epsilon", "detected_T", "refined_T", "blew_up"], rows)?;
        let summary = json!({
            "problem": base.summary(),
            "fitted_slope": rep.fitted_slope,
            "expected_slope": rep.expected_slope,
            "excluded": rep.excluded,
            "refinement_change": rep.refinement_change,
        });
        out.jsonl("lifespan.jsonl", &summary)?;
        Ok(summary)
    }))
}

fn spectral_blowup(cfg: &Config) -> CliResult<Job> {
    let d = Defaults {
        n: Some(3),
        p: Some(2.0),
        eps: 1e-3,
        horizon: 30.0,
        psi: "bump",
        potential: "square-well",
        ..Default::default()
    };
    let horizon = cfg.f64("T", d.horizon)?;
    let fd = fd_config(cfg, 0.01, 40.0, horizon.max(0.0))?;
    let prob = problem::problem(cfg, &d, fd.r_max)?;
    let (amplitude, p) = match prob.nonlinearity {
        Nonlinearity::Power { amplitude, p } => (amplitude, p),
        _ => return Err(CliError::validation("nonlinearity", "eigenfunction blow-up needs A|u|^p")),
    };
    ensure(!prob.potential.is_zero(), "potential", "needs a potential with a negative eigenvalue")?;
    let eig_r_max = cfg.positive("eig_r_max", 12.0)?;
    let eig_mesh = cfg.count("eig_mesh", 2000, 16)?;
    Ok(Box::new(move |out, _jobs| {
        let chi = ground_state(&prob.potential, prob.dims.n, eig_r_max, eig_mesh)?;
        let run = eigen_blowup_run(&prob.potential, &chi, &prob.phi, &prob.psi, amplitude, p, &fd, prob.horizon)?;
        let rows = run
            .trajectory
            .iter()
            .map(|pt| vec![pt.t.into(), pt.f.into(), pt.sup.into(), pt.chi_power.into()])
            .collect();
        out.csv("trajectory.csv", &["t", "f", "sup", "chi_power"], rows)?;
        let ef = &chi.eigenfunction;
        let rows = ef
            .sample_points()
            .iter()
            .zip(ef.values())
            .map(|(&r, &v)| vec![Cell::F(r), Cell::F(v)])
            .collect();
        out.csv("eigenfunction.csv", &["r", "chi"], rows)?;
        let eigen = json!({
            "n": chi.n,
            "potential": chi.potential.summary(),
            "eigenvalue": chi.eigenvalue,
            "negative": chi.negative,
            "decay_rate": chi.decay_rate,
            "decay_window": chi.decay_window,
            "rayleigh_quotient": chi.rayleigh_quotient,
            "mesh": chi.mesh,
        });
        let blowup = json!({
            "detected_T": run.detected_t,
            "growth_rate_squared": run.growth_rate_squared,
            "ode_constant": run.ode_constant,
            "chi_integral": run.chi_integral,
            "checks": run.checks,
        });
        out.jsonl("eigen.jsonl", &eigen)?;
        out.jsonl("blowup.jsonl", &blowup)?;
        Ok(json!({"problem": prob.summary(), "eigen": eigen, "blowup": blowup}))
    }))
}

#[derive(Clone, Copy)]
struct Sample {
    support: f64,
    r: f64,
    t: f64,
    center: f64,
    width: f64,
    amplitude: f64,
}

fn positivity_scan(cfg: &Config) -> CliResult<Job> {
    let n = problem::dimension(cfg, Some(4))?;
    let d = dims(n)?;
    d.order().map_err(during_validation)?;
    let samples = cfg.count("samples", 200, 1)?;
    let seed = cfg.u64("seed", 0)?;
    let kernel_tol = cfg.tol("positivity_tol", 1e-12)?;
    let threshold = cfg.tol("negativity_tol", 1e-9)?;
    let q = quadrature(cfg, QuadratureSpec::default().abs_tol)?;
    Ok(Box::new(move |out, jobs| {
        let pc = positivity_constants(n, kernel_tol)?;
        let beta = pc.beta_n;
        // Bump data supported in [R, ∞), overlapping the backward cone of a
        // point (r, t) with r ≥ max(β t, t + R).
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<Sample> = (0..samples)
            .map(|_| {
                let support = rng.gen_range(0.5..3.0);
                let t = rng.gen_range(0.05..6.0);
                let r = (beta * t).max(t + support) * (1.0 + 1e-9) + rng.gen_range(0.0..4.0);
                let width = rng.gen_range(0.1..1.5);
                let lo = (r - t).max(support + width);
                let center = lo + rng.gen_range(0.0..1.0) * (r + t + width - lo);
                let amplitude = rng.gen_range(0.1..5.0);
                Sample { support, r, t, center, width, amplitude }
            })
            .collect();
        let values = parallel_map(&draws, jobs, |s| {
            let f = bump_profile(s.center, s.width, s.amplitude)?;
            apply_riemann(&f, &d, s.r, s.t, &q)
        })?;
        let rows = draws
            .iter()
            .zip(&values)
            .enumerate()
            .map(|(i, (s, &v))| {
                vec![
                    Cell::from(i),
                    s.support.into(),
                    s.r.into(),
                    s.t.into(),
                    s.center.into(),
                    s.width.into(),
                    s.amplitude.into(),
                    v.into(),
                ]
            })
            .collect();
        out.csv("scan.csv", &["sample", "R", "r", "t", "center", "width", "amplitude", "value"], rows)?;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let summary = json!({
            "n": n,
            "seed": seed,
            "samples": samples,
            "alpha_m": pc.alpha_m,
            "beta_n": beta,
            "min_value": min,
            "strictly_positive": values.iter().filter(|v| **v > 0.0).count(),
            "threshold": -threshold,
            "passed": min >= -threshold,
        });
        out.jsonl("scan_summary.jsonl", &summary)?;
        Ok(summary)
    }))
}
