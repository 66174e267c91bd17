use radiant_core::duhamel::{apply_duhamel, pde_residual, picard_solve};
use radiant_core::fd::{solve_fd, FdConfig};
use radiant_core::field::{stretched_grid, uniform_grid, SpacetimeField};
use radiant_core::kernels::u_kernel;
use radiant_core::norms::{weighted_norms, DecayParams};
use radiant_core::problem::{bump_profile, decaying_profile, Nonlinearity, PotentialSpec, ProblemSpec};
use radiant_core::quadrature::gauss_legendre;
use radiant_core::{DimensionParams, Error, QuadratureSpec};

fn dims(n: u32) -> DimensionParams {
    DimensionParams::new(n).unwrap()
}

fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|i| f(a + h * (i as f64 + 0.5))).sum::<f64>() * h
}

fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let (lo, hi) = (a + h * p as f64, a + h * (p + 1) as f64);
        for (xi, wi) in x.iter().zip(&w) {
            s += 0.5 * (hi - lo) * wi * f(0.5 * (lo + hi) + 0.5 * (hi - lo) * xi);
        }
    }
    s
}

/// Four-dimensional propagator of `g` at `(r, s)` by graded midpoint sums.
fn propagator_n4(g: impl Fn(f64) -> f64, r: f64, s: f64) -> f64 {
    let k = |l: f64| {
        let z = (l * l + r * r - s * s) / (2.0 * r * l);
        l.powf(1.5) * g(l) * u_kernel(1, z).unwrap()
    };
    let panels = 4000;
    let (lo, hi) = ((s - r).abs(), s + r);
    // Outer range graded at |s − r| (log singularity when s > r).
    let len = hi - lo;
    let mut total = midpoint(|u| 2.0 * len * u * k(lo + len * u * u), 0.0, 1.0, panels);
    if s > r {
        let s0 = s - r;
        total += midpoint(|u| 2.0 * s0 * u * k(s0 - s0 * u * u), 0.0, 1.0, panels);
    }
    0.5 * r.powf(-1.5) * total
}

#[test]
fn four_dimensional_duhamel_matches_brute_force() {
    let r_grid = uniform_grid(0.0, 4.0, 161);
    let t_grid = uniform_grid(0.0, 2.0, 81);
    let mut vals = Vec::new();
    let mut ders = Vec::new();
    for &t in &t_grid {
        for &r in &r_grid {
            vals.push((-r).exp() * t);
            ders.push(-(-r).exp() * t);
        }
    }
    let g = SpacetimeField::with_r_derivative(r_grid, t_grid, vals, ders).unwrap();
    let (r, t) = (1.0, 2.0);
    let q = QuadratureSpec::default().with_tol(1e-8);
    let v = apply_duhamel(&g, &dims(4), r, t, &q).unwrap();
    let inner = |tau: f64| propagator_n4(|l| (-l).exp() * tau, r, t - tau);
    // The τ-integrand has a kink at τ = t − r.
    let oracle = gauss(inner, 0.0, t - r, 8) + gauss(inner, t - r, t, 8);
    assert!((v - oracle).abs() < 1e-5, "{v} vs {oracle}");
}

#[test]
fn constant_forcing_gives_half_t_squared() {
    let g = SpacetimeField::from_fn(uniform_grid(0.0, 8.0, 81), uniform_grid(0.0, 3.0, 31), |_, _| 1.0)
        .unwrap();
    let q = QuadratureSpec::default().with_tol(1e-9);
    for n in [3, 4, 5] {
        for &(r, t) in &[(1.0, 2.0), (3.0, 1.0), (0.5, 3.0)] {
            let v = apply_duhamel(&g, &dims(n), r, t, &q).unwrap();
            assert!((v - 0.5 * t * t).abs() < 1e-6, "n = {n} ({r},{t}): {v}");
        }
    }
}

#[test]
fn zero_forcing_and_coverage() {
    let g = SpacetimeField::from_fn(uniform_grid(0.0, 4.0, 41), uniform_grid(0.0, 2.0, 21), |_, _| 0.0)
        .unwrap();
    let q = QuadratureSpec::default();
    assert_eq!(apply_duhamel(&g, &dims(4), 1.0, 1.5, &q).unwrap(), 0.0);
    assert_eq!(apply_duhamel(&g, &dims(4), 1.0, 0.0, &q).unwrap(), 0.0);
    assert!(matches!(
        apply_duhamel(&g, &dims(4), 3.0, 1.5, &q),
        Err(Error::Coverage(_))
    ));
}

#[test]
fn free_problem_converges_immediately() {
    let mut prob = ProblemSpec::free(3).unwrap();
    prob.psi = bump_profile(2.0, 1.0, 1.0).unwrap();
    prob.horizon = 2.0;
    let r = uniform_grid(0.05, 6.0, 40);
    let t = uniform_grid(0.0, 2.0, 21);
    let sol = picard_solve(&prob, &r, &t, &QuadratureSpec::default(), 10, 1e-12).unwrap();
    assert!(sol.report.converged);
    assert_eq!(sol.report.iterations, 1);
    assert_eq!(sol.field.values(), sol.free_field.values());
}

#[test]
fn large_data_fails_to_converge_and_blows_up() {
    let mut prob = ProblemSpec::free(4).unwrap();
    prob.nonlinearity = Nonlinearity::Power { amplitude: 1.0, p: 2.5 };
    prob.epsilon = 0.5;
    prob.k = 0.0;
    prob.horizon = 10.0;
    prob.psi = decaying_profile(0.5, 0.0, 40.0).unwrap();
    let r = stretched_grid(0.05, 20.0, 30, 2.0);
    let t = uniform_grid(0.0, 10.0, 26);
    let q = QuadratureSpec::default().with_tol(1e-6);
    match picard_solve(&prob, &r, &t, &q, 30, 1e-8) {
        Err(Error::Divergence { .. }) => {}
        Ok(sol) => assert!(!sol.report.converged, "{:?}", sol.report),
        Err(e) => panic!("unexpected error {e}"),
    }
    let cfg = FdConfig { dr: 0.05, r_max: 150.0, ..Default::default() };
    let run = solve_fd(&prob, &cfg, 10.0, &[]).unwrap();
    let t_blow = run.blowup_time.expect("finite-difference run blows up");
    assert!(t_blow < 10.0);
}

#[test]
fn picard_agrees_with_finite_differences() {
    let horizon = 4.0;
    let mut prob = ProblemSpec::free(3).unwrap();
    prob.nonlinearity = Nonlinearity::Power { amplitude: 1.0, p: 3.0 };
    prob.potential = PotentialSpec::PowerTail { v0: 0.2, kappa: 3.0, negative: false };
    prob.psi = bump_profile(2.0, 1.0, 1.0).unwrap();
    prob.horizon = horizon;
    let r = uniform_grid(0.02, 12.0, 120);
    let t = uniform_grid(0.0, horizon, 81);
    let q = QuadratureSpec::default().with_tol(1e-9);
    let sol = picard_solve(&prob, &r, &t, &q, 40, 1e-9).unwrap();
    assert!(sol.report.converged, "{:?}", sol.report);

    let observe: Vec<f64> = t.iter().copied().filter(|&s| s <= 0.5 * horizon).collect();
    let cfg = FdConfig { dr: 0.005, r_max: 14.0, ..Default::default() };
    let fd = solve_fd(&prob, &cfg, 0.5 * horizon, &observe).unwrap();
    let snaps = fd.snapshots.unwrap();
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for (i, &s) in observe.iter().enumerate() {
        for &rr in r.iter().filter(|&&x| x + s <= 12.0) {
            let a = sol.field.eval(rr, s);
            let b = snaps.eval(rr, s);
            diff = diff.max((a - b).abs());
            scale = scale.max(b.abs());
            let _ = i;
        }
    }
    assert!(diff <= 0.01 * scale, "diff {diff}, scale {scale}");

    // The converged field satisfies the PDE up to grid truncation, and much
    // better than the free field does once the forcing is included.
    let forcing = |rr: f64, u: f64| prob.forcing(rr, u);
    let res = pde_residual(&sol.field, &dims(3), forcing, 0.5);
    let res_free = pde_residual(&sol.free_field, &dims(3), forcing, 0.5);
    assert!(res < 0.2 * res_free, "residual {res} vs free {res_free}");
}

#[test]
fn small_data_stays_in_the_weighted_space() {
    let mut prob = ProblemSpec::free(5).unwrap();
    prob.nonlinearity = Nonlinearity::Power { amplitude: 1.0, p: 2.5 };
    prob.k = 3.0;
    prob.epsilon = 1e-3;
    prob.horizon = 6.0;
    prob.psi = decaying_profile(1e-3 / 5.0, 3.0, 40.0).unwrap();
    let r = stretched_grid(0.05, 12.0, 60, 2.0);
    let t = uniform_grid(0.0, 6.0, 61);
    let q = QuadratureSpec::default().with_tol(1e-10);
    let sol = picard_solve(&prob, &r, &t, &q, 20, 1e-14).unwrap();
    assert!(sol.report.converged);
    let dp = DecayParams::new(3.0, dims(5)).unwrap();
    let free = weighted_norms(&sol.free_field, &dp).unwrap();
    let last = sol.report.per_iteration.last().unwrap();
    assert!(last.norm_x.is_finite() && last.norm_x <= 2.0 * free.norm_x);
    assert!(last.norm_aux <= last.norm_x);
    assert!(sol.report.contraction_ratios.iter().all(|&c| c <= 0.55));
}
