use std::f64::consts::{FRAC_PI_2, PI};

use radiant_core::fd::FdConfig;
use radiant_core::problem::{bump_profile, PotentialSpec};
use radiant_core::spectral::{coupling_sweep, eigen_blowup_run, ground_state};
use radiant_core::{Error, RadialProfile};

/// Lowest s-wave level of the unit-radius well of the given depth from
/// `k cot k = −√(V₀ − k²)`, `λ = k² − V₀`.
fn well_oracle(depth: f64) -> f64 {
    let g = |k: f64| k / k.tan() + (depth - k * k).sqrt();
    let (mut a, mut b) = (FRAC_PI_2 + 1e-12, depth.sqrt().min(PI - 1e-12));
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(a) * g(m) <= 0.0 {
            b = m
        } else {
            a = m
        }
    }
    a * a - depth
}

fn well(depth: f64) -> PotentialSpec {
    PotentialSpec::SquareWell { depth, radius: 1.0 }
}

#[test]
fn free_operator_has_no_bound_state() {
    assert!(matches!(
        ground_state(&PotentialSpec::Zero, 3, 20.0, 1000),
        Err(Error::NoBoundState { .. })
    ));
}

#[test]
fn deep_well_matches_matching_condition() {
    let e = ground_state(&well(10.0), 3, 12.0, 4000).unwrap();
    let oracle = well_oracle(10.0);
    assert!((e.eigenvalue - oracle).abs() < 1e-4, "{} vs {oracle}", e.eigenvalue);
    assert!(e.negative);
    let gamma = (-e.eigenvalue).sqrt();
    assert!((e.decay_rate - gamma).abs() < 0.1 * gamma, "{} vs {gamma}", e.decay_rate);
    assert!((e.rayleigh_quotient - e.eigenvalue).abs() < 1e-8 * e.eigenvalue.abs().max(1.0));
}

#[test]
fn eigenfunction_is_positive_and_normalized() {
    let e = ground_state(&well(6.0), 3, 12.0, 3000).unwrap();
    let chi = &e.eigenfunction;
    let pts = chi.sample_points();
    let vals = chi.values();
    for (&r, &v) in pts.iter().zip(vals).take(pts.len() - 1) {
        assert!(v > 0.0, "χ({r}) = {v}");
    }
    // ∫ χ² r² dr by Simpson on a fine grid over the interpolant.
    let n = 200_000;
    let hi = *pts.last().unwrap();
    let h = hi / n as f64;
    let f = |r: f64| chi.eval(r).powi(2) * r * r;
    let mut s = f(0.0) + f(hi);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(h * i as f64);
    }
    let norm = s * h / 3.0;
    assert!((norm - 1.0).abs() < 1e-8, "{norm}");
}

#[test]
fn eigenvalue_decreases_with_depth() {
    let mut last = f64::INFINITY;
    for depth in [3.0, 5.0, 7.0, 10.0, 14.0] {
        let e = ground_state(&well(depth), 3, 12.0, 3000).unwrap();
        assert!(e.eigenvalue <= last, "depth {depth}");
        last = e.eigenvalue;
    }
}

#[test]
fn binding_threshold() {
    let threshold = PI * PI / 4.0;
    assert!(matches!(
        ground_state(&well(threshold - 0.05), 3, 400.0, 20_000),
        Err(Error::NoBoundState { .. })
    ));
    let e = ground_state(&well(threshold + 0.05), 3, 400.0, 20_000).unwrap();
    assert!(e.negative);
}

#[test]
fn slowly_decaying_attractive_potential_binds() {
    let v = PotentialSpec::PowerTail { v0: 1.0, kappa: 1.5, negative: true };
    let e = ground_state(&v, 3, 200.0, 8000).unwrap();
    assert!(e.negative && e.eigenvalue < 0.0);
}

#[test]
fn coupling_sweep_gains_a_bound_state() {
    let rows = coupling_sweep(&well(1.0), 3, 60.0, 6000, &[0.5, 1.5, 4.0, 8.0]).unwrap();
    assert!(rows[0].1.is_none() && rows[1].1.is_none());
    let (l3, l4) = (rows[2].1.unwrap(), rows[3].1.unwrap());
    assert!(l4 < l3 && l3 < 0.0);
}

#[test]
fn hypotheses_are_enforced() {
    let v = well(10.0);
    let chi = ground_state(&v, 3, 12.0, 2000).unwrap();
    let psi = bump_profile(1.5, 0.5, 1e-3).unwrap();
    let zero = RadialProfile::zero();
    let cfg = FdConfig { dr: 0.01, r_max: 20.0, ..Default::default() };
    let run = |v: &PotentialSpec, phi: &RadialProfile, psi: &RadialProfile| {
        eigen_blowup_run(v, &chi, phi, psi, 1.0, 2.0, &cfg, 5.0)
    };
    assert!(matches!(run(&well(9.0), &zero, &psi), Err(Error::Hypothesis(_))));
    assert!(matches!(run(&v, &zero, &zero), Err(Error::Hypothesis(_))));
    let negative = bump_profile(1.5, 0.5, -1e-3).unwrap();
    assert!(matches!(run(&v, &zero, &negative), Err(Error::Hypothesis(_))));
}

#[test]
fn linear_limit_follows_the_ground_mode() {
    let v = well(10.0);
    let chi = ground_state(&v, 3, 12.0, 2000).unwrap();
    let gamma = (-chi.eigenvalue).sqrt();
    let eps = 1e-3;
    let psi = bump_profile(1.5, 0.5, eps).unwrap();
    let cfg = FdConfig { dr: 0.01, r_max: 20.0, ..Default::default() };
    let run = eigen_blowup_run(&v, &chi, &RadialProfile::zero(), &psi, 1e-12, 2.0, &cfg, 8.0).unwrap();
    assert!(run.detected_t.is_none());
    // f'' = γ² f with f(0) = 0 gives f = f'(0) sinh(γt)/γ.
    let traj = &run.trajectory;
    let (t1, f1) = (traj[1].t, traj[1].f);
    let fp0 = f1 / t1;
    let ratio = |t: f64| {
        let p = traj.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs())).unwrap();
        p.f * (-gamma * p.t).exp()
    };
    let (r6, r8) = (ratio(6.0), ratio(8.0));
    assert!((r8 - r6).abs() < 1e-3 * r8, "{r6} vs {r8}");
    let expect = fp0 / (2.0 * gamma);
    assert!((r8 - expect).abs() < 1e-2 * expect, "{r8} vs {expect}");
}

#[test]
fn small_bump_blows_up_with_convex_functional() {
    let v = well(10.0);
    let chi = ground_state(&v, 3, 12.0, 2000).unwrap();
    let psi = bump_profile(1.5, 0.5, 1e-3).unwrap();
    let cfg = FdConfig { dr: 0.01, r_max: 40.0, ..Default::default() };
    let run = eigen_blowup_run(&v, &chi, &RadialProfile::zero(), &psi, 1.0, 2.0, &cfg, 30.0).unwrap();
    assert!(run.detected_t.is_some());
    let c = run.checks;
    assert!(c.f_positive && c.f_increasing && c.convex && c.inequality_holds && c.holder_holds);
}
