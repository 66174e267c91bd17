use proptest::prelude::*;
use radiant_core::kernels::{positivity_constants, u_kernel};
use radiant_core::problem::{bump_profile, smooth_bump};
use radiant_core::{apply_riemann, homogeneous_solution, DimensionParams, Extrapolation};
use radiant_core::{QuadratureSpec, RadialProfile};

fn dims(n: u32) -> DimensionParams {
    DimensionParams::new(n).unwrap()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|i| f(a + h * (i as f64 + 0.5))).sum::<f64>() * h
}

fn z(l: f64, r: f64, t: f64) -> f64 {
    (l * l + r * r - t * t) / (2.0 * r * l)
}

#[test]
fn four_dimensions_outside_the_cone_matches_direct_quadrature() {
    // f(λ) = λ at (r, t) = (2, 1): only the outer integral over [1, 3].
    let f = RadialProfile::from_fn(1e-3, 10.0, 2001, |l| l, |_| 1.0, Extrapolation::ZeroBeyondSupport)
        .unwrap();
    let (r, t) = (2.0, 1.0);
    let q = QuadratureSpec::default().with_tol(1e-10);
    let v = apply_riemann(&f, &dims(4), r, t, &q).unwrap();
    let g = |l: f64| l.powf(1.5) * l * u_kernel(1, z(l, r, t)).unwrap();
    let oracle = 0.5 * r.powf(-1.5) * simpson(g, 1.0, 3.0, 100_000);
    assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
}

#[test]
fn four_dimensions_inside_the_cone_matches_graded_quadrature() {
    let (c, w) = (2.0, 1.5);
    let f = bump_profile(c, w, 1.0).unwrap();
    let (r, t) = (1.0, 2.5);
    let s0 = t - r;
    let q = QuadratureSpec::default().with_tol(1e-10);
    let v = apply_riemann(&f, &dims(4), r, t, &q).unwrap();
    let g = |l: f64| {
        let b = smooth_bump((l - c) / w);
        if b == 0.0 {
            0.0
        } else {
            l.powf(1.5) * b * u_kernel(1, z(l, r, t)).unwrap()
        }
    };
    // Both integrals meet at the log singularity λ = t − r; λ = s0 ± L u².
    let below = midpoint(|u| 2.0 * s0 * u * g(s0 - s0 * u * u), 0.0, 1.0, 100_000);
    let len = c + w - s0;
    let above = midpoint(|u| 2.0 * len * u * g(s0 + len * u * u), 0.0, 1.0, 100_000);
    let oracle = 0.5 * r.powf(-1.5) * (below + above);
    assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
}

#[test]
fn three_dimensions_matches_dalembert() {
    let phi = bump_profile(3.0, 1.0, 0.5).unwrap();
    let psi = bump_profile(3.2, 0.8, 1.0).unwrap();
    let phi_f = |s: f64| 0.5 * smooth_bump((s - 3.0) / 1.0);
    let psi_f = |s: f64| smooth_bump((s - 3.2) / 0.8);
    let q = QuadratureSpec::default().with_tol(1e-9);
    for &(r, t) in &[(3.0, 0.5), (1.0, 2.5), (4.5, 1.2)] {
        let v = homogeneous_solution(&phi, &psi, &dims(3), r, t, &q).unwrap();
        // r u = ½[(r+t)φ(r+t) + (r−t)φ(|r−t|)] + ½∫_{r−t}^{r+t} s ψ(|s|) ds.
        let pos = 0.5 * ((r + t) * phi_f(r + t) + (r - t) * phi_f((r - t).abs()));
        let vel = 0.5 * simpson(|s| s * psi_f(s.abs()), r - t, r + t, 20_000);
        let oracle = (pos + vel) / r;
        assert!((v - oracle).abs() < 1e-6, "({r},{t}): {v} vs {oracle}");
    }
}

#[test]
fn constant_velocity_gives_t_in_every_dimension() {
    let one = RadialProfile::constant(1.0);
    let q = QuadratureSpec::default().with_tol(1e-10);
    for n in 2..=7 {
        for &(r, t) in &[(0.5, 0.3), (1.0, 2.0), (3.0, 1.0), (0.2, 4.0)] {
            let v = apply_riemann(&one, &dims(n), r, t, &q).unwrap();
            assert!((v - t).abs() < 1e-7, "n = {n} ({r},{t}): {v}");
        }
    }
}

#[test]
fn constant_position_is_stationary() {
    let one = RadialProfile::constant(1.0);
    let q = QuadratureSpec::default().with_tol(1e-8);
    for n in [3, 4, 5] {
        for &(r, t) in &[(1.0, 0.5), (0.5, 2.0)] {
            let v = homogeneous_solution(&one, &RadialProfile::zero(), &dims(n), r, t, &q).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "n = {n} ({r},{t}): {v}");
        }
    }
}

#[test]
fn initial_values() {
    let phi = bump_profile(2.0, 1.0, 0.7).unwrap();
    let psi = bump_profile(2.0, 1.0, 1.0).unwrap();
    let q = QuadratureSpec::default();
    for n in [3, 4, 6] {
        let v = homogeneous_solution(&phi, &psi, &dims(n), 2.3, 0.0, &q).unwrap();
        assert!((v - phi.eval(2.3)).abs() < 1e-12);
        assert_eq!(apply_riemann(&psi, &dims(n), 2.3, 0.0, &q).unwrap(), 0.0);
    }
}

#[test]
fn finite_speed_and_huygens() {
    let psi = bump_profile(3.0, 1.0, 1.0).unwrap();
    let q = QuadratureSpec::default();
    for n in 2..=7 {
        // Outside the union of light cones over [2, 4].
        assert_eq!(apply_riemann(&psi, &dims(n), 0.5, 1.0, &q).unwrap(), 0.0);
        assert_eq!(apply_riemann(&psi, &dims(n), 7.0, 2.5, &q).unwrap(), 0.0);
    }
    for n in [3, 5, 7] {
        // Sharp rear front in odd dimensions: t − r ≥ 4.
        assert_eq!(apply_riemann(&psi, &dims(n), 1.0, 6.0, &q).unwrap(), 0.0);
    }
    // Even dimensions keep a tail behind the front.
    assert!(apply_riemann(&psi, &dims(4), 1.0, 6.0, &q).unwrap().abs() > 1e-6);
}

#[test]
fn invalid_points_are_rejected() {
    let psi = bump_profile(3.0, 1.0, 1.0).unwrap();
    let q = QuadratureSpec::default();
    assert!(apply_riemann(&psi, &dims(4), 0.0, 1.0, &q).is_err());
    assert!(apply_riemann(&psi, &dims(4), 1.0, -0.1, &q).is_err());
    assert!(apply_riemann(&psi, &dims(1), 1.0, 1.0, &q).is_err());
    assert!(apply_riemann(&psi, &dims(4), 1.0, 1.0, &q.with_tol(0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn propagator_is_linear(
        n in 3u32..6,
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
        r in 0.1f64..5.0,
        t in 0.0f64..4.0,
    ) {
        let f = bump_profile(2.0, 1.0, 1.0).unwrap();
        let g = bump_profile(3.0, 0.5, 1.0).unwrap();
        let h = f.combine(alpha, &g, beta).unwrap();
        let q = QuadratureSpec::default().with_tol(1e-11);
        let d = dims(n);
        let lhs = apply_riemann(&h, &d, r, t, &q).unwrap();
        let rhs = alpha * apply_riemann(&f, &d, r, t, &q).unwrap()
            + beta * apply_riemann(&g, &d, r, t, &q).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn positivity_cone(
        n in 3u32..5,
        center in 1.5f64..3.0,
        width in 0.2f64..1.0,
        t in 0.0f64..5.0,
        gap in 0.0f64..3.0,
    ) {
        let f = bump_profile(center + width, width, 1.0).unwrap();
        let big_r = center;
        let beta = positivity_constants(n, 1e-12).unwrap().beta_n;
        let r = (beta * t).max(t + big_r) + 1e-6 + gap;
        let v = apply_riemann(&f, &dims(n), r, t, &QuadratureSpec::default()).unwrap();
        prop_assert!(v >= -1e-9, "L f = {} at ({}, {})", v, r, t);
    }
}
