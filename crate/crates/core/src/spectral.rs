//! Ground states of the radial Schrödinger operator `−Δ + V` and blow-up
//! runs driven by a negative eigenvalue.
//!
//! With `w = r^{(n−1)/2} u` the radial operator becomes
//! `−w'' + [V + (n−1)(n−3)/(4r²)] w` with `w(0) = 0` (n ≥ 2), discretised by
//! central differences on a uniform mesh with a Dirichlet wall at `r_max`.
//! For `n = 1` the even reflection gives a Neumann row at the origin.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fd::{solve_fd_with, FdConfig};
use crate::kernels::DimensionParams;
use crate::problem::{Nonlinearity, PotentialSpec, ProblemSpec};
use crate::profile::{Extrapolation, RadialProfile};

/// Eigenvalues at or above this count as the continuum edge.
pub const CONTINUUM_EDGE: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshRecord {
    pub r_max: f64,
    pub nodes: usize,
    pub step: f64,
    /// Eigenvalue on the mesh with half as many nodes.
    pub coarse_eigenvalue: f64,
    /// `|V(r_max)| / max |V|` over the mesh.
    pub tail_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub eigenvalue: f64,
    /// `χ(r)`, positive, with `∫ χ² r^{n−1} dr = 1`.
    #[serde(skip)]
    pub eigenfunction: RadialProfile,
    /// Fitted exponential rate of the tail of `r^{(n−1)/2} χ`.
    pub decay_rate: f64,
    /// Window of the decay fit.
    pub decay_window: (f64, f64),
    pub mesh: MeshRecord,
    pub negative: bool,
    /// Discrete Rayleigh quotient of the returned eigenvector.
    pub rayleigh_quotient: f64,
    pub n: u32,
    #[serde(skip)]
    pub potential: PotentialSpec,
}

/// Tridiagonal matrix with a diagonal mass `mass` that symmetrises it.
struct Tridiagonal {
    diag: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    mass: Vec<f64>,
}

impl Tridiagonal {
    fn len(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues below `x`.
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let coupling = if i == 0 {
                0.0
            } else {
                self.lower[i] * self.upper[i - 1]
            };
            q = self.diag[i] - x - if i == 0 { 0.0 } else { coupling / q };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn lowest_eigenvalue(&self) -> f64 {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let radius = self.lower[i].abs() + self.upper[i].abs();
            lo = lo.min(self.diag[i] - radius);
            hi = hi.max(self.diag[i] + radius);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T − σ) x = b` by the Thomas algorithm.
    fn solve_shifted(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0] - sigma;
        c[0] = self.upper[0] / denom;
        d[0] = b[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - sigma - self.lower[i] * c[i - 1];
            c[i] = if i + 1 < n { self.upper[i] / denom } else { 0.0 };
            d[i] = (b[i] - self.lower[i] * d[i - 1]) / denom;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }
}

struct Discrete {
    eigenvalue: f64,
    rayleigh: f64,
    radii: Vec<f64>,
    /// Values of `w`, normalised so that `Σ mass w² h = 1`.
    w: Vec<f64>,
}

fn discretize(v: &PotentialSpec, n: u32, r_max: f64, nodes: usize) -> Tridiagonal {
    let nf = n as f64;
    let centrifugal = (nf - 1.0) * (nf - 3.0) / 4.0;
    let (first, h) = if n == 1 {
        (0usize, r_max / nodes as f64)
    } else {
        (1usize, r_max / (nodes + 1) as f64)
    };
    let inv = 1.0 / (h * h);
    let mut diag = Vec::with_capacity(nodes);
    let mut lower = vec![-inv; nodes];
    let mut upper = vec![-inv; nodes];
    let mut mass = vec![1.0; nodes];
    for i in 0..nodes {
        let r = (first + i) as f64 * h;
        let va = v.cell_average((r - 0.5 * h).max(0.0), r + 0.5 * h);
        let cf = if r > 0.0 { centrifugal / (r * r) } else { 0.0 };
        diag.push(2.0 * inv + va + cf);
    }
    lower[0] = 0.0;
    upper[nodes - 1] = 0.0;
    if n == 1 {
        // Even reflection u(−h) = u(h).
        upper[0] = -2.0 * inv;
        mass[0] = 0.5;
    }
    Tridiagonal {
        diag,
        lower,
        upper,
        mass,
    }
}

fn solve_mesh(v: &PotentialSpec, n: u32, r_max: f64, nodes: usize) -> Discrete {
    let t = discretize(v, n, r_max, nodes);
    let h = if n == 1 {
        r_max / nodes as f64
    } else {
        r_max / (nodes + 1) as f64
    };
    let first = if n == 1 { 0 } else { 1 };
    let lambda = t.lowest_eigenvalue();
    let scale = t.diag.iter().fold(0.0f64, |a, d| a.max(d.abs())) + lambda.abs();
    let sigma = lambda - 1e-11 * scale;
    let mut x = vec![1.0; nodes];
    for _ in 0..6 {
        x = t.solve_shifted(sigma, &x);
        let norm = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        x.iter_mut().for_each(|v| *v /= norm);
    }
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let mass_norm: f64 = x.iter().zip(&t.mass).map(|(v, m)| m * v * v).sum::<f64>() * h;
    let s = mass_norm.sqrt();
    x.iter_mut().for_each(|v| *v /= s);
    // The mass-weighted operator is symmetric, so this is a true Rayleigh quotient.
    let tx = t.apply(&x);
    let num: f64 = x.iter().zip(&tx).zip(&t.mass).map(|((a, b), m)| m * a * b).sum();
    let den: f64 = x.iter().zip(&t.mass).map(|(a, m)| m * a * a).sum();
    Discrete {
        eigenvalue: lambda,
        rayleigh: num / den,
        radii: (0..nodes).map(|i| (first + i) as f64 * h).collect(),
        w: x,
    }
}

/// Lowest eigenpair of `−Δ + V` on radial functions in the ball of radius
/// `r_max`, computed on `2 · mesh_size` nodes and checked against `mesh_size`.
pub fn ground_state(v: &PotentialSpec, n: u32, r_max: f64, mesh_size: usize) -> Result<EigenPair> {
    DimensionParams::new(n)?;
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(invalid("r_max", "must be positive and finite"));
    }
    if mesh_size < 16 {
        return Err(invalid("mesh_size", "need at least 16 nodes"));
    }
    let fine = solve_mesh(v, n, r_max, 2 * mesh_size);
    if fine.eigenvalue >= CONTINUUM_EDGE {
        return Err(Error::NoBoundState {
            lowest: fine.eigenvalue,
        });
    }
    let coarse = solve_mesh(v, n, r_max, mesh_size);
    if (coarse.eigenvalue - fine.eigenvalue).abs() > 0.01 * fine.eigenvalue.abs() {
        return Err(Error::MeshTooCoarse {
            coarse: coarse.eigenvalue,
            fine: fine.eigenvalue,
        });
    }
    let vmax = fine
        .radii
        .iter()
        .map(|&r| v.eval(r).abs())
        .fold(0.0, f64::max);
    let tail_ratio = if vmax > 0.0 {
        v.eval(r_max).abs() / vmax
    } else {
        0.0
    };

    let half = 0.5 * (n as f64 - 1.0);
    let mut points = Vec::with_capacity(fine.w.len());
    let mut values = Vec::with_capacity(fine.w.len());
    for (&r, &w) in fine.radii.iter().zip(&fine.w) {
        if r > 0.0 {
            points.push(r);
            values.push(w / r.powf(half));
        }
    }
    let eigenfunction =
        RadialProfile::new(points, values, None, Extrapolation::ZeroBeyondSupport, 2)?;

    let window = (0.5 * r_max, 0.75 * r_max);
    let wmax = fine.w.iter().fold(0.0f64, |a, b| a.max(*b));
    let (xs, ys): (Vec<f64>, Vec<f64>) = fine
        .radii
        .iter()
        .zip(&fine.w)
        .filter(|(r, w)| **r >= window.0 && **r <= window.1 && **w > 1e-290 * wmax)
        .map(|(r, w)| (*r, w.ln()))
        .unzip();
    let decay_rate = if xs.len() >= 2 {
        -crate::blowup::fit_slope(&xs, &ys)
    } else {
        f64::NAN
    };

    let step = fine.radii[1] - fine.radii[0];
    Ok(EigenPair {
        eigenvalue: fine.eigenvalue,
        eigenfunction,
        decay_rate,
        decay_window: window,
        mesh: MeshRecord {
            r_max,
            nodes: fine.w.len(),
            step,
            coarse_eigenvalue: coarse.eigenvalue,
            tail_ratio,
        },
        negative: true,
        rayleigh_quotient: fine.rayleigh,
        n,
        potential: v.clone(),
    })
}

/// Lowest eigenvalue of `−Δ + aV` for each coupling `a` (`None`: no bound state).
pub fn coupling_sweep(
    v: &PotentialSpec,
    n: u32,
    r_max: f64,
    mesh_size: usize,
    couplings: &[f64],
) -> Result<Vec<(f64, Option<f64>)>> {
    couplings
        .iter()
        .map(|&a| match ground_state(&v.scaled(a)?, n, r_max, mesh_size) {
            Ok(pair) => Ok((a, Some(pair.eigenvalue))),
            Err(Error::NoBoundState { .. }) => Ok((a, None)),
            Err(e) => Err(e),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// `∫ χ u r^{n−1} dr`.
    pub f: f64,
    pub sup: f64,
    /// `∫ χ |u|^p r^{n−1} dr`.
    pub chi_power: f64,
}

/// Outcome of the checks along an eigenfunction blow-up run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryChecks {
    pub f_positive: bool,
    pub f_increasing: bool,
    pub convex: bool,
    /// Largest relative shortfall of `f'' − (−λ) f − c f^p` below zero.
    pub inequality_violation: f64,
    pub inequality_holds: bool,
    pub holder_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenBlowupRun {
    pub trajectory: Vec<TrajectoryPoint>,
    pub detected_t: Option<f64>,
    /// `−eigenvalue`.
    pub growth_rate_squared: f64,
    /// `A (∫ χ r^{n−1} dr)^{−(p−1)}`.
    pub ode_constant: f64,
    pub chi_integral: f64,
    pub checks: TrajectoryChecks,
}

/// Relative tolerance of the differential inequality check.
pub const INEQUALITY_RTOL: f64 = 1e-2;

/// Evolves `u_tt − Δu + Vu = A|u|^p` with data `(φ, ψ)` and tracks
/// `f(t) = ∫ χ u r^{n−1} dr` for the ground state `χ` of `−Δ + V`.
#[allow(clippy::too_many_arguments)]
pub fn eigen_blowup_run(
    v: &PotentialSpec,
    chi: &EigenPair,
    phi: &RadialProfile,
    psi: &RadialProfile,
    amplitude: f64,
    p: f64,
    cfg: &FdConfig,
    horizon: f64,
) -> Result<EigenBlowupRun> {
    if chi.potential != *v {
        return Err(Error::Hypothesis(
            "eigenpair was not computed for this potential".into(),
        ));
    }
    if !(chi.eigenvalue < 0.0) {
        return Err(Error::Hypothesis("eigenvalue must be negative".into()));
    }
    if phi.values().iter().any(|x| *x < 0.0) || psi.values().iter().any(|x| *x < 0.0) {
        return Err(Error::Hypothesis("data must be non-negative".into()));
    }
    if psi.is_zero() || psi.values().iter().all(|x| *x == 0.0) {
        return Err(Error::Hypothesis("velocity datum must not vanish".into()));
    }
    let mut prob = ProblemSpec::free(chi.n)?;
    prob.nonlinearity = Nonlinearity::Power { amplitude, p };
    prob.potential = v.clone();
    prob.phi = phi.clone();
    prob.psi = psi.clone();
    prob.horizon = horizon;
    prob.validate()?;

    let mut chi_grid: Vec<f64> = Vec::new();
    let mut chi_integral = 0.0;
    let mut trajectory = Vec::new();
    let run = solve_fd_with(&prob, cfg, horizon, &[], |view| {
        if chi_grid.is_empty() {
            chi_grid = view.grid.r.iter().map(|&r| chi.eigenfunction.eval(r)).collect();
            chi_integral = view.grid.integrate(|i| chi_grid[i]);
            let f0 = view.grid.integrate(|i| chi_grid[i] * phi.eval(view.grid.r[i]));
            let c0 = view
                .grid
                .integrate(|i| chi_grid[i] * phi.eval(view.grid.r[i]).abs().powf(p));
            trajectory.push(TrajectoryPoint {
                t: 0.0,
                f: f0,
                sup: 0.0,
                chi_power: c0,
            });
        }
        let f = view.grid.integrate(|i| chi_grid[i] * view.u[i]);
        let chi_power = view.grid.integrate(|i| chi_grid[i] * view.u[i].abs().powf(p));
        trajectory.push(TrajectoryPoint {
            t: view.t,
            f,
            sup: view.sup,
            chi_power,
        })
    })?;

    let lam = -chi.eigenvalue;
    let c = amplitude * chi_integral.powf(-(p - 1.0));
    let checks = check_trajectory(&trajectory, lam, c, chi_integral, p);
    Ok(EigenBlowupRun {
        trajectory,
        detected_t: run.blowup_time,
        growth_rate_squared: lam,
        ode_constant: c,
        chi_integral,
        checks,
    })
}

fn check_trajectory(
    traj: &[TrajectoryPoint],
    lam: f64,
    c: f64,
    chi_integral: f64,
    p: f64,
) -> TrajectoryChecks {
    let f_positive = traj.iter().skip(1).all(|q| q.f > 0.0);
    let f_increasing = traj.windows(2).all(|w| w[1].f > w[0].f);
    let mut convex = true;
    let mut violation = 0.0f64;
    for w in traj.windows(3) {
        let dt = w[1].t - w[0].t;
        let second = w[2].f - 2.0 * w[1].f + w[0].f;
        let scale = w[0].f.abs().max(w[1].f.abs()).max(w[2].f.abs());
        if second < -1e-6 * scale {
            convex = false;
        }
        let fpp = second / (dt * dt);
        let f = w[1].f;
        let rhs = lam * f + c * f.abs().powf(p);
        let size = fpp.abs() + lam * f.abs() + c * f.abs().powf(p);
        if size > 0.0 {
            violation = violation.max((rhs - fpp) / size);
        }
    }
    let holder_holds = traj.iter().all(|q| {
        let bound = chi_integral.powf(-(p - 1.0)) * q.f.abs().powf(p);
        q.chi_power >= bound * (1.0 - 1e-12)
    });
    TrajectoryChecks {
        f_positive,
        f_increasing,
        convex,
        inequality_violation: violation,
        inequality_holds: violation <= INEQUALITY_RTOL,
        holder_holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_operator_has_no_bound_state() {
        let r = ground_state(&PotentialSpec::Zero, 3, 20.0, 200);
        assert!(matches!(r, Err(Error::NoBoundState { .. })), "{r:?}");
    }

    #[test]
    fn harmonic_box_levels() {
        // V = −2 throughout a ball of radius π, whose lowest Dirichlet level is 1.
        let v = PotentialSpec::SquareWell {
            depth: 2.0,
            radius: 10.0,
        };
        let e = ground_state(&v, 3, std::f64::consts::PI, 400).unwrap();
        assert!((e.eigenvalue + 1.0).abs() < 1e-4, "{}", e.eigenvalue);
        assert!((e.rayleigh_quotient - e.eigenvalue).abs() < 1e-8);
    }
}
