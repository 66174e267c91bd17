//! Leapfrog finite-difference solver for the radial semilinear wave equation.
//!
//! The Laplacian is discretised in conservative finite-volume form on the
//! nodes `r_i = i·dr`:
//!
//! ```text
//! Δu_i ≈ [ρ_{i+½}(u_{i+1} − u_i) − ρ_{i−½}(u_i − u_{i−1})] / (w_i dr²)
//! ```
//!
//! with `ρ = r^{n−1}` at cell faces and `w_i` the measure of cell `i` divided
//! by `dr`. At the axis the left flux vanishes, which reproduces the ghost-point
//! rule `Δu(0) ≈ 2n (u_1 − u_0)/dr²`. The operator is symmetric in the
//! `w`-weighted inner product, so the linear scheme has an exactly conserved
//! discrete energy.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::SpacetimeField;
use crate::problem::ProblemSpec;

/// Treatment of the outer boundary node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryRule {
    /// First-order characteristic outflow `u_t + u_r + (n−1)u/(2r) = 0`.
    Outflow,
    /// `u = 0`; relies on `r_max` exceeding the reach of the solution.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdConfig {
    pub dr: f64,
    /// `dt = cfl · dr`.
    pub cfl: f64,
    pub r_max: f64,
    pub boundary: BoundaryRule,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            dr: 0.01,
            cfl: 0.5,
            r_max: 20.0,
            boundary: BoundaryRule::Outflow,
        }
    }
}

/// Sup-norm level that counts as blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

impl FdConfig {
    pub fn validate(&self, horizon: f64) -> Result<()> {
        if !(self.dr > 0.0) {
            return Err(invalid("dr", "must be positive"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(invalid("cfl", "must lie in (0, 0.9]"));
        }
        if !(self.r_max > horizon) {
            return Err(invalid("r_max", "must exceed the time horizon"));
        }
        if self.r_max / self.dr < 10.0 {
            return Err(invalid("dr", "grid needs at least 10 cells"));
        }
        Ok(())
    }
}

/// Nodes and finite-volume coefficients.
#[derive(Debug, Clone)]
pub struct FdGrid {
    pub r: Vec<f64>,
    /// Cell measure over `dr` (`∫ g r^{n−1} dr ≈ Σ w_i g_i dr`).
    pub weights: Vec<f64>,
    /// Face areas `ρ_{i+½}`.
    pub faces: Vec<f64>,
    pub dr: f64,
    pub n: u32,
}

impl FdGrid {
    pub fn new(n: u32, dr: f64, r_max: f64) -> Self {
        let count = (r_max / dr).round() as usize + 1;
        let nf = n as f64;
        let r: Vec<f64> = (0..count).map(|i| i as f64 * dr).collect();
        let half = 0.5 * dr;
        let weights = r
            .iter()
            .map(|&ri| {
                let lo = (ri - half).max(0.0);
                ((ri + half).powf(nf) - lo.powf(nf)) / (nf * dr)
            })
            .collect();
        let faces = r[..count - 1]
            .iter()
            .map(|&ri| (ri + half).powf(nf - 1.0))
            .collect();
        Self {
            r,
            weights,
            faces,
            dr,
            n,
        }
    }

    /// `∫ g u r^{n−1} dr` in the discrete inner product.
    pub fn integrate(&self, g: impl Fn(usize) -> f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * g(i))
            .sum::<f64>()
            * self.dr
    }

    fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        let last = u.len() - 1;
        let inv = 1.0 / (self.dr * self.dr);
        for i in 0..last {
            let right = self.faces[i] * (u[i + 1] - u[i]);
            let left = if i > 0 {
                self.faces[i - 1] * (u[i] - u[i - 1])
            } else {
                0.0
            };
            out[i] = (right - left) * inv / self.weights[i];
        }
        out[last] = 0.0;
    }

    /// Kinetic part `½‖(u¹ − u⁰)/dt‖²` and potential part `½(u¹, A u⁰)` of the
    /// energy conserved by the linear scheme. Past the CFL limit the sum is
    /// still conserved while both parts grow, so growth is judged on their
    /// absolute values.
    pub fn energy_parts(&self, u_new: &[f64], u_old: &[f64], dt: f64) -> (f64, f64) {
        let mut kinetic = 0.0;
        for i in 0..u_new.len() {
            let v = (u_new[i] - u_old[i]) / dt;
            kinetic += self.weights[i] * v * v;
        }
        let mut potential = 0.0;
        for i in 0..self.faces.len() {
            potential += self.faces[i] * (u_new[i + 1] - u_new[i]) * (u_old[i + 1] - u_old[i]);
        }
        (0.5 * kinetic * self.dr, 0.5 * potential / self.dr)
    }

    fn energy_size(&self, u_new: &[f64], u_old: &[f64], dt: f64) -> f64 {
        let (k, p) = self.energy_parts(u_new, u_old, dt);
        k + p.abs()
    }
}

/// State handed to a monitor after each step.
pub struct StepView<'a> {
    pub t: f64,
    pub dt: f64,
    pub u: &'a [f64],
    pub grid: &'a FdGrid,
    /// Sup of |u| over the nodes not yet reached by boundary effects.
    pub sup: f64,
}

#[derive(Debug, Clone)]
pub struct FdRun {
    /// Interpolated snapshots at the observer times reached.
    pub snapshots: Option<SpacetimeField>,
    pub blowup_time: Option<f64>,
    pub final_time: f64,
    pub sup_history: Vec<(f64, f64)>,
}

pub fn solve_fd(
    prob: &ProblemSpec,
    cfg: &FdConfig,
    horizon: f64,
    observers: &[f64],
) -> Result<FdRun> {
    solve_fd_with(prob, cfg, horizon, observers, |_| {})
}

/// [`solve_fd`] with a callback invoked after every time step.
pub fn solve_fd_with(
    prob: &ProblemSpec,
    cfg: &FdConfig,
    horizon: f64,
    observers: &[f64],
    mut monitor: impl FnMut(&StepView),
) -> Result<FdRun> {
    prob.validate()?;
    cfg.validate(horizon)?;
    let mut obs: Vec<f64> = observers.iter().copied().filter(|&t| t <= horizon).collect();
    if obs.iter().any(|t| !(*t >= 0.0)) {
        return Err(invalid("observers", "observer times must be non-negative"));
    }
    obs.sort_by(f64::total_cmp);
    obs.dedup();

    let grid = FdGrid::new(prob.dims.n, cfg.dr, cfg.r_max);
    let nodes = grid.r.len();
    let steps = (horizon / (cfg.cfl * cfg.dr)).ceil() as usize;
    let dt = horizon / steps as f64;
    let half = 0.5 * cfg.dr;
    let potential: Vec<f64> = grid
        .r
        .iter()
        .map(|&r| prob.potential.cell_average((r - half).max(0.0), r + half))
        .collect();
    let linear_free = prob.nonlinearity.is_zero() && prob.potential.is_zero();
    let nf = prob.dims.n as f64;

    let rhs = |u: &[f64], lap: &mut Vec<f64>| {
        grid.laplacian(u, lap);
        for i in 0..nodes {
            lap[i] += prob.nonlinearity.eval(u[i]) - potential[i] * u[i];
        }
    };
    let boundary = |next: &mut [f64], cur: &[f64], step_dt: f64| {
        let last = nodes - 1;
        next[last] = match cfg.boundary {
            BoundaryRule::Dirichlet => 0.0,
            BoundaryRule::Outflow => {
                let r = grid.r[last];
                cur[last]
                    - step_dt / cfg.dr * (cur[last] - cur[last - 1])
                    - step_dt * (nf - 1.0) / (2.0 * r) * cur[last]
            }
        };
    };
    let sup_valid = |u: &[f64], t: f64| -> f64 {
        let reach = cfg.r_max - t;
        let mut s = 0.0f64;
        for (i, &r) in grid.r.iter().enumerate() {
            if r > reach {
                break;
            }
            let a = u[i].abs();
            if a.is_nan() {
                return f64::INFINITY;
            }
            s = s.max(a);
        }
        s
    };

    let mut prev: Vec<f64> = grid.r.iter().map(|&r| prob.phi.eval(r)).collect();
    if cfg.boundary == BoundaryRule::Dirichlet {
        prev[nodes - 1] = 0.0;
    }
    let mut lap = vec![0.0; nodes];
    rhs(&prev, &mut lap);
    let mut cur: Vec<f64> = (0..nodes)
        .map(|i| prev[i] + dt * prob.psi.eval(grid.r[i]) + 0.5 * dt * dt * lap[i])
        .collect();
    boundary(&mut cur, &prev, dt);
    let mut older: Option<Vec<f64>> = None;

    let mut snaps: Vec<(f64, Vec<f64>)> = Vec::with_capacity(obs.len());
    let mut next_obs = 0;
    while next_obs < obs.len() && obs[next_obs] == 0.0 {
        snaps.push((0.0, prev.clone()));
        next_obs += 1;
    }
    let e0 = if linear_free {
        grid.energy_size(&cur, &prev, dt)
    } else {
        0.0
    };
    let mut sup_history = vec![(0.0, sup_valid(&prev, 0.0))];
    let mut blowup_time = None;
    let mut t = dt;
    let mut next = vec![0.0; nodes];
    let mut step = 1;
    loop {
        // `cur` holds time t = step·dt.
        while next_obs < obs.len() && obs[next_obs] <= t + 1e-12 * horizon {
            let to = obs[next_obs];
            let t_prev = t - dt;
            let snap = match &older {
                Some(o) => {
                    let t0 = t - 2.0 * dt;
                    (0..nodes)
                        .map(|i| lagrange3(to, [t0, t_prev, t], [o[i], prev[i], cur[i]]))
                        .collect()
                }
                None => {
                    let w = (to - t_prev) / dt;
                    (0..nodes).map(|i| (1.0 - w) * prev[i] + w * cur[i]).collect()
                }
            };
            snaps.push((to, snap));
            next_obs += 1;
        }
        let sup = sup_valid(&cur, t);
        sup_history.push((t, sup));
        monitor(&StepView {
            t,
            dt,
            u: &cur,
            grid: &grid,
            sup,
        });
        if linear_free && e0 > 0.0 {
            let e = grid.energy_size(&cur, &prev, dt);
            let growth = e.abs() / e0;
            if growth > 10.0 {
                return Err(Error::Instability { time: t, growth });
            }
        }
        if !(sup <= BLOWUP_THRESHOLD) {
            blowup_time = Some(t);
            break;
        }
        if step >= steps {
            break;
        }
        rhs(&cur, &mut lap);
        for i in 0..nodes {
            next[i] = 2.0 * cur[i] - prev[i] + dt * dt * lap[i];
        }
        boundary(&mut next, &cur, dt);
        let recycled = older.take().unwrap_or_else(|| vec![0.0; nodes]);
        older = Some(std::mem::replace(&mut prev, std::mem::replace(&mut cur, std::mem::replace(&mut next, recycled))));
        step += 1;
        t = step as f64 * dt;
    }

    let snapshots = if snaps.is_empty() {
        None
    } else {
        let times: Vec<f64> = snaps.iter().map(|(t, _)| *t).collect();
        let values: Vec<f64> = snaps.into_iter().flat_map(|(_, v)| v).collect();
        Some(SpacetimeField::new(grid.r.clone(), times, values)?.with_valid_radius(cfg.r_max))
    };
    Ok(FdRun {
        snapshots,
        blowup_time,
        final_time: t,
        sup_history,
    })
}

fn lagrange3(x: f64, t: [f64; 3], y: [f64; 3]) -> f64 {
    let l0 = (x - t[1]) * (x - t[2]) / ((t[0] - t[1]) * (t[0] - t[2]));
    let l1 = (x - t[0]) * (x - t[2]) / ((t[1] - t[0]) * (t[1] - t[2]));
    let l2 = (x - t[0]) * (x - t[1]) / ((t[2] - t[0]) * (t[2] - t[1]));
    l0 * y[0] + l1 * y[1] + l2 * y[2]
}
