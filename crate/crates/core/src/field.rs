//! Tabulated spacetime fields `u(r, t)` with C¹ bicubic interpolation.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::profile::{hermite, hermite_derivative, three_point_slopes};

/// Values of a radial field on a tensor grid `t_grid × r_grid`.
///
/// Tables are stored row-major by time: entry `(i, j)` is `(t_i, r_j)`.
/// The `r`-derivative table is either supplied or taken from three-point
/// differences; time derivatives for interpolation are always differenced.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeField {
    r_grid: Vec<f64>,
    t_grid: Vec<f64>,
    values: Vec<f64>,
    r_derivative: Vec<f64>,
    t_derivative: Vec<f64>,
    rt_derivative: Vec<f64>,
    /// Nodes with `r + t` above this radius are outside the region the
    /// producer could resolve (`None`: every node is valid).
    valid_radius: Option<f64>,
    /// Exponent `e` of the extrapolation `u(r) = u(r_min) (r/r_min)^e` below
    /// the first radius.
    origin_exponent: f64,
}

impl SpacetimeField {
    pub fn new(r_grid: Vec<f64>, t_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::build(r_grid, t_grid, values, None)
    }

    pub fn with_r_derivative(
        r_grid: Vec<f64>,
        t_grid: Vec<f64>,
        values: Vec<f64>,
        r_derivative: Vec<f64>,
    ) -> Result<Self> {
        Self::build(r_grid, t_grid, values, Some(r_derivative))
    }

    /// Samples `f(r, t)` on the grid.
    pub fn from_fn(
        r_grid: Vec<f64>,
        t_grid: Vec<f64>,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(r_grid.len() * t_grid.len());
        for &t in &t_grid {
            for &r in &r_grid {
                values.push(f(r, t));
            }
        }
        Self::new(r_grid, t_grid, values)
    }

    fn build(
        r_grid: Vec<f64>,
        t_grid: Vec<f64>,
        values: Vec<f64>,
        r_derivative: Option<Vec<f64>>,
    ) -> Result<Self> {
        let (nr, nt) = (r_grid.len(), t_grid.len());
        if nr < 3 || nt < 1 {
            return Err(invalid("grid", "need at least 3 radii and 1 time"));
        }
        for g in [&r_grid, &t_grid] {
            if g.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid("grid", "grids must be strictly increasing"));
            }
        }
        if r_grid[0] < 0.0 {
            return Err(invalid("r_grid", "radii must be non-negative"));
        }
        if values.len() != nr * nt {
            return Err(invalid("values", "table size does not match the grids"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spacetime field values"));
        }
        let r_derivative = match r_derivative {
            Some(d) => {
                if d.len() != nr * nt {
                    return Err(invalid("r_derivative", "table size does not match the grids"));
                }
                d
            }
            None => {
                let mut d = vec![0.0; nr * nt];
                for i in 0..nt {
                    three_point_slopes(
                        &r_grid,
                        &values[i * nr..(i + 1) * nr],
                        &mut d[i * nr..(i + 1) * nr],
                    );
                }
                d
            }
        };
        let t_derivative = time_slopes(&t_grid, &values, nr);
        let rt_derivative = time_slopes(&t_grid, &r_derivative, nr);
        Ok(Self {
            r_grid,
            t_grid,
            values,
            r_derivative,
            t_derivative,
            rt_derivative,
            valid_radius: None,
            origin_exponent: 0.0,
        })
    }

    /// Marks nodes with `r + t > radius` as invalid.
    pub fn with_valid_radius(mut self, radius: f64) -> Self {
        self.valid_radius = Some(radius);
        self
    }

    pub fn with_origin_exponent(mut self, exponent: f64) -> Self {
        self.origin_exponent = exponent;
        self
    }

    pub fn r_grid(&self) -> &[f64] {
        &self.r_grid
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn nr(&self) -> usize {
        self.r_grid.len()
    }

    pub fn nt(&self) -> usize {
        self.t_grid.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn r_derivatives(&self) -> &[f64] {
        &self.r_derivative
    }

    pub fn valid_radius(&self) -> Option<f64> {
        self.valid_radius
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.r_grid.len() + j]
    }

    #[inline]
    pub fn r_derivative(&self, i: usize, j: usize) -> f64 {
        self.r_derivative[i * self.r_grid.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nr = self.r_grid.len();
        &self.values[i * nr..(i + 1) * nr]
    }

    pub fn row_derivative(&self, i: usize) -> &[f64] {
        let nr = self.r_grid.len();
        &self.r_derivative[i * nr..(i + 1) * nr]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        match self.valid_radius {
            None => true,
            Some(rad) => self.r_grid[j] + self.t_grid[i] <= rad * (1.0 + 1e-12),
        }
    }

    /// Bicubic Hermite interpolation; zero beyond the last radius and the
    /// power envelope below the first. `t` must lie within the time grid.
    pub fn eval(&self, r: f64, t: f64) -> f64 {
        self.eval_pair(r, t).0
    }

    /// Interpolated `(u, ∂_r u)`.
    pub fn eval_pair(&self, r: f64, t: f64) -> (f64, f64) {
        let (r0, r_last) = (self.r_grid[0], *self.r_grid.last().unwrap());
        if r > r_last {
            return (0.0, 0.0);
        }
        if r < r0 && r0 > 0.0 {
            let (u0, _) = self.eval_pair(r0, t);
            let e = self.origin_exponent;
            let u = u0 * (r / r0).powf(e);
            return (u, if r > 0.0 { e * u / r } else { 0.0 });
        }
        let r = r.max(r0);
        let nr = self.r_grid.len();
        let j = cell_index(&self.r_grid, r);
        let (ra, rb) = (self.r_grid[j], self.r_grid[j + 1]);
        let hr = rb - ra;
        let s = (r - ra) / hr;
        let (f_a, fr_a, f_b, fr_b) = if self.t_grid.len() == 1 {
            (
                self.values[j],
                self.r_derivative[j],
                self.values[j + 1],
                self.r_derivative[j + 1],
            )
        } else {
            let i = cell_index(&self.t_grid, t);
            let (ta, tb) = (self.t_grid[i], self.t_grid[i + 1]);
            let ht = tb - ta;
            let w = ((t - ta) / ht).clamp(0.0, 1.0);
            let at = |tab: &[f64], dtab: &[f64], col: usize| {
                hermite(
                    w,
                    ht,
                    tab[i * nr + col],
                    tab[(i + 1) * nr + col],
                    dtab[i * nr + col],
                    dtab[(i + 1) * nr + col],
                )
            };
            (
                at(&self.values, &self.t_derivative, j),
                at(&self.r_derivative, &self.rt_derivative, j),
                at(&self.values, &self.t_derivative, j + 1),
                at(&self.r_derivative, &self.rt_derivative, j + 1),
            )
        };
        (
            hermite(s, hr, f_a, f_b, fr_a, fr_b),
            hermite_derivative(s, hr, f_a, f_b, fr_a, fr_b),
        )
    }

    /// Node-wise `self − other` on identical grids.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.r_grid != other.r_grid || self.t_grid != other.t_grid {
            return Err(invalid("grid", "fields live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        let deriv = self
            .r_derivative
            .iter()
            .zip(&other.r_derivative)
            .map(|(a, b)| a - b)
            .collect();
        let mut out = Self::with_r_derivative(
            self.r_grid.clone(),
            self.t_grid.clone(),
            values,
            deriv,
        )?;
        out.valid_radius = self.valid_radius;
        out.origin_exponent = self.origin_exponent;
        Ok(out)
    }

    /// Writes `r,t,u,u_r` rows after a `#` header line carrying `header`.
    pub fn write_csv(&self, mut w: impl Write, header: &str) -> std::io::Result<()> {
        writeln!(w, "# {header}")?;
        writeln!(w, "r,t,u,u_r")?;
        for (i, &t) in self.t_grid.iter().enumerate() {
            for (j, &r) in self.r_grid.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt17(r),
                    fmt17(t),
                    fmt17(self.value(i, j)),
                    fmt17(self.r_derivative(i, j))
                )?;
            }
        }
        Ok(())
    }
}

/// Float formatting with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Index `i` with `grid[i] <= x < grid[i+1]`, clamped to valid cells.
#[inline]
pub(crate) fn cell_index(grid: &[f64], x: f64) -> usize {
    let n = grid.len();
    let i = grid.partition_point(|&g| g <= x);
    i.saturating_sub(1).min(n - 2)
}

fn time_slopes(t_grid: &[f64], table: &[f64], nr: usize) -> Vec<f64> {
    let nt = t_grid.len();
    let mut out = vec![0.0; table.len()];
    if nt < 2 {
        return out;
    }
    let mut col = vec![0.0; nt];
    let mut slope = vec![0.0; nt];
    for j in 0..nr {
        for i in 0..nt {
            col[i] = table[i * nr + j];
        }
        if nt == 2 {
            let s = (col[1] - col[0]) / (t_grid[1] - t_grid[0]);
            slope[0] = s;
            slope[1] = s;
        } else {
            three_point_slopes(t_grid, &col, &mut slope);
        }
        for i in 0..nt {
            out[i * nr + j] = slope[i];
        }
    }
    out
}

/// Radial grid `r_min + (r_max − r_min)(e^{βs} − 1)/(e^β − 1)`, `s ∈ [0, 1]`,
/// concentrating nodes near the origin for `β > 0` (uniform for `β = 0`).
pub fn stretched_grid(r_min: f64, r_max: f64, count: usize, beta: f64) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let s = i as f64 / (count - 1) as f64;
            let frac = if beta.abs() < 1e-12 {
                s
            } else {
                (beta * s).exp_m1() / beta.exp_m1()
            };
            r_min + (r_max - r_min) * frac
        })
        .collect()
}

pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    stretched_grid(lo, hi, count, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bicubic_reproduces_smooth_fields() {
        let r = stretched_grid(0.01, 4.0, 81, 2.0);
        let t = uniform_grid(0.0, 2.0, 41);
        let f = |r: f64, t: f64| (r * 1.3).sin() * (0.5 * t).cos() + 0.1 * r * t;
        let fld = SpacetimeField::from_fn(r, t, f).unwrap();
        for a in 0..37 {
            for b in 0..19 {
                let (rr, tt) = (0.02 + 0.1 * a as f64, 0.05 + 0.1 * b as f64);
                assert!((fld.eval(rr, tt) - f(rr, tt)).abs() < 2e-4, "({rr},{tt})");
            }
        }
        assert_eq!(fld.eval(4.5, 1.0), 0.0);
    }

    #[test]
    fn r_derivative_is_second_order() {
        let err = |n: usize| {
            let r = stretched_grid(0.1, 3.0, n, 1.0);
            let fld = SpacetimeField::from_fn(r.clone(), vec![0.0], |r, _| r.sin()).unwrap();
            (1..n - 1)
                .map(|j| (fld.r_derivative(0, j) - r[j].cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(SpacetimeField::new(vec![0.1, 0.2, 0.3], vec![0.0], vec![0.0; 2]).is_err());
        assert!(SpacetimeField::new(vec![0.1, 0.2, 0.3], vec![0.0], vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(SpacetimeField::new(vec![0.3, 0.2, 0.4], vec![0.0], vec![0.0; 3]).is_err());
    }
}
