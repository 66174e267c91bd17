//! Sampled radial functions with explicit extrapolation.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Behaviour of a profile to the right of its last sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Extrapolation {
    /// The profile vanishes beyond the last sample.
    ZeroBeyondSupport,
    /// `f(r) = f(r_last) (r / r_last)^(-exponent)`.
    PowerLawTail(f64),
}

/// A radial function `f(r)`, `r > 0`, known on a sample grid.
///
/// Between samples the profile is a cubic Hermite interpolant when derivative
/// samples are present, a monotone (Fritsch–Carlson) cubic for smoothness
/// order 2 and piecewise linear for order 1. Left of the first sample the first
/// value is held.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    sample_points: Vec<f64>,
    values: Vec<f64>,
    derivative_values: Option<Vec<f64>>,
    slopes: Vec<f64>,
    extrapolation: Extrapolation,
    smoothness_order: u8,
    zero: bool,
}

impl RadialProfile {
    pub fn new(
        sample_points: Vec<f64>,
        values: Vec<f64>,
        derivative_values: Option<Vec<f64>>,
        extrapolation: Extrapolation,
        smoothness_order: u8,
    ) -> Result<Self> {
        if sample_points.len() < 2 {
            return Err(invalid("sample_points", "need at least two samples"));
        }
        if values.len() != sample_points.len() {
            return Err(invalid("values", "length differs from sample_points"));
        }
        if let Some(d) = &derivative_values {
            if d.len() != sample_points.len() {
                return Err(invalid("derivative_values", "length differs from sample_points"));
            }
        }
        if !(sample_points[0] > 0.0) || sample_points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid(
                "sample_points",
                "must be positive and strictly increasing",
            ));
        }
        if !(1..=2).contains(&smoothness_order) {
            return Err(invalid("smoothness_order", "must be 1 or 2"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "must be finite"));
        }
        let slopes = match (&derivative_values, smoothness_order) {
            (Some(d), _) => d.clone(),
            (None, 2) => monotone_slopes(&sample_points, &values),
            (None, _) => Vec::new(),
        };
        let zero = values.iter().all(|&v| v == 0.0)
            && derivative_values
                .as_ref()
                .is_none_or(|d| d.iter().all(|&v| v == 0.0));
        Ok(Self {
            sample_points,
            values,
            derivative_values,
            slopes,
            extrapolation,
            smoothness_order,
            zero,
        })
    }

    /// Samples `f` and its derivative `df` on `count` uniform points of
    /// `[r_lo, r_hi]`.
    pub fn from_fn(
        r_lo: f64,
        r_hi: f64,
        count: usize,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
        extrapolation: Extrapolation,
    ) -> Result<Self> {
        if !(r_lo > 0.0 && r_hi > r_lo) || count < 2 {
            return Err(invalid("sample_points", "need 0 < r_lo < r_hi and count >= 2"));
        }
        let h = (r_hi - r_lo) / (count - 1) as f64;
        let pts: Vec<f64> = (0..count).map(|i| r_lo + h * i as f64).collect();
        let vals = pts.iter().map(|&r| f(r)).collect();
        let ders = pts.iter().map(|&r| df(r)).collect();
        Self::new(pts, vals, Some(ders), extrapolation, 2)
    }

    /// A constant profile on `(0, ∞)`.
    pub fn constant(value: f64) -> Self {
        Self::new(
            vec![1e-6, 1.0],
            vec![value, value],
            Some(vec![0.0, 0.0]),
            Extrapolation::PowerLawTail(0.0),
            2,
        )
        .expect("constant profile is valid")
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn sample_points(&self) -> &[f64] {
        &self.sample_points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivative_values(&self) -> Option<&[f64]> {
        self.derivative_values.as_deref()
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    pub fn smoothness_order(&self) -> u8 {
        self.smoothness_order
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Right end of the support, or infinity for power-law tails.
    pub fn support_end(&self) -> f64 {
        match self.extrapolation {
            Extrapolation::ZeroBeyondSupport => *self.sample_points.last().unwrap(),
            Extrapolation::PowerLawTail(_) => f64::INFINITY,
        }
    }

    /// Left end of the numerical support (first sample with a non-zero value
    /// or slope), used to skip empty integration ranges.
    pub fn support_start(&self) -> f64 {
        let first = self
            .values
            .iter()
            .enumerate()
            .position(|(i, &v)| v != 0.0 || self.slopes.get(i).is_some_and(|&d| d != 0.0));
        match first {
            Some(0) | None => 0.0,
            Some(i) => self.sample_points[i - 1],
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let x = &self.sample_points;
        let last = x.len() - 1;
        if r <= x[0] {
            return self.values[0];
        }
        if r >= x[last] {
            return match self.extrapolation {
                Extrapolation::ZeroBeyondSupport => {
                    if r == x[last] {
                        self.values[last]
                    } else {
                        0.0
                    }
                }
                Extrapolation::PowerLawTail(e) => self.values[last] * (r / x[last]).powf(-e),
            };
        }
        let i = x.partition_point(|&s| s <= r) - 1;
        let (x0, x1) = (x[i], x[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let h = x1 - x0;
        let s = (r - x0) / h;
        if self.slopes.is_empty() {
            return y0 + s * (y1 - y0);
        }
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        hermite(s, h, y0, y1, d0, d1)
    }

    /// Derivative of the interpolant; zero outside the sampled range unless a
    /// power tail applies.
    pub fn derivative(&self, r: f64) -> f64 {
        let x = &self.sample_points;
        let last = x.len() - 1;
        if r < x[0] {
            return 0.0;
        }
        if r >= x[last] {
            return match self.extrapolation {
                Extrapolation::ZeroBeyondSupport => 0.0,
                Extrapolation::PowerLawTail(e) => {
                    -e * self.values[last] / x[last] * (r / x[last]).powf(-e - 1.0)
                }
            };
        }
        let i = x.partition_point(|&s| s <= r) - 1;
        let h = x[i + 1] - x[i];
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        if self.slopes.is_empty() {
            return (y1 - y0) / h;
        }
        hermite_derivative((r - x[i]) / h, h, y0, y1, self.slopes[i], self.slopes[i + 1])
    }

    /// Largest disagreement between the stored derivatives and centered
    /// difference slopes of the values, relative to the value scale.
    pub fn derivative_consistency(&self) -> Option<f64> {
        let d = self.derivative_values.as_ref()?;
        let x = &self.sample_points;
        let scale = self
            .values
            .iter()
            .chain(d.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 1..x.len() - 1 {
            let fd = (self.values[i + 1] - self.values[i - 1]) / (x[i + 1] - x[i - 1]);
            worst = worst.max((fd - d[i]).abs() / scale);
        }
        Some(worst)
    }

    /// Pointwise linear combination `alpha·self + beta·other` on the union of
    /// both sample grids.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        let mut pts: Vec<f64> = self
            .sample_points
            .iter()
            .chain(other.sample_points.iter())
            .copied()
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let vals = pts
            .iter()
            .map(|&r| alpha * self.eval(r) + beta * other.eval(r))
            .collect();
        let ders = (!self.slopes.is_empty() && !other.slopes.is_empty()).then(|| {
            pts.iter()
                .map(|&r| alpha * self.derivative(r) + beta * other.derivative(r))
                .collect()
        });
        let extrapolation = match (self.extrapolation, other.extrapolation) {
            (Extrapolation::ZeroBeyondSupport, Extrapolation::ZeroBeyondSupport) => {
                Extrapolation::ZeroBeyondSupport
            }
            (Extrapolation::PowerLawTail(a), Extrapolation::PowerLawTail(b)) => {
                Extrapolation::PowerLawTail(a.min(b))
            }
            (Extrapolation::PowerLawTail(a), _) | (_, Extrapolation::PowerLawTail(a)) => {
                Extrapolation::PowerLawTail(a)
            }
        };
        Self::new(pts, vals, ders, extrapolation, 2)
    }
}

#[inline]
pub(crate) fn hermite(s: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h * (h10 * d0 + h11 * d1) + h01 * y1
}

#[inline]
pub(crate) fn hermite_derivative(s: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let s2 = s * s;
    let dh00 = 6.0 * s2 - 6.0 * s;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = -6.0 * s2 + 6.0 * s;
    let dh11 = 3.0 * s2 - 2.0 * s;
    (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
}

/// Fritsch–Carlson slopes for a monotone piecewise cubic.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut d = vec![0.0; n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d
}

/// Nodal slopes of samples on a non-uniform grid by three-point differences.
pub(crate) fn three_point_slopes(x: &[f64], y: &[f64], out: &mut [f64]) {
    let n = x.len();
    debug_assert!(n >= 3 && y.len() == n && out.len() == n);
    for i in 1..n - 1 {
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        out[i] = (-h1 / (h0 * (h0 + h1))) * y[i - 1]
            + ((h1 - h0) / (h0 * h1)) * y[i]
            + (h0 / (h1 * (h0 + h1))) * y[i + 1];
    }
    let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
    out[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * y[0] + (h0 + h1) / (h0 * h1) * y[1]
        - h0 / (h1 * (h0 + h1)) * y[2];
    let (h0, h1) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
    out[n - 1] = h1 / (h0 * (h0 + h1)) * y[n - 3] - (h0 + h1) / (h0 * h1) * y[n - 2]
        + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * y[n - 1];
}
