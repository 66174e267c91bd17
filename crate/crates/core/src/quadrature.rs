//! Fixed and adaptive quadrature rules.
//!
//! The adaptive integrator is a global-error-driven Gauss–Kronrod (7, 15)
//! scheme: panels are kept in a max-heap keyed by their error estimate and the
//! worst panel is bisected until the summed estimate drops below the target.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, d)
}

/// A Gauss–Legendre rule mapped to arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrates `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Mapped nodes and weights on [a, b].
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, w * h))
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Returns the Kronrod value, its error estimate and the roundoff floor.
fn qk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut f1 = [0.0; 7];
    let mut f2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (fa, fb) = (f(c - dx), f(c + dx));
        f1[j] = fa;
        f2[j] = fb;
        resk += WGK[j] * (fa + fb);
        resabs += WGK[j] * (fa.abs() + fb.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (fa + fb);
        }
    }
    let mean = resk * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    let h = h.abs();
    let (resk, resabs, resasc) = (resk * h, resabs * h, resasc * h);
    let mut err = ((resk - resg * h) * 1.0).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) && round > err {
        err = round;
    }
    (resk, err, round)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    round: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err.total_cmp(&o.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Settings for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Number of equal panels the interval is cut into before refinement.
    pub initial_panels: usize,
    /// Maximum bisection depth of any single panel.
    pub max_depth: u32,
    /// Absolute error target for the whole integral.
    pub abs_tol: f64,
}

/// Value and certified error estimate of an adaptive integral.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Adaptive Gauss–Kronrod integration of `f` over [a, b].
pub fn integrate_adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    opts: AdaptiveOptions,
    context: &'static str,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
        });
    }
    let n0 = opts.initial_panels.max(1);
    let mut heap = BinaryHeap::with_capacity(n0 * 4);
    let mut frozen_value = 0.0;
    let mut frozen_err = 0.0;
    let mut frozen_round = 0.0;
    let mut total_err = 0.0;
    let step = (b - a) / n0 as f64;
    for i in 0..n0 {
        let pa = a + step * i as f64;
        let pb = if i + 1 == n0 { b } else { a + step * (i + 1) as f64 };
        let (value, err, round) = qk15(&mut f, pa, pb);
        total_err += err;
        heap.push(Panel {
            a: pa,
            b: pb,
            value,
            err,
            round,
            depth: 0,
        });
    }
    // Bisect the worst panel until the summed estimate is small enough.
    while total_err > opts.abs_tol {
        let Some(worst) = heap.pop() else { break };
        if worst.depth >= opts.max_depth || worst.err <= worst.round {
            frozen_value += worst.value;
            frozen_err += worst.err;
            if worst.err <= worst.round {
                frozen_round += worst.round;
            }
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1, o1) = qk15(&mut f, worst.a, mid);
        let (v2, e2, o2) = qk15(&mut f, mid, worst.b);
        total_err += e1 + e2 - worst.err;
        for (pa, pb, value, err, round) in [(worst.a, mid, v1, e1, o1), (mid, worst.b, v2, e2, o2)] {
            heap.push(Panel {
                a: pa,
                b: pb,
                value,
                err,
                round,
                depth: worst.depth + 1,
            });
        }
    }
    let mut value = frozen_value;
    let mut err = frozen_err;
    let mut round = frozen_round;
    for p in heap.iter() {
        value += p.value;
        err += p.err;
        if p.err <= p.round {
            round += p.round;
        }
    }
    if !value.is_finite() {
        return Err(Error::NonFinite(context));
    }
    // A result limited only by roundoff is the best double precision allows.
    if err > opts.abs_tol.max(round) {
        return Err(Error::ToleranceNotMet {
            context,
            achieved: err,
            requested: opts.abs_tol,
        });
    }
    Ok(Integral { value, error: err })
}

/// Composite Simpson rule on samples at uniform spacing `h`.
///
/// An even number of intervals uses the plain rule; an odd number closes
/// with Simpson's 3/8 rule on the final three intervals.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let w = simpson_weights(values.len(), h);
    values.iter().zip(&w).map(|(v, w)| v * w).sum()
}

/// Weights of [`simpson_uniform`] for `count` samples.
pub fn simpson_weights(count: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; count];
    match count {
        0 | 1 => {}
        2 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        _ => {
            let intervals = count - 1;
            let simpson_end = if intervals.is_multiple_of(2) {
                intervals
            } else {
                intervals - 3
            };
            let mut i = 0;
            while i < simpson_end {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
                i += 2;
            }
            if simpson_end < intervals {
                let s = simpson_end;
                w[s] += 3.0 * h / 8.0;
                w[s + 1] += 9.0 * h / 8.0;
                w[s + 2] += 9.0 * h / 8.0;
                w[s + 3] += 3.0 * h / 8.0;
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for order in 1..=12 {
            let rule = GaussRule::new(order);
            for deg in 0..(2 * order) {
                let got = rule.integrate(-1.0, 2.0, |x| x.powi(deg as i32));
                let exact = (2f64.powi(deg as i32 + 1) - (-1f64).powi(deg as i32 + 1))
                    / (deg as f64 + 1.0);
                assert!(
                    (got - exact).abs() < 1e-12 * exact.abs().max(1.0),
                    "order {order} degree {deg}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let opts = AdaptiveOptions {
            initial_panels: 2,
            max_depth: 40,
            abs_tol: 1e-10,
        };
        let r = integrate_adaptive(|x: f64| x.sqrt(), 0.0, 1.0, opts, "test").unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn adaptive_reports_unreachable_tolerance() {
        let opts = AdaptiveOptions {
            initial_panels: 1,
            max_depth: 2,
            abs_tol: 1e-14,
        };
        let r = integrate_adaptive(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, opts, "test");
        assert!(matches!(r, Err(Error::ToleranceNotMet { .. })));
    }

    #[test]
    fn simpson_exact_for_cubics_any_parity() {
        for count in 3..12 {
            let h = 0.3;
            let v: Vec<f64> = (0..count)
                .map(|i| {
                    let x = i as f64 * h;
                    x * x * x - 2.0 * x + 1.0
                })
                .collect();
            let l = (count - 1) as f64 * h;
            let exact = l.powi(4) / 4.0 - l * l + l;
            assert!((simpson_uniform(&v, h) - exact).abs() < 1e-12, "count {count}");
        }
    }
}
