//! Test statistics (fringe visibility, likelihood ratio), their population
//! moments, and relative-entropy divergences.

use serde::{Deserialize, Serialize};

use crate::dist::{TabulatedDistribution, PDF_FLOOR};
use crate::error::{Error, Result};

/// A fringe pair counts only when its relative depth exceeds this.
pub const PROMINENCE: f64 = 1e-3;

/// Counting bins around the second maximum and first minimum of the
/// quantum distribution. `I_max` is closed, `I_min` half-open on the left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeIntervals {
    pub x_max: f64,
    pub x_min: f64,
    pub delta: f64,
}

impl FringeIntervals {
    pub fn new(x_max: f64, x_min: f64) -> Result<FringeIntervals> {
        let delta = (x_max - x_min).abs();
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument("fringe extrema must be distinct".into()));
        }
        Ok(FringeIntervals { x_max, x_min, delta })
    }

    pub fn max_bounds(&self) -> (f64, f64) {
        (self.x_max - 0.5 * self.delta, self.x_max + 0.5 * self.delta)
    }

    pub fn min_bounds(&self) -> (f64, f64) {
        (self.x_min - 0.5 * self.delta, self.x_min + 0.5 * self.delta)
    }

    pub fn in_max(&self, y: f64) -> bool {
        let (lo, hi) = self.max_bounds();
        y >= lo && y <= hi
    }

    pub fn in_min(&self, y: f64) -> bool {
        let (lo, hi) = self.min_bounds();
        y > lo && y <= hi
    }
}

/// Locates the fringe next to the global maximum on the oscillatory side
/// (towards `-sign(theta3)`): walk downhill to the first minimum, then uphill
/// to the next maximum, refine both by a three-point parabola, and keep the
/// pair only if its relative depth exceeds [`PROMINENCE`].
pub fn find_fringes(p1: &TabulatedDistribution) -> Option<FringeIntervals> {
    let pdf = &p1.pdf;
    let n = pdf.len();
    let dir: isize = match p1.origin {
        Some(o) if o.params.theta3 < 0.0 => 1,
        Some(o) if o.params.theta3 == 0.0 && o.params.theta1 < 0.0 => 1,
        _ => -1,
    };
    let peak = (0..n).max_by(|&a, &b| pdf[a].total_cmp(&pdf[b]))?;
    let next = |j: usize| -> Option<usize> {
        let k = j as isize + dir;
        (k >= 0 && (k as usize) < n).then_some(k as usize)
    };

    let mut j = peak;
    while let Some(k) = next(j) {
        if pdf[k] < pdf[j] {
            j = k;
        } else {
            break;
        }
    }
    let jmin = j;
    next(jmin)?;
    while let Some(k) = next(j) {
        if pdf[k] > pdf[j] {
            j = k;
        } else {
            break;
        }
    }
    let jmax = j;
    if jmax == jmin || next(jmax).is_none() || jmin == peak {
        return None;
    }
    let (x_min, v_min) = refine_extremum(p1, jmin);
    let (x_max, v_max) = refine_extremum(p1, jmax);
    if !(v_max > 0.0) || (v_max - v_min) / v_max <= PROMINENCE {
        return None;
    }
    FringeIntervals::new(x_max, x_min).ok()
}

/// Vertex of the parabola through nodes `j-1, j, j+1`.
fn refine_extremum(d: &TabulatedDistribution, j: usize) -> (f64, f64) {
    let (a, b, c) = (d.pdf[j - 1], d.pdf[j], d.pdf[j + 1]);
    let curv = a - 2.0 * b + c;
    let h = d.grid.step();
    if curv == 0.0 {
        return (d.grid.node(j), b);
    }
    let off = (0.5 * (a - c) / curv).clamp(-1.0, 1.0);
    let value = b - 0.25 * (a - c) * off;
    (d.grid.node(j) + off * h, value)
}

/// `(N_max - N_min)/(N_max + N_min)`; 0 without fringes or without counts.
pub fn visibility(samples: &[f64], f: Option<&FringeIntervals>) -> f64 {
    let Some(f) = f else { return 0.0 };
    let (mut hi, mut lo) = (0u64, 0u64);
    for &y in samples {
        if f.in_max(y) {
            hi += 1;
        } else if f.in_min(y) {
            lo += 1;
        }
    }
    visibility_from_counts(hi, lo)
}

pub fn visibility_from_counts(n_max: u64, n_min: u64) -> f64 {
    if n_max + n_min == 0 {
        0.0
    } else {
        (n_max as f64 - n_min as f64) / (n_max + n_min) as f64
    }
}

/// Per-sample mean and variance of a statistic under one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticMoments {
    pub mean: f64,
    /// Variance of the statistic computed from `N` samples, times `N`.
    pub var: f64,
}

/// Population moments under both hypotheses. The variance of the statistic
/// after `N` measurements is `var_s / N` for both statistics here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestStatisticMoments {
    pub mean0: f64,
    pub var0: f64,
    pub mean1: f64,
    pub var1: f64,
}

impl TestStatisticMoments {
    pub fn from_pair(h0: StatisticMoments, h1: StatisticMoments) -> TestStatisticMoments {
        TestStatisticMoments { mean0: h0.mean, var0: h0.var, mean1: h1.mean, var1: h1.var }
    }

    pub fn std_at(&self, n: u64) -> (f64, f64) {
        let nf = n as f64;
        ((self.var0 / nf).sqrt(), (self.var1 / nf).sqrt())
    }
}

/// Cell probabilities of the two counting bins under `d`.
pub fn cell_probabilities(d: &TabulatedDistribution, f: &FringeIntervals) -> (f64, f64) {
    let (a, b) = f.max_bounds();
    let (c, e) = f.min_bounds();
    let q_max = (d.cdf_at(b) - d.cdf_at(a)).max(0.0);
    let q_min = (d.cdf_at(e) - d.cdf_at(c)).max(0.0);
    (q_max, q_min)
}

/// Delta-method moments of the visibility from the multinomial bin counts:
/// mean `(q_max - q_min)/(q_max + q_min)`, per-sample variance
/// `4 q_max q_min / (q_max + q_min)^3`.
pub fn visibility_moments(d: &TabulatedDistribution, f: &FringeIntervals) -> Result<StatisticMoments> {
    let (qa, qb) = cell_probabilities(d, f);
    visibility_moments_from_cells(qa, qb)
}

pub fn visibility_moments_from_cells(q_max: f64, q_min: f64) -> Result<StatisticMoments> {
    let total = q_max + q_min;
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("both fringe bins have zero probability".into()));
    }
    Ok(StatisticMoments {
        mean: (q_max - q_min) / total,
        var: 4.0 * q_max * q_min / total.powi(3),
    })
}

/// Visibility moments under both hypotheses with bins from the quantum
/// tabulation.
pub fn visibility_test_moments(
    d0: &TabulatedDistribution,
    d1: &TabulatedDistribution,
    f: &FringeIntervals,
) -> Result<TestStatisticMoments> {
    Ok(TestStatisticMoments::from_pair(visibility_moments(d0, f)?, visibility_moments(d1, f)?))
}

/// Likelihood-ratio statistic of a data set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrtValue {
    pub value: f64,
    /// Terms where either density fell below the floor.
    pub clamped: u64,
}

/// Per-sample log likelihood ratio `ln p1(y) - ln p0(y)` and whether a
/// floor was hit.
#[inline]
pub fn log_ratio(y: f64, d0: &TabulatedDistribution, d1: &TabulatedDistribution) -> (f64, bool) {
    let l1 = d1.log_pdf_at(y);
    let l0 = d0.log_pdf_at(y);
    let floor = PDF_FLOOR.ln();
    (l1 - l0, l1 <= floor || l0 <= floor)
}

/// `Lambda = (1/N) sum ln(p1(y_i)/p0(y_i))`.
pub fn lrt(samples: &[f64], d0: &TabulatedDistribution, d1: &TabulatedDistribution) -> LrtValue {
    if samples.is_empty() {
        return LrtValue { value: 0.0, clamped: 0 };
    }
    let mut sum = 0.0;
    let mut clamped = 0;
    for &y in samples {
        let (l, c) = log_ratio(y, d0, d1);
        sum += l;
        clamped += c as u64;
    }
    LrtValue { value: sum / samples.len() as f64, clamped }
}

fn same_grid(p: &TabulatedDistribution, q: &TabulatedDistribution) -> Result<()> {
    if p.grid != q.grid {
        return Err(Error::IncompatibleGrids);
    }
    Ok(())
}

fn trapezoid_weights(n: usize, j: usize) -> f64 {
    if j == 0 || j == n - 1 {
        0.5
    } else {
        1.0
    }
}

/// `D(p||q) = int p ln(p/q)` by the trapezoid rule on the shared grid.
pub fn relative_entropy(p: &TabulatedDistribution, q: &TabulatedDistribution) -> Result<f64> {
    same_grid(p, q)?;
    let n = p.pdf.len();
    let floor = PDF_FLOOR.ln();
    let mut acc = 0.0;
    for j in 0..n {
        if p.pdf[j] < PDF_FLOOR {
            continue;
        }
        let lq = q.logpdf[j].max(floor);
        acc += trapezoid_weights(n, j) * p.pdf[j] * (p.logpdf[j] - lq);
    }
    let d = acc * p.grid.step();
    if !d.is_finite() {
        return Err(Error::NonFinite("relative entropy"));
    }
    Ok(if d < 0.0 { 0.0 } else { d })
}

/// Symmetrized divergence `D(p1||p0) + D(p0||p1)`.
pub fn jeffreys(p1: &TabulatedDistribution, p0: &TabulatedDistribution) -> Result<f64> {
    Ok(relative_entropy(p1, p0)? + relative_entropy(p0, p1)?)
}

/// Moments of `ln(p1/p0)` under `sample`, with the ratio evaluated from the
/// analysis pair (which may sit on a different grid).
pub fn log_ratio_moments(
    sample: &TabulatedDistribution,
    d0: &TabulatedDistribution,
    d1: &TabulatedDistribution,
) -> StatisticMoments {
    let n = sample.pdf.len();
    let shared = sample.grid == d0.grid && sample.grid == d1.grid;
    let floor = PDF_FLOOR.ln();
    let (mut m1, mut m2, mut mass) = (0.0, 0.0, 0.0);
    for j in 0..n {
        let w = trapezoid_weights(n, j) * sample.pdf[j];
        if w == 0.0 {
            continue;
        }
        let l = if shared {
            d1.logpdf[j].max(floor) - d0.logpdf[j].max(floor)
        } else {
            log_ratio(sample.grid.node(j), d0, d1).0
        };
        m1 += w * l;
        m2 += w * l * l;
        mass += w;
    }
    let mean = m1 / mass;
    StatisticMoments { mean, var: (m2 / mass - mean * mean).max(0.0) }
}

/// Moments of the per-sample log-likelihood ratio: mean `D(p1||p0)` under
/// H1 and `-D(p0||p1)` under H0.
pub fn lrt_moments(d0: &TabulatedDistribution, d1: &TabulatedDistribution) -> Result<TestStatisticMoments> {
    same_grid(d0, d1)?;
    let h0 = log_ratio_moments(d0, d0, d1);
    let h1 = log_ratio_moments(d1, d0, d1);
    Ok(TestStatisticMoments::from_pair(h0, h1))
}
