//! Significance thresholds, Wilson score intervals, asymptotic power and the
//! number of measurements N⋆ needed to reject classical mechanics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stats::TestStatisticMoments;

/// Rejection threshold in standard deviations of the null ensemble.
pub const N_SIGMA: f64 = 5.0;
/// Required power, one-sided.
pub const POWER_TARGET: f64 = 0.9973;
/// Wilson interval level: `1 - eps` coverage.
pub const WILSON_EPS: f64 = 0.05;

fn std_normal() -> Normal {
    Normal::standard()
}

pub fn phi(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn phi_inv(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// `z_eps = Phi^-1(1 - eps/2)`.
pub fn wilson_z(eps: f64) -> f64 {
    phi_inv(1.0 - 0.5 * eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub z_star: f64,
    /// Significance of a Gaussian statistic at this threshold, `Phi(-n)`.
    pub alpha: f64,
}

/// `Z* = mean0 + n sqrt(var0)`, `alpha = Phi(-n)`.
pub fn threshold_5sigma(mean0: f64, var0: f64, n_sigma: f64) -> Result<Threshold> {
    if !(var0 >= 0.0) || !mean0.is_finite() || !n_sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold needs var0 >= 0, got {var0}")));
    }
    Ok(Threshold { z_star: mean0 + n_sigma * var0.sqrt(), alpha: phi(-n_sigma) })
}

/// Wilson score interval `(w_-, w_+)` for `m_above` successes in `m` runs.
pub fn wilson(m: u64, m_above: u64, eps: f64) -> Result<(f64, f64)> {
    if m == 0 || m_above > m || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "wilson needs 0 <= m_above <= m, m >= 1 and eps in (0,1); got m={m}, m_above={m_above}, eps={eps}"
        )));
    }
    let z = wilson_z(eps);
    let z2 = z * z;
    let (mf, kf) = (m as f64, m_above as f64);
    let denom = mf + z2;
    let center = (kf + 0.5 * z2) / denom;
    let half = 0.5 * z / denom * (4.0 * (mf - kf) * kf / mf + z2).sqrt();
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Smallest run count `M` for which a perfect record `M_> = M` can certify
/// `target` at the lower Wilson bound: `M/(M + z^2) >= target`.
pub fn wilson_floor(target: f64, eps: f64) -> u64 {
    let z = wilson_z(eps);
    let mut m = (target * z * z / (1.0 - target)).ceil() as u64;
    // guard the boundary against rounding in either direction
    while m > 1 && (m - 1) as f64 / ((m - 1) as f64 + z * z) >= target {
        m -= 1;
    }
    while (m as f64) / (m as f64 + z * z) < target {
        m += 1;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub alpha: f64,
    pub threshold: f64,
    pub power_point: f64,
    pub power_wilson_low: f64,
    pub power_wilson_high: f64,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "M_above")]
    pub m_above: u64,
}

/// Counts `Z_i > Z*` (strictly) among the alternative-hypothesis runs.
pub fn empirical_power(z_h1: &[f64], threshold: Threshold, eps: f64) -> Result<PowerResult> {
    if z_h1.is_empty() {
        return Err(Error::InvalidArgument("empirical power needs at least one run".into()));
    }
    let m = z_h1.len() as u64;
    let m_above = z_h1.iter().filter(|&&z| z > threshold.z_star).count() as u64;
    let (lo, hi) = wilson(m, m_above, eps)?;
    let point = m_above as f64 / m as f64;
    Ok(PowerResult {
        alpha: threshold.alpha,
        threshold: threshold.z_star,
        power_point: point,
        power_wilson_low: lo.min(point),
        power_wilson_high: hi.max(point),
        m,
        m_above,
    })
}

/// Mean and unbiased variance; the variance is 0 for fewer than two values.
pub fn mean_var(z: &[f64]) -> (f64, f64) {
    let n = z.len() as f64;
    if z.is_empty() {
        return (0.0, 0.0);
    }
    let mean = z.iter().sum::<f64>() / n;
    if z.len() < 2 {
        return (mean, 0.0);
    }
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Threshold from the null ensemble, power from the alternative ensemble.
pub fn ensemble_power(z_h0: &[f64], z_h1: &[f64], n_sigma: f64, eps: f64) -> Result<PowerResult> {
    let (m0, v0) = mean_var(z_h0);
    empirical_power(z_h1, threshold_5sigma(m0, v0, n_sigma)?, eps)
}

/// `1 - Phi((mean0 + n sqrt(var0/N) - mean1) / sqrt(var1/N))` for per-sample
/// moments.
pub fn asymptotic_power(m: &TestStatisticMoments, n: u64, n_sigma: f64) -> f64 {
    let nf = n as f64;
    let z_star = m.mean0 + n_sigma * (m.var0 / nf).sqrt();
    let sd1 = (m.var1 / nf).sqrt();
    if sd1 == 0.0 {
        return if m.mean1 > z_star { 1.0 } else { 0.0 };
    }
    1.0 - phi((z_star - m.mean1) / sd1)
}

/// Smallest `N` with `sqrt(N) >= (n sqrt(v0) + m sqrt(v1)) / (mean1 - mean0)`,
/// `m = Phi^-1(target)`.
pub fn nstar_asymptotic(m: &TestStatisticMoments, n_sigma: f64, target: f64) -> Result<u64> {
    let gap = m.mean1 - m.mean0;
    if !(gap > 0.0) {
        return Err(Error::NoPower { mean0: m.mean0, mean1: m.mean1 });
    }
    let root = (n_sigma * m.var0.sqrt() + phi_inv(target) * m.var1.sqrt()) / gap;
    let n = (root * root).ceil();
    if !n.is_finite() || n > u64::MAX as f64 {
        return Err(Error::NonFinite("asymptotic N*"));
    }
    Ok((n as u64).max(1))
}

/// Settings of the empirical N⋆ search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NStarSearch {
    pub n_sigma: f64,
    pub target: f64,
    pub eps: f64,
    /// Largest `N` tried before giving up.
    pub n_cap: u64,
}

impl Default for NStarSearch {
    fn default() -> Self {
        NStarSearch { n_sigma: N_SIGMA, target: POWER_TARGET, eps: WILSON_EPS, n_cap: 1 << 20 }
    }
}

/// Worst power over the robustness window at one `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPower {
    pub n: u64,
    pub window_point: usize,
    pub power: PowerResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NStar {
    Found { n: u64, worst: WindowPower },
    Unreachable { cap: u64 },
}

impl NStar {
    pub fn value(&self) -> Option<u64> {
        match self {
            NStar::Found { n, .. } => Some(*n),
            NStar::Unreachable { .. } => None,
        }
    }
}

/// A Monte-Carlo experiment whose measurement count can be advanced and
/// rewound; the empirical N⋆ search drives it through this interface.
pub trait PowerProbe: Clone {
    fn measurements(&self) -> u64;
    /// Adds measurements to every run until each holds `n`.
    fn advance_to(&mut self, n: u64) -> Result<()>;
    /// Worst conservative power across the window at the current `N`.
    fn worst_power(&self, search: &NStarSearch) -> Result<WindowPower>;
    fn runs(&self) -> u64;
}

/// Smallest `N >= wilson_floor` whose conservative power reaches the target
/// at every window point: doubling from the floor, then a coarse forward
/// scan (32 steps) and a unit-step scan, each resumed from the last failing
/// state. Probes must be path independent: the state at `N` may not depend
/// on the sequence of `advance_to` calls that reached it.
pub fn nstar_search<P: PowerProbe>(probe: &mut P, search: &NStarSearch) -> Result<NStar> {
    let floor = wilson_floor(search.target, search.eps);
    let cap = search.n_cap;
    if probe.runs() < floor || cap < floor {
        return Ok(NStar::Unreachable { cap });
    }
    let passes = |p: &P| -> Result<Option<WindowPower>> {
        let w = p.worst_power(search)?;
        Ok((w.power.power_wilson_low >= search.target).then_some(w))
    };

    probe.advance_to(floor)?;
    if let Some(w) = passes(probe)? {
        return Ok(NStar::Found { n: floor, worst: w });
    }
    let mut fail = probe.clone();
    let hi = loop {
        let lo = fail.measurements();
        if lo >= cap {
            return Ok(NStar::Unreachable { cap });
        }
        let next = (2 * lo).min(cap);
        probe.advance_to(next)?;
        if passes(probe)?.is_some() {
            break next;
        }
        fail = probe.clone();
    };

    // streams are path independent, so the state at `hi` passes again
    let mut step = ((hi - fail.measurements()) / 32).max(1);
    let mut cur = fail;
    loop {
        let before = cur.clone();
        let n = cur.measurements() + step;
        if n > cap {
            return Ok(NStar::Unreachable { cap });
        }
        cur.advance_to(n)?;
        if let Some(w) = passes(&cur)? {
            if step == 1 {
                *probe = cur;
                return Ok(NStar::Found { n, worst: w });
            }
            cur = before;
            step = 1;
        }
    }
}
