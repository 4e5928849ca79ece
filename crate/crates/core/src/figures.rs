//! Data behind the power curve (N sweep), the N⋆ versus decoherence sweep,
//! and the decoherence sweep of visibility, Wigner negativity and Jeffreys
//! divergence.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfunc::{Hypothesis, TwoModeCubicCF};
use crate::error::{Error, Result};
use crate::export::{comment, commented_csv, num};
use crate::montecarlo::{perturb, Analysis, ExperimentConfig, Perturbation, Statistic, TabulationCache, WindowExperiment};
use crate::params::{CubicParams, NoiseParams};
use crate::power::{asymptotic_power, mean_var, nstar_asymptotic, nstar_search, NStar, NStarSearch, PowerProbe};
use crate::stats::{jeffreys, TestStatisticMoments};
use crate::wigner::{wigner_tabulate, WignerGrids};

/// Inclusive linear sweep `lo:hi:steps`.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![lo],
        _ => (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect(),
    }
}

/// One point of a power curve, in the serialized record layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRecord {
    pub test: Statistic,
    #[serde(rename = "N")]
    pub n: u64,
    pub sigma2: f64,
    pub alpha: f64,
    /// Conservative (Wilson lower) power at the worst window point.
    pub power_low: f64,
    pub power_point: f64,
    #[serde(rename = "M")]
    pub m: u64,
    pub window_point: usize,
}

/// Worst-window power at each `N` of `n_values` (sorted ascending).
pub fn power_curve(cfg: &ExperimentConfig, n_values: &[u64], search: &NStarSearch) -> Result<Vec<PowerRecord>> {
    check_sorted(n_values)?;
    let cache = TabulationCache::default();
    let analysis = Arc::new(Analysis::with_cache(cfg.params, cfg.noise, &cache)?);
    let sigma2 = cfg.params.effective_sigma2(cfg.noise)?;
    let mut exp = WindowExperiment::new(cfg, analysis, &cache)?;
    let mut out = Vec::with_capacity(n_values.len());
    for &n in n_values {
        exp.advance_to(n)?;
        let w = exp.worst_power(search)?;
        out.push(PowerRecord {
            test: cfg.statistic,
            n,
            sigma2,
            alpha: w.power.alpha,
            power_low: w.power.power_wilson_low,
            power_point: w.power.power_point,
            m: w.power.m,
            window_point: w.window_point,
        });
    }
    Ok(out)
}

fn check_sorted(n_values: &[u64]) -> Result<()> {
    if n_values.is_empty() || n_values[0] == 0 || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("N values must be positive and strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSweepConfig {
    pub params: CubicParams,
    pub noise: NoiseParams,
    pub statistic: Statistic,
    pub runs: u64,
    pub n_values: Vec<u64>,
    pub base_seed: u64,
    pub window: Option<Perturbation>,
    pub search: NStarSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSweepRow {
    pub n: u64,
    /// Monte-Carlo mean and standard deviation of the statistic at the
    /// nominal point.
    pub mc_mean_h0: f64,
    pub mc_std_h0: f64,
    pub mc_mean_h1: f64,
    pub mc_std_h1: f64,
    /// Population values from quadrature; for the likelihood ratio the means
    /// are `-D(p0||p1)` and `D(p1||p0)`.
    pub pop_mean_h0: f64,
    pub pop_std_h0: f64,
    pub pop_mean_h1: f64,
    pub pop_std_h1: f64,
    pub power_point: f64,
    pub power_low: f64,
    pub worst_power_low: f64,
    pub worst_point: usize,
    pub asymptotic_power: f64,
    pub asymptotic_power_window_min: f64,
    pub asymptotic_power_window_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSweep {
    pub config: PowerSweepConfig,
    pub moments: TestStatisticMoments,
    pub rows: Vec<PowerSweepRow>,
    pub nstar: NStar,
    pub nstar_asymptotic: Option<u64>,
}

/// Moments of the statistic with both hypotheses sampled at each window
/// point and analysed nominally.
fn window_moments(
    analysis: &Analysis,
    statistic: Statistic,
    window: &Perturbation,
    cache: &TabulationCache,
) -> Result<Vec<TestStatisticMoments>> {
    (0..window.points())
        .map(|i| -> Result<TestStatisticMoments> {
            let (p, noise) = perturb(&analysis.params, analysis.noise, &window.targets, window.fraction, i)?;
            let h0 = analysis.mismatched_moments(statistic, &*cache.get(&p, Hypothesis::Classical, noise)?)?;
            let h1 = analysis.mismatched_moments(statistic, &*cache.get(&p, Hypothesis::Quantum, noise)?)?;
            Ok(TestStatisticMoments::from_pair(h0, h1))
        })
        .collect()
}

/// Power curve versus `N` with Monte-Carlo ensembles, quadrature moments,
/// empirical and asymptotic power, and N⋆.
pub fn power_sweep(cfg: &PowerSweepConfig) -> Result<PowerSweep> {
    check_sorted(&cfg.n_values)?;
    let cache = TabulationCache::default();
    let analysis = Arc::new(Analysis::with_cache(cfg.params, cfg.noise, &cache)?);
    let exp_cfg = ExperimentConfig {
        params: cfg.params,
        noise: cfg.noise,
        statistic: cfg.statistic,
        runs: cfg.runs,
        measurements: 1,
        base_seed: cfg.base_seed,
        perturbation: cfg.window.clone(),
    };
    let window = cfg.window.clone().unwrap_or(Perturbation { targets: vec![], fraction: 0.0 });
    let nominal_slot = window.nominal_index();
    let m = analysis.moments(cfg.statistic)?;
    let band = window_moments(&analysis, cfg.statistic, &window, &cache)?;

    let mut exp = WindowExperiment::new(&exp_cfg, analysis.clone(), &cache)?;
    let mut rows = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        exp.advance_to(n)?;
        let powers = exp.powers(&cfg.search)?;
        let worst = exp.worst_power(&cfg.search)?;
        let (m0, v0) = mean_var(&exp.z_values(nominal_slot, Hypothesis::Classical));
        let (m1, v1) = mean_var(&exp.z_values(nominal_slot, Hypothesis::Quantum));
        let asym: Vec<f64> = band.iter().map(|b| asymptotic_power(b, n, cfg.search.n_sigma)).collect();
        let nf = n as f64;
        rows.push(PowerSweepRow {
            n,
            mc_mean_h0: m0,
            mc_std_h0: v0.sqrt(),
            mc_mean_h1: m1,
            mc_std_h1: v1.sqrt(),
            pop_mean_h0: m.mean0,
            pop_std_h0: (m.var0 / nf).sqrt(),
            pop_mean_h1: m.mean1,
            pop_std_h1: (m.var1 / nf).sqrt(),
            power_point: powers[nominal_slot].power.power_point,
            power_low: powers[nominal_slot].power.power_wilson_low,
            worst_power_low: worst.power.power_wilson_low,
            worst_point: worst.window_point,
            asymptotic_power: asymptotic_power(&m, n, cfg.search.n_sigma),
            asymptotic_power_window_min: asym.iter().cloned().fold(f64::INFINITY, f64::min),
            asymptotic_power_window_max: asym.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    let mut probe = WindowExperiment::new(&exp_cfg, analysis, &cache)?;
    let nstar = nstar_search(&mut probe, &cfg.search)?;
    let nstar_asymptotic = nstar_asymptotic(&m, cfg.search.n_sigma, cfg.search.target).ok();
    Ok(PowerSweep { config: cfg.clone(), moments: m, rows, nstar, nstar_asymptotic })
}

impl PowerSweep {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = commented_csv(
            out,
            &[
                comment("config", &self.config),
                comment("per_sample_moments", &self.moments),
                comment("nstar", &self.nstar),
                comment("nstar_asymptotic", &self.nstar_asymptotic),
                ("columns".into(), "mc_* Monte-Carlo at the nominal point; pop_* quadrature; \
                    power_* Wilson at the nominal point; worst_* lowest over the window; \
                    asymptotic_power_window_* band over the window"
                    .into()),
            ],
        )?;
        w.write_record([
            "N",
            "mc_mean_h0",
            "mc_std_h0",
            "mc_mean_h1",
            "mc_std_h1",
            "pop_mean_h0",
            "pop_std_h0",
            "pop_mean_h1",
            "pop_std_h1",
            "power_point",
            "power_low",
            "worst_power_low",
            "worst_point",
            "asymptotic_power",
            "asymptotic_power_window_min",
            "asymptotic_power_window_max",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                num(r.mc_mean_h0),
                num(r.mc_std_h0),
                num(r.mc_mean_h1),
                num(r.mc_std_h1),
                num(r.pop_mean_h0),
                num(r.pop_std_h0),
                num(r.pop_mean_h1),
                num(r.pop_std_h1),
                num(r.power_point),
                num(r.power_low),
                num(r.worst_power_low),
                r.worst_point.to_string(),
                num(r.asymptotic_power),
                num(r.asymptotic_power_window_min),
                num(r.asymptotic_power_window_max),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NStarSweepConfig {
    /// `theta1`, `theta3` are held; `theta2` follows each `sigma2`.
    pub params: CubicParams,
    pub noise: NoiseParams,
    pub sigma2: Vec<f64>,
    pub statistics: Vec<Statistic>,
    pub runs: u64,
    pub base_seed: u64,
    pub window: Option<Perturbation>,
    pub search: NStarSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NStarSweepRow {
    pub sigma2: f64,
    pub statistic: Statistic,
    pub nstar: NStar,
    pub nstar_asymptotic: Option<u64>,
    /// Why no search ran, if none did.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NStarSweep {
    pub config: NStarSweepConfig,
    pub rows: Vec<NStarSweepRow>,
}

/// N⋆ for each statistic along a decoherence sweep. Points whose nominal
/// asymptotic N⋆ exceeds the cap, or that have no power at all, are
/// reported unreachable without a Monte-Carlo search.
pub fn nstar_sweep(cfg: &NStarSweepConfig) -> Result<NStarSweep> {
    let jobs: Vec<(f64, Statistic)> =
        cfg.sigma2.iter().flat_map(|&s2| cfg.statistics.iter().map(move |&st| (s2, st))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(s2, statistic)| -> Result<NStarSweepRow> {
            let params = cfg.params.with_sigma2(s2, cfg.noise)?;
            let cache = TabulationCache::default();
            let analysis = Arc::new(Analysis::with_cache(params, cfg.noise, &cache)?);
            let m = analysis.moments(statistic)?;
            let asym = nstar_asymptotic(&m, cfg.search.n_sigma, cfg.search.target).ok();
            let unreachable = NStar::Unreachable { cap: cfg.search.n_cap };
            let skipped = match asym {
                None => Some("no power: population means coincide".to_string()),
                Some(n) if n > cfg.search.n_cap => Some(format!("asymptotic N* {n} exceeds the cap")),
                Some(_) => None,
            };
            let nstar = if skipped.is_some() {
                unreachable
            } else {
                let exp_cfg = ExperimentConfig {
                    params,
                    noise: cfg.noise,
                    statistic,
                    runs: cfg.runs,
                    measurements: 1,
                    base_seed: cfg.base_seed,
                    perturbation: cfg.window.clone(),
                };
                let mut probe = WindowExperiment::new(&exp_cfg, analysis, &cache)?;
                nstar_search(&mut probe, &cfg.search)?
            };
            Ok(NStarSweepRow { sigma2: s2, statistic, nstar, nstar_asymptotic: asym, skipped })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NStarSweep { config: cfg.clone(), rows })
}

impl NStarSweep {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = commented_csv(out, &[comment("config", &self.config)])?;
        w.write_record([
            "sigma2",
            "statistic",
            "status",
            "nstar",
            "nstar_asymptotic",
            "worst_point",
            "worst_power_low",
            "note",
        ])?;
        for r in &self.rows {
            let (status, n, point, low) = match r.nstar {
                NStar::Found { n, worst } => (
                    "found",
                    n.to_string(),
                    worst.window_point.to_string(),
                    num(worst.power.power_wilson_low),
                ),
                NStar::Unreachable { .. } => ("unreachable", String::new(), String::new(), String::new()),
            };
            w.write_record([
                num(r.sigma2),
                r.statistic.label().to_string(),
                status.to_string(),
                n,
                r.nstar_asymptotic.map(|v| v.to_string()).unwrap_or_default(),
                point,
                low,
                r.skipped.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceSweepConfig {
    /// `theta1`, `theta3` are held; `theta2` follows each `sigma2`.
    pub params: CubicParams,
    pub noise: NoiseParams,
    pub sigma2: Vec<f64>,
    /// Normalization point.
    pub reference_sigma2: f64,
    pub wigner_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceValues {
    /// Population visibility of quantum data in its own fringe bins; 0
    /// without fringes.
    pub visibility: f64,
    pub negativity: f64,
    pub min_wigner: f64,
    pub jeffreys: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceRow {
    pub sigma2: f64,
    pub raw: DecoherenceValues,
    /// Each value divided by its value at the reference point.
    pub normalized: DecoherenceValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceSweep {
    pub config: DecoherenceSweepConfig,
    pub reference: DecoherenceValues,
    pub rows: Vec<DecoherenceRow>,
}

/// Two-mode state at decoherence level `sigma2`. The phase-space picture
/// carries the whole momentum variance, readout noise included.
pub fn decoherence_state(params: &CubicParams, noise: NoiseParams, sigma2: f64) -> Result<TwoModeCubicCF> {
    let p = params.with_sigma2(sigma2, noise)?;
    TwoModeCubicCF::from_cubic(&CubicParams::new(p.theta1, p.theta2 + noise.sigma_r2, p.theta3))
}

/// Visibility, Wigner negativity, most negative Wigner value and Jeffreys
/// divergence at one decoherence level.
pub fn decoherence_point(params: &CubicParams, noise: NoiseParams, sigma2: f64, rows: usize) -> Result<DecoherenceValues> {
    let p = params.with_sigma2(sigma2, noise)?;
    let analysis = Analysis::new(p, noise)?;
    let visibility = analysis.moments(Statistic::Visibility)?.mean1;
    let state = decoherence_state(params, noise, sigma2)?;
    let table = wigner_tabulate(&state, Hypothesis::Quantum, WignerGrids::auto(&state, rows)?)?;
    Ok(DecoherenceValues {
        visibility,
        negativity: table.negativity(),
        min_wigner: table.min_value(),
        jeffreys: jeffreys(&analysis.d1, &analysis.d0)?,
    })
}

pub fn decoherence_sweep(cfg: &DecoherenceSweepConfig) -> Result<DecoherenceSweep> {
    let point = |s2: f64| decoherence_point(&cfg.params, cfg.noise, s2, cfg.wigner_rows);
    let reference = point(cfg.reference_sigma2)?;
    let rows = cfg
        .sigma2
        .par_iter()
        .map(|&s2| -> Result<DecoherenceRow> {
            let raw = if s2 == cfg.reference_sigma2 { reference } else { point(s2)? };
            let ratio = |a: f64, b: f64| if b != 0.0 { a / b } else { f64::NAN };
            Ok(DecoherenceRow {
                sigma2: s2,
                raw,
                normalized: DecoherenceValues {
                    visibility: ratio(raw.visibility, reference.visibility),
                    negativity: ratio(raw.negativity, reference.negativity),
                    min_wigner: ratio(raw.min_wigner, reference.min_wigner),
                    jeffreys: ratio(raw.jeffreys, reference.jeffreys),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecoherenceSweep { config: cfg.clone(), reference, rows })
}

impl DecoherenceSweep {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = commented_csv(
            out,
            &[
                comment("config", &self.config),
                comment("reference", &self.reference),
                ("columns".into(), "*_norm divided by the value at reference_sigma2; negativity is int|W| - 1".into()),
            ],
        )?;
        w.write_record([
            "sigma2",
            "visibility",
            "negativity",
            "min_wigner",
            "jeffreys",
            "visibility_norm",
            "negativity_norm",
            "min_wigner_norm",
            "jeffreys_norm",
        ])?;
        for r in &self.rows {
            w.write_record([
                num(r.sigma2),
                num(r.raw.visibility),
                num(r.raw.negativity),
                num(r.raw.min_wigner),
                num(r.raw.jeffreys),
                num(r.normalized.visibility),
                num(r.normalized.negativity),
                num(r.normalized.min_wigner),
                num(r.normalized.jeffreys),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
