//! Monte-Carlo experiments: `M` runs of `N` measurements under each
//! hypothesis, sampled from (possibly perturbed) tabulations and analysed
//! against the nominal pair.
//!
//! Every run owns a random stream seeded from `(base_seed, hypothesis, run)`.
//! Streams are resumable, so growing `N` only draws the new measurements, and
//! the state after `N` draws does not depend on how `N` was reached. The
//! window point does not enter the seed, which gives common random numbers
//! across the robustness window.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfunc::Hypothesis;
use crate::dist::{tabulate_auto, TabulatedDistribution};
use crate::error::{Error, Result};
use crate::export::{comment, commented_csv, num};
use crate::params::{CubicParams, NoiseParams};
use crate::power::{ensemble_power, mean_var, NStarSearch, PowerProbe, WindowPower};
use crate::stats::{
    cell_probabilities, find_fringes, log_ratio, log_ratio_moments, lrt_moments, visibility_from_counts,
    visibility_test_moments, FringeIntervals, StatisticMoments, TestStatisticMoments,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Visibility,
    Lrt,
}

impl Statistic {
    pub fn label(self) -> &'static str {
        match self {
            Statistic::Visibility => "visibility",
            Statistic::Lrt => "lrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbTarget {
    Sigma2,
    Theta3,
}

/// Robustness window: each target takes the factors `1-f, 1, 1+f`, giving
/// `3^targets` grid points. Point `i` uses digit `(i / 3^k) % 3` for target
/// `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub targets: Vec<PerturbTarget>,
    pub fraction: f64,
}

impl Perturbation {
    /// `±5%` in `sigma^2` and `theta3`.
    pub fn standard() -> Perturbation {
        Perturbation { targets: vec![PerturbTarget::Sigma2, PerturbTarget::Theta3], fraction: 0.05 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fraction >= 0.0 && self.fraction < 0.5) {
            return Err(Error::InvalidArgument(format!("window fraction {} outside [0, 0.5)", self.fraction)));
        }
        let mut seen = self.targets.clone();
        seen.sort_by_key(|t| *t as u8);
        seen.dedup();
        if seen.len() != self.targets.len() {
            return Err(Error::InvalidArgument("repeated window target".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> usize {
        3usize.pow(self.targets.len() as u32)
    }

    /// Index of the all-nominal point.
    pub fn nominal_index(&self) -> usize {
        (0..self.targets.len()).map(|k| 3usize.pow(k as u32)).sum()
    }

    /// Multiplicative factor of every target at `grid_index`.
    pub fn factors(&self, grid_index: usize) -> Vec<(PerturbTarget, f64)> {
        self.targets
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let digit = (grid_index / 3usize.pow(k as u32)) % 3;
                (t, 1.0 + (digit as f64 - 1.0) * self.fraction)
            })
            .collect()
    }
}

/// Parameters at one window point. `theta3` is scaled first; a `sigma2`
/// target then sets `theta2` so that the effective variance equals the
/// factor times its nominal value.
pub fn perturb(
    params: &CubicParams,
    noise: NoiseParams,
    targets: &[PerturbTarget],
    fraction: f64,
    grid_index: usize,
) -> Result<(CubicParams, NoiseParams)> {
    let window = Perturbation { targets: targets.to_vec(), fraction };
    window.validate()?;
    if grid_index >= window.points() {
        return Err(Error::InvalidArgument(format!("window point {grid_index} of {}", window.points())));
    }
    let factors = window.factors(grid_index);
    let factor = |t: PerturbTarget| factors.iter().find(|f| f.0 == t).map(|f| f.1);
    let mut p = *params;
    if let Some(f) = factor(PerturbTarget::Theta3) {
        p.theta3 *= f;
    }
    if let Some(f) = factor(PerturbTarget::Sigma2) {
        if f != 1.0 || p.theta3 != params.theta3 {
            let nominal = params.effective_sigma2(noise)?;
            p = p.with_sigma2(f * nominal, noise)?;
        }
    }
    p.validate()?;
    Ok((p, noise))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: CubicParams,
    pub noise: NoiseParams,
    pub statistic: Statistic,
    /// Runs per hypothesis (`M`).
    pub runs: u64,
    /// Measurements per run (`N`).
    pub measurements: u64,
    pub base_seed: u64,
    pub perturbation: Option<Perturbation>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.noise.validate()?;
        if self.runs == 0 || self.measurements == 0 {
            return Err(Error::InvalidArgument("runs and measurements must be at least 1".into()));
        }
        if let Some(w) = &self.perturbation {
            w.validate()?;
        }
        Ok(())
    }

    fn window(&self) -> Perturbation {
        self.perturbation.clone().unwrap_or(Perturbation { targets: vec![], fraction: 0.0 })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit seed of one run: nested SplitMix64 over
/// `(base_seed, hypothesis, run)`.
pub fn derive_seed(base_seed: u64, hypothesis: Hypothesis, run: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ hypothesis.index()) ^ run)
}

/// Nominal analysis pair and the visibility bins derived from it.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub params: CubicParams,
    pub noise: NoiseParams,
    pub d0: Arc<TabulatedDistribution>,
    pub d1: Arc<TabulatedDistribution>,
    pub fringes: Option<FringeIntervals>,
}

impl Analysis {
    pub fn new(params: CubicParams, noise: NoiseParams) -> Result<Analysis> {
        Analysis::with_cache(params, noise, &TabulationCache::default())
    }

    pub fn with_cache(params: CubicParams, noise: NoiseParams, cache: &TabulationCache) -> Result<Analysis> {
        let d0 = cache.get(&params, Hypothesis::Classical, noise)?;
        let d1 = cache.get(&params, Hypothesis::Quantum, noise)?;
        let fringes = find_fringes(&d1);
        Ok(Analysis { params, noise, d0, d1, fringes })
    }

    pub fn dist(&self, s: Hypothesis) -> &TabulatedDistribution {
        match s {
            Hypothesis::Classical => &self.d0,
            Hypothesis::Quantum => &self.d1,
        }
    }

    /// Population moments of the statistic when data follow the nominal
    /// pair. Without fringes the visibility is identically zero.
    pub fn moments(&self, statistic: Statistic) -> Result<TestStatisticMoments> {
        match statistic {
            Statistic::Lrt => lrt_moments(&self.d0, &self.d1),
            Statistic::Visibility => match &self.fringes {
                Some(f) => visibility_test_moments(&self.d0, &self.d1, f),
                None => Ok(TestStatisticMoments { mean0: 0.0, var0: 0.0, mean1: 0.0, var1: 0.0 }),
            },
        }
    }

    /// Moments of the statistic for data drawn from `sample` while the
    /// analysis stays nominal.
    pub fn mismatched_moments(&self, statistic: Statistic, sample: &TabulatedDistribution) -> Result<StatisticMoments> {
        match statistic {
            Statistic::Lrt => Ok(log_ratio_moments(sample, &self.d0, &self.d1)),
            Statistic::Visibility => match &self.fringes {
                Some(f) => {
                    let (a, b) = cell_probabilities(sample, f);
                    crate::stats::visibility_moments_from_cells(a, b)
                }
                None => Ok(StatisticMoments { mean: 0.0, var: 0.0 }),
            },
        }
    }
}

/// Tabulations shared across window points and sweep steps, keyed by the
/// exact bit patterns of their inputs.
#[derive(Debug, Default)]
pub struct TabulationCache {
    map: Mutex<HashMap<[u64; 5], Arc<TabulatedDistribution>>>,
}

impl TabulationCache {
    pub fn get(&self, p: &CubicParams, s: Hypothesis, noise: NoiseParams) -> Result<Arc<TabulatedDistribution>> {
        let key = [p.theta1.to_bits(), p.theta2.to_bits(), p.theta3.to_bits(), noise.sigma_r2.to_bits(), s.index()];
        if let Some(d) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(d.clone());
        }
        let d = Arc::new(tabulate_auto(p, s, noise)?);
        self.map.lock().expect("cache lock").entry(key).or_insert(d.clone());
        Ok(d)
    }
}

/// What a run draws from at one window point.
#[derive(Debug, Clone)]
enum Source {
    /// Measurements, scored by the nominal log-likelihood ratio.
    Positions(Arc<TabulatedDistribution>),
    /// Bin membership only: probabilities of the max and min bins.
    Bins { q_max: f64, q_min: f64 },
    /// No fringes: the visibility is zero whatever the data.
    Nothing,
}

#[derive(Debug, Clone)]
struct Stream {
    rng: ChaCha8Rng,
    n: u64,
    sum: f64,
    n_max: u64,
    n_min: u64,
    clamped: u64,
}

impl Stream {
    fn new(seed: u64) -> Stream {
        Stream { rng: ChaCha8Rng::seed_from_u64(seed), n: 0, sum: 0.0, n_max: 0, n_min: 0, clamped: 0 }
    }

    fn advance(&mut self, to: u64, src: &Source, a: &Analysis) {
        match src {
            Source::Positions(d) => {
                for _ in self.n..to {
                    let y = d.draw(&mut self.rng);
                    let (l, c) = log_ratio(y, &a.d0, &a.d1);
                    self.sum += l;
                    self.clamped += c as u64;
                }
            }
            Source::Bins { q_max, q_min } => {
                let edge = q_max + q_min;
                for _ in self.n..to {
                    let u: f64 = self.rng.random();
                    if u < *q_max {
                        self.n_max += 1;
                    } else if u < edge {
                        self.n_min += 1;
                    }
                }
            }
            Source::Nothing => {}
        }
        self.n = self.n.max(to);
    }

    fn z(&self, statistic: Statistic) -> f64 {
        match statistic {
            Statistic::Lrt if self.n > 0 => self.sum / self.n as f64,
            Statistic::Lrt => 0.0,
            Statistic::Visibility => visibility_from_counts(self.n_max, self.n_min),
        }
    }
}

/// All runs of an experiment across its window points, at a common `N`.
#[derive(Debug, Clone)]
pub struct WindowExperiment {
    analysis: Arc<Analysis>,
    statistic: Statistic,
    window: Perturbation,
    points: Vec<usize>,
    /// `[classical, quantum]` source per listed point.
    sources: Arc<Vec<[Source; 2]>>,
    /// `streams[i][s][run]`
    streams: Vec<[Vec<Stream>; 2]>,
    n: u64,
    runs: u64,
    base_seed: u64,
}

impl WindowExperiment {
    /// Experiment over every window point of `cfg` (only the nominal point
    /// without a perturbation).
    pub fn new(cfg: &ExperimentConfig, analysis: Arc<Analysis>, cache: &TabulationCache) -> Result<WindowExperiment> {
        let window = cfg.window();
        let points = (0..window.points()).collect();
        WindowExperiment::at_points(cfg, analysis, cache, points)
    }

    pub fn at_points(
        cfg: &ExperimentConfig,
        analysis: Arc<Analysis>,
        cache: &TabulationCache,
        points: Vec<usize>,
    ) -> Result<WindowExperiment> {
        cfg.validate()?;
        let window = cfg.window();
        let sources = points
            .par_iter()
            .map(|&i| -> Result<[Source; 2]> {
                let (p, noise) = perturb(&analysis.params, analysis.noise, &window.targets, window.fraction, i)?;
                let make = |s: Hypothesis| -> Result<Source> {
                    Ok(match (cfg.statistic, &analysis.fringes) {
                        (Statistic::Visibility, None) => Source::Nothing,
                        (Statistic::Visibility, Some(f)) => {
                            let d = cache.get(&p, s, noise)?;
                            let (q_max, q_min) = cell_probabilities(&d, f);
                            Source::Bins { q_max, q_min }
                        }
                        (Statistic::Lrt, _) => Source::Positions(cache.get(&p, s, noise)?),
                    })
                };
                Ok([make(Hypothesis::Classical)?, make(Hypothesis::Quantum)?])
            })
            .collect::<Result<Vec<_>>>()?;
        let fresh = |s: Hypothesis| -> Vec<Stream> {
            (0..cfg.runs).map(|r| Stream::new(derive_seed(cfg.base_seed, s, r))).collect()
        };
        let streams = points.iter().map(|_| [fresh(Hypothesis::Classical), fresh(Hypothesis::Quantum)]).collect();
        Ok(WindowExperiment {
            analysis,
            statistic: cfg.statistic,
            window,
            points,
            sources: Arc::new(sources),
            streams,
            n: 0,
            runs: cfg.runs,
            base_seed: cfg.base_seed,
        })
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn window(&self) -> &Perturbation {
        &self.window
    }

    /// Statistic values of every run at point slot `slot`.
    pub fn z_values(&self, slot: usize, s: Hypothesis) -> Vec<f64> {
        self.streams[slot][s.index() as usize].iter().map(|st| st.z(self.statistic)).collect()
    }

    pub fn clamped(&self, slot: usize, s: Hypothesis) -> u64 {
        self.streams[slot][s.index() as usize].iter().map(|st| st.clamped).sum()
    }

    /// Conservative power at each point slot, in slot order.
    pub fn powers(&self, search: &NStarSearch) -> Result<Vec<WindowPower>> {
        (0..self.points.len())
            .map(|slot| {
                let z0 = self.z_values(slot, Hypothesis::Classical);
                let z1 = self.z_values(slot, Hypothesis::Quantum);
                let power = ensemble_power(&z0, &z1, search.n_sigma, search.eps)?;
                Ok(WindowPower { n: self.n, window_point: self.points[slot], power })
            })
            .collect()
    }

    /// Snapshot of the runs at one point slot.
    pub fn ensemble(&self, slot: usize, cfg: &ExperimentConfig) -> RunEnsemble {
        let seeds = |s: Hypothesis| (0..self.runs).map(|r| derive_seed(self.base_seed, s, r)).collect();
        let mut config = cfg.clone();
        config.measurements = self.n;
        RunEnsemble {
            config,
            window_point: self.points[slot],
            z_h0: self.z_values(slot, Hypothesis::Classical),
            z_h1: self.z_values(slot, Hypothesis::Quantum),
            seeds_h0: seeds(Hypothesis::Classical),
            seeds_h1: seeds(Hypothesis::Quantum),
            clamped_h0: self.clamped(slot, Hypothesis::Classical),
            clamped_h1: self.clamped(slot, Hypothesis::Quantum),
        }
    }
}

impl PowerProbe for WindowExperiment {
    fn measurements(&self) -> u64 {
        self.n
    }

    fn advance_to(&mut self, n: u64) -> Result<()> {
        if n < self.n {
            return Err(Error::InvalidArgument(format!("cannot rewind from N={} to N={n}", self.n)));
        }
        let sources = self.sources.clone();
        let a = self.analysis.clone();
        for (slot, pair) in self.streams.iter_mut().enumerate() {
            for (s, runs) in pair.iter_mut().enumerate() {
                let src = &sources[slot][s];
                runs.par_iter_mut().for_each(|st| st.advance(n, src, &a));
            }
        }
        self.n = n;
        Ok(())
    }

    /// Lowest conservative power; ties go to the lowest window index.
    fn worst_power(&self, search: &NStarSearch) -> Result<WindowPower> {
        let all = self.powers(search)?;
        let mut worst = all[0];
        for w in &all[1..] {
            if w.power.power_wilson_low < worst.power.power_wilson_low {
                worst = *w;
            }
        }
        Ok(worst)
    }

    fn runs(&self) -> u64 {
        self.runs
    }
}

/// Statistic values of all runs under both hypotheses at one window point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEnsemble {
    pub config: ExperimentConfig,
    pub window_point: usize,
    pub z_h0: Vec<f64>,
    pub z_h1: Vec<f64>,
    pub seeds_h0: Vec<u64>,
    pub seeds_h1: Vec<u64>,
    /// Evaluations where a density hit the floor, summed over runs.
    pub clamped_h0: u64,
    pub clamped_h1: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub runs: u64,
    pub measurements: u64,
    pub window_point: usize,
    pub mean_h0: f64,
    pub std_h0: f64,
    pub mean_h1: f64,
    pub std_h1: f64,
    pub clamped_h0: u64,
    pub clamped_h1: u64,
}

impl RunEnsemble {
    pub fn summary(&self) -> EnsembleSummary {
        let (m0, v0) = mean_var(&self.z_h0);
        let (m1, v1) = mean_var(&self.z_h1);
        EnsembleSummary {
            runs: self.config.runs,
            measurements: self.config.measurements,
            window_point: self.window_point,
            mean_h0: m0,
            std_h0: v0.sqrt(),
            mean_h1: m1,
            std_h1: v1.sqrt(),
            clamped_h0: self.clamped_h0,
            clamped_h1: self.clamped_h1,
        }
    }

    /// Columns `hypothesis, run, seed, Z`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = commented_csv(
            out,
            &[comment("config", &self.config), comment("window_point", &self.window_point)],
        )?;
        w.write_record(["hypothesis", "run", "seed", "Z"])?;
        for (s, z, seeds) in [
            (Hypothesis::Classical, &self.z_h0, &self.seeds_h0),
            (Hypothesis::Quantum, &self.z_h1, &self.seeds_h1),
        ] {
            for (i, (v, seed)) in z.iter().zip(seeds.iter()).enumerate() {
                w.write_record([s.label().to_string(), i.to_string(), seed.to_string(), num(*v)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the experiment at the nominal point.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunEnsemble> {
    let index = cfg.perturbation.as_ref().map_or(0, |w| w.nominal_index());
    run_experiment_at(cfg, index)
}

/// Runs the experiment with data drawn at window point `grid_index`,
/// analysed with the nominal distributions.
pub fn run_experiment_at(cfg: &ExperimentConfig, grid_index: usize) -> Result<RunEnsemble> {
    let cache = TabulationCache::default();
    let analysis = Arc::new(Analysis::with_cache(cfg.params, cfg.noise, &cache)?);
    let mut exp = WindowExperiment::at_points(cfg, analysis, &cache, vec![grid_index])?;
    exp.advance_to(cfg.measurements)?;
    Ok(exp.ensemble(0, cfg))
}

/// Empirical N⋆ over the robustness window of `cfg` (its `measurements` is
/// ignored).
pub fn nstar_empirical(cfg: &ExperimentConfig, search: &NStarSearch) -> Result<crate::power::NStar> {
    let cache = TabulationCache::default();
    let analysis = Arc::new(Analysis::with_cache(cfg.params, cfg.noise, &cache)?);
    nstar_with(cfg, analysis, &cache, search)
}

pub fn nstar_with(
    cfg: &ExperimentConfig,
    analysis: Arc<Analysis>,
    cache: &TabulationCache,
    search: &NStarSearch,
) -> Result<crate::power::NStar> {
    let mut exp = WindowExperiment::new(cfg, analysis, cache)?;
    crate::power::nstar_search(&mut exp, search)
}
