//! `macrocert`: figure data and custom runs for the cubic-phase
//! macroscopicity test.
//!
//! Every command writes into `--out` and prints a JSON summary on stdout.
//! Failures print `{"error": ..., "kind": ...}` on stderr and exit nonzero.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use macrocert::dist::{sample_classical_exact, tabulate_auto};
use macrocert::export::{commented_csv, comment, num};
use macrocert::figures::{
    decoherence_state, decoherence_sweep, linspace, nstar_sweep, power_curve, power_sweep,
    DecoherenceSweepConfig, NStarSweepConfig, PowerSweepConfig,
};
use macrocert::montecarlo::{run_experiment_at, ExperimentConfig, Perturbation, Statistic};
use macrocert::params::{ParamsDocument, ResolvedParams, TABLE1_LAMBDA};
use macrocert::power::NStarSearch;
use macrocert::wigner::{wigner_tabulate, WignerGrids};
use macrocert::{CubicParams, Hypothesis, NoiseParams};

#[derive(Parser)]
#[command(name = "macrocert", version, about = "Figure data for the cubic-phase macroscopicity test")]
struct Cli {
    /// JSON parameter document (see README). Overrides --preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Built-in parameter set used when no --config is given.
    #[arg(long, global = true, value_enum, default_value_t = Preset::Table1)]
    preset: Preset,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Base seed of every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Table1,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum StatArg {
    Lrt,
    Visibility,
    Both,
}

impl StatArg {
    fn statistics(self) -> Vec<Statistic> {
        match self {
            StatArg::Lrt => vec![Statistic::Lrt],
            StatArg::Visibility => vec![Statistic::Visibility],
            StatArg::Both => vec![Statistic::Visibility, Statistic::Lrt],
        }
    }

    fn single(self) -> anyhow::Result<Statistic> {
        match self {
            StatArg::Lrt => Ok(Statistic::Lrt),
            StatArg::Visibility => Ok(Statistic::Visibility),
            StatArg::Both => bail!(usage("this command takes a single statistic")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum HypArg {
    Classical,
    Quantum,
    Both,
}

impl HypArg {
    fn hypotheses(self) -> Vec<Hypothesis> {
        match self {
            HypArg::Classical => vec![Hypothesis::Classical],
            HypArg::Quantum => vec![Hypothesis::Quantum],
            HypArg::Both => Hypothesis::BOTH.to_vec(),
        }
    }
}

#[derive(clap::Args, Clone)]
struct SearchArgs {
    /// Largest N tried by the N⋆ search.
    #[arg(long)]
    n_cap: Option<u64>,

    /// Analyse only the nominal point instead of the ±5 % robustness window.
    #[arg(long)]
    no_window: bool,
}

impl SearchArgs {
    fn search(&self, default_cap: u64) -> NStarSearch {
        NStarSearch { n_cap: self.n_cap.unwrap_or(default_cap), ..NStarSearch::default() }
    }

    fn window(&self) -> Option<Perturbation> {
        (!self.no_window).then(Perturbation::standard)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the parameters and report derived quantities.
    Validate,
    /// Tabulate pdf and cdf of the position distribution.
    Tabulate {
        #[arg(long, value_enum, default_value_t = HypArg::Both)]
        hypothesis: HypArg,
    },
    /// Draw measurement outcomes.
    Sample {
        #[arg(long, value_enum, default_value_t = HypArg::Quantum)]
        hypothesis: HypArg,
        /// Number of draws.
        #[arg(long, default_value_t = 10_000)]
        n_meas: u64,
        /// Use the exact Gaussian-mixture sampler for the classical model.
        #[arg(long)]
        exact: bool,
    },
    /// One Monte-Carlo ensemble of the test statistic under both hypotheses.
    Run {
        #[arg(long, value_enum, default_value_t = StatArg::Lrt)]
        statistic: StatArg,
        #[arg(long, default_value_t = 5000)]
        m_runs: u64,
        #[arg(long, default_value_t = 1500)]
        n_meas: u64,
        /// Draw the data at this point of the standard ±5 % window (0..9,
        /// 4 is nominal) and analyse it nominally.
        #[arg(long)]
        window_point: Option<usize>,
    },
    /// Worst-window conservative power at each N of the sweep.
    PowerCurve {
        #[arg(long, value_enum, default_value_t = StatArg::Lrt)]
        statistic: StatArg,
        #[arg(long, default_value_t = 5000)]
        m_runs: u64,
        /// N values, "lo:hi:steps".
        #[arg(long, default_value = "100:3000:30")]
        sweep: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Power versus N for the preset (figure 2a).
    Fig2a {
        #[arg(long, value_enum, default_value_t = StatArg::Lrt)]
        statistic: StatArg,
        #[arg(long, default_value_t = 5000)]
        m_runs: u64,
        /// N values, "lo:hi:steps".
        #[arg(long, default_value = "100:3000:30")]
        sweep: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// N⋆ versus decoherence for both statistics (figure 2b).
    Fig2b {
        #[arg(long, value_enum, default_value_t = StatArg::Both)]
        statistic: StatArg,
        #[arg(long, default_value_t = 2000)]
        m_runs: u64,
        /// sigma² values in x_zpf² (λ-scaled), "lo:hi:steps".
        #[arg(long, default_value = "1:13:7")]
        sweep: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Visibility, Wigner negativity and Jeffreys divergence versus
    /// decoherence, normalized at sigma² = 1 (figure 3).
    Fig3 {
        /// sigma² values in x_zpf² (λ-scaled), "lo:hi:steps".
        #[arg(long, default_value = "1:40:40")]
        sweep: String,
        /// Normalization point.
        #[arg(long, default_value_t = 1.0)]
        reference: f64,
        /// Position rows of each Wigner table.
        #[arg(long, default_value_t = 65)]
        wigner_rows: usize,
        /// Also export the Wigner table at these sigma² values (comma list).
        #[arg(long, value_delimiter = ',')]
        wigner_at: Vec<f64>,
        /// Keep every k-th node in both directions of exported tables.
        #[arg(long, default_value_t = 64)]
        wigner_stride: usize,
    },
}

/// An error that should be reported as a usage problem.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> Usage {
    Usage(msg.into())
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    if let Some(e) = e.downcast_ref::<macrocert::Error>() {
        e.kind()
    } else if e.downcast_ref::<macrocert::Violation>().is_some() {
        "invalid_params"
    } else if e.downcast_ref::<Usage>().is_some() {
        "usage"
    } else if e.downcast_ref::<std::io::Error>().is_some() {
        "io"
    } else {
        "other"
    }
}

fn report(kind: &str, msg: &str) {
    eprintln!("{}", json!({ "error": msg, "kind": kind }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            report("usage", e.to_string().trim_end());
            return ExitCode::from(2);
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            report(error_kind(&e), &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}

/// Parameters plus where they came from.
struct Inputs {
    resolved: ResolvedParams,
    source: String,
}

fn load(cli: &Cli) -> anyhow::Result<Inputs> {
    if let Some(path) = &cli.config {
        let doc = ParamsDocument::from_path(path)
            .with_context(|| format!("reading {}", path.display()))?;
        return Ok(Inputs { resolved: doc.resolve()?, source: path.display().to_string() });
    }
    match cli.preset {
        Preset::Table1 => Ok(Inputs {
            resolved: ResolvedParams {
                params: CubicParams::table1(),
                noise: NoiseParams::default(),
                lambda: Some(TABLE1_LAMBDA),
            },
            source: "preset:table1".into(),
        }),
    }
}

fn parse_sweep(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        bail!(usage(format!("sweep must be lo:hi:steps, got {text:?}")));
    };
    let lo: f64 = lo.trim().parse().map_err(|_| usage(format!("bad sweep start {lo:?}")))?;
    let hi: f64 = hi.trim().parse().map_err(|_| usage(format!("bad sweep end {hi:?}")))?;
    let steps: usize = steps.trim().parse().map_err(|_| usage(format!("bad sweep steps {steps:?}")))?;
    if steps == 0 || !lo.is_finite() || !hi.is_finite() || (steps > 1 && hi <= lo) {
        bail!(usage(format!("sweep {text:?} is empty or decreasing")));
    }
    Ok(linspace(lo, hi, steps))
}

fn parse_n_sweep(text: &str) -> anyhow::Result<Vec<u64>> {
    let mut ns: Vec<u64> = Vec::new();
    for x in parse_sweep(text)? {
        if x < 1.0 {
            bail!(usage("N values must be at least 1"));
        }
        let n = x.round() as u64;
        if ns.last() != Some(&n) {
            ns.push(n);
        }
    }
    Ok(ns)
}

fn create(out: &Path, name: &str) -> anyhow::Result<(BufWriter<File>, String)> {
    let path = out.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((BufWriter::new(f), path.display().to_string()))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> anyhow::Result<String> {
    let (mut w, path) = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

fn execute(cli: &Cli) -> anyhow::Result<serde_json::Value> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let inputs = load(cli)?;
    let ResolvedParams { params, noise, lambda } = inputs.resolved;

    if let Command::Validate = cli.command {
        params.validate()?;
        noise.validate()?;
        return Ok(json!({
            "command": "validate",
            "source": inputs.source,
            "valid": true,
            "params": params,
            "noise": noise,
            "lambda": lambda,
            "sigma2": params.effective_sigma2(noise)?,
            "purity": params.purity(),
            "positivity_ratio": params.positivity_ratio(),
        }));
    }

    let out = cli.out.as_path();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let seed = cli.seed;
    let echo = |cmd: &str| {
        vec![
            comment("command", &cmd),
            comment("source", &inputs.source),
            comment("params", &params),
            comment("noise", &noise),
            comment("seed", &seed),
        ]
    };

    match &cli.command {
        Command::Validate => unreachable!(),
        Command::Tabulate { hypothesis } => {
            let mut files = Vec::new();
            for s in hypothesis.hypotheses() {
                let d = tabulate_auto(&params, s, noise)?;
                let (f, path) = create(out, &format!("tabulate_{}.csv", s.label()))?;
                let mut c = echo("tabulate");
                c.push(comment("hypothesis", &s.label()));
                c.push(comment("grid", &d.grid));
                c.push(comment("diagnostics", &d.diagnostics));
                let mut w = commented_csv(f, &c)?;
                d.write_csv(&mut w)?;
                w.flush()?;
                files.push(path);
            }
            Ok(json!({ "command": "tabulate", "files": files }))
        }
        Command::Sample { hypothesis, n_meas, exact } => {
            let count = usize::try_from(*n_meas)?;
            let mut files = Vec::new();
            for s in hypothesis.hypotheses() {
                let y = if *exact && s == Hypothesis::Classical {
                    sample_classical_exact(&params, noise, seed, count)?
                } else {
                    tabulate_auto(&params, s, noise)?.sample(seed, count)
                };
                let (f, path) = create(out, &format!("sample_{}.csv", s.label()))?;
                let mut c = echo("sample");
                c.push(comment("hypothesis", &s.label()));
                c.push(comment("exact", &(*exact && s == Hypothesis::Classical)));
                let mut w = commented_csv(f, &c)?;
                w.write_record(["index", "y"])?;
                for (i, v) in y.iter().enumerate() {
                    w.write_record([i.to_string(), num(*v)])?;
                }
                w.flush()?;
                files.push(path);
            }
            Ok(json!({ "command": "sample", "files": files }))
        }
        Command::Run { statistic, m_runs, n_meas, window_point } => {
            let statistic = statistic.single()?;
            let cfg = ExperimentConfig {
                params,
                noise,
                statistic,
                runs: *m_runs,
                measurements: *n_meas,
                base_seed: seed,
                perturbation: window_point.map(|_| Perturbation::standard()),
            };
            let ens = run_experiment_at(&cfg, window_point.unwrap_or(0))?;
            let (f, csv_path) = create(out, &format!("run_{}.csv", statistic.label()))?;
            ens.write_csv(f)?;
            let summary = ens.summary();
            let json_path = write_json(out, &format!("run_{}.json", statistic.label()), &summary)?;
            Ok(json!({ "command": "run", "files": [csv_path, json_path], "summary": summary }))
        }
        Command::PowerCurve { statistic, m_runs, sweep, search } => {
            let statistic = statistic.single()?;
            let ns = parse_n_sweep(sweep)?;
            let cfg = ExperimentConfig {
                params,
                noise,
                statistic,
                runs: *m_runs,
                measurements: 1,
                base_seed: seed,
                perturbation: search.window(),
            };
            let records = power_curve(&cfg, &ns, &search.search(1 << 20))?;
            let stem = format!("power_curve_{}", statistic.label());
            let (f, csv_path) = create(out, &format!("{stem}.csv"))?;
            let mut c = echo("power-curve");
            c.push(comment("config", &cfg));
            let mut w = commented_csv(f, &c)?;
            w.write_record(["test", "N", "sigma2", "alpha", "power_low", "power_point", "M", "window_point"])?;
            for r in &records {
                w.write_record([
                    r.test.label().to_string(),
                    r.n.to_string(),
                    num(r.sigma2),
                    num(r.alpha),
                    num(r.power_low),
                    num(r.power_point),
                    r.m.to_string(),
                    r.window_point.to_string(),
                ])?;
            }
            w.flush()?;
            let json_path = write_json(out, &format!("{stem}.json"), &records)?;
            Ok(json!({ "command": "power-curve", "files": [csv_path, json_path] }))
        }
        Command::Fig2a { statistic, m_runs, sweep, search } => {
            let cfg = PowerSweepConfig {
                params,
                noise,
                statistic: statistic.single()?,
                runs: *m_runs,
                n_values: parse_n_sweep(sweep)?,
                base_seed: seed,
                window: search.window(),
                search: search.search(1 << 20),
            };
            let result = power_sweep(&cfg)?;
            let (f, csv_path) = create(out, "fig2a.csv")?;
            result.write_csv(f)?;
            let summary = json!({
                "config": cfg,
                "source": inputs.source,
                "moments": result.moments,
                "nstar": result.nstar,
                "nstar_asymptotic": result.nstar_asymptotic,
            });
            let json_path = write_json(out, "fig2a.json", &summary)?;
            Ok(json!({
                "command": "fig2a",
                "files": [csv_path, json_path],
                "nstar": result.nstar.value(),
                "nstar_asymptotic": result.nstar_asymptotic,
            }))
        }
        Command::Fig2b { statistic, m_runs, sweep, search } => {
            let cfg = NStarSweepConfig {
                params,
                noise,
                sigma2: parse_sweep(sweep)?,
                statistics: statistic.statistics(),
                runs: *m_runs,
                base_seed: seed,
                window: search.window(),
                search: search.search(1 << 17),
            };
            let result = nstar_sweep(&cfg)?;
            let (f, csv_path) = create(out, "fig2b.csv")?;
            result.write_csv(f)?;
            let json_path = write_json(out, "fig2b.json", &json!({ "source": inputs.source, "sweep": result }))?;
            Ok(json!({ "command": "fig2b", "files": [csv_path, json_path] }))
        }
        Command::Fig3 { sweep, reference, wigner_rows, wigner_at, wigner_stride } => {
            let cfg = DecoherenceSweepConfig {
                params,
                noise,
                sigma2: parse_sweep(sweep)?,
                reference_sigma2: *reference,
                wigner_rows: *wigner_rows,
            };
            let result = decoherence_sweep(&cfg)?;
            let (f, csv_path) = create(out, "fig3.csv")?;
            result.write_csv(f)?;
            let json_path = write_json(out, "fig3.json", &json!({ "source": inputs.source, "sweep": result }))?;
            let mut files = vec![csv_path, json_path];
            for &s2 in wigner_at {
                let state = decoherence_state(&params, noise, s2)?;
                let table = wigner_tabulate(&state, Hypothesis::Quantum, WignerGrids::auto(&state, *wigner_rows)?)?;
                let stem = format!("wigner_sigma2_{}", num(s2));
                let mut c = echo("fig3");
                c.push(comment("sigma2", &s2));
                c.push(comment("negativity", &table.negativity()));
                c.push(comment("stride", wigner_stride));
                for ext in ["csv", "txt"] {
                    let (mut f, path) = create(out, &format!("{stem}.{ext}"))?;
                    for (k, v) in &c {
                        writeln!(f, "# {k} = {v}")?;
                    }
                    if ext == "csv" {
                        table.write_csv(&mut f, *wigner_stride)?;
                    } else {
                        table.write_grid(&mut f, *wigner_stride)?;
                    }
                    f.flush()?;
                    files.push(path);
                }
            }
            Ok(json!({ "command": "fig3", "files": files }))
        }
    }
}
