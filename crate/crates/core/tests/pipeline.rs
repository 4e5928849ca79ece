use macrocert::dist::tabulate_auto;
use macrocert::export::read_commented_csv;
use macrocert::montecarlo::{run_experiment, ExperimentConfig, Statistic};
use macrocert::params::ParamsDocument;
use macrocert::power::{ensemble_power, nstar_asymptotic, N_SIGMA, POWER_TARGET, WILSON_EPS};
use macrocert::stats::{lrt, lrt_moments};
use macrocert::{CubicParams, Hypothesis, NoiseParams};

fn table1_doc() -> ParamsDocument {
    ParamsDocument::from_json(r#"{"theta1": 69.04, "theta2": 6.001, "theta3": 34.52}"#).unwrap()
}

#[test]
fn document_in_zero_point_units_matches_scaled_preset() {
    let lambda = -59.67;
    let p = CubicParams::table1().scale(lambda).unwrap();
    let text = format!(
        r#"{{"theta1": {}, "theta2": {}, "theta3": {}, "sigma_r2": {}, "units": "xzpf", "lambda": {lambda}}}"#,
        p.theta1,
        p.theta2,
        p.theta3,
        0.3 * lambda * lambda
    );
    let r = ParamsDocument::from_json(&text).unwrap().resolve().unwrap();
    let t = CubicParams::table1();
    assert!((r.params.theta1 - t.theta1).abs() < 1e-12 * t.theta1);
    assert!((r.params.theta2 - t.theta2).abs() < 1e-12 * t.theta2);
    assert!((r.params.theta3 - t.theta3).abs() < 1e-12 * t.theta3);
    assert!((r.noise.sigma_r2 - 0.3).abs() < 1e-12);
    assert_eq!(table1_doc().resolve().unwrap().params, t);
}

#[test]
fn unknown_fields_are_rejected() {
    assert!(ParamsDocument::from_json(r#"{"theta1": 1, "theta2": 2, "theta3": 1, "sigma2": 3}"#).is_err());
}

#[test]
fn quantum_data_favour_the_quantum_model() {
    let p = CubicParams::table1();
    let d0 = tabulate_auto(&p, Hypothesis::Classical, NoiseParams::default()).unwrap();
    let d1 = tabulate_auto(&p, Hypothesis::Quantum, NoiseParams::default()).unwrap();
    let m = lrt_moments(&d0, &d1).unwrap();
    assert!(m.mean1 > 0.0 && m.mean0 < 0.0);

    let n = 20_000;
    let z1 = lrt(&d1.sample(1, n), &d0, &d1);
    let z0 = lrt(&d0.sample(2, n), &d0, &d1);
    let se1 = (m.var1 / n as f64).sqrt();
    let se0 = (m.var0 / n as f64).sqrt();
    assert!((z1.value - m.mean1).abs() < 5.0 * se1, "{} vs {}", z1.value, m.mean1);
    assert!((z0.value - m.mean0).abs() < 5.0 * se0, "{} vs {}", z0.value, m.mean0);
}

#[test]
fn ensemble_power_follows_the_asymptotic_curve() {
    let cfg = ExperimentConfig {
        params: CubicParams::table1(),
        noise: NoiseParams::default(),
        statistic: Statistic::Lrt,
        runs: 1500,
        measurements: 800,
        base_seed: 3,
        perturbation: None,
    };
    let ens = run_experiment(&cfg).unwrap();
    let power = ensemble_power(&ens.z_h0, &ens.z_h1, N_SIGMA, WILSON_EPS).unwrap();
    // N = 800 sits well below N* (about 1400): power is clearly short of the target
    assert!(power.power_point > 0.5 && power.power_point < 0.99, "{}", power.power_point);
    assert!(power.power_wilson_low <= power.power_point && power.power_point <= power.power_wilson_high);

    let d0 = tabulate_auto(&cfg.params, Hypothesis::Classical, cfg.noise).unwrap();
    let d1 = tabulate_auto(&cfg.params, Hypothesis::Quantum, cfg.noise).unwrap();
    let nstar = nstar_asymptotic(&lrt_moments(&d0, &d1).unwrap(), N_SIGMA, POWER_TARGET).unwrap();
    assert!((1000..2000).contains(&nstar), "{nstar}");
}

#[test]
fn ensemble_csv_round_trips() {
    let cfg = ExperimentConfig {
        params: CubicParams::new(2.0, 1.5, 1.0),
        noise: NoiseParams::default(),
        statistic: Statistic::Visibility,
        runs: 5,
        measurements: 50,
        base_seed: 0,
        perturbation: None,
    };
    let ens = run_experiment(&cfg).unwrap();
    let mut buf = Vec::new();
    ens.write_csv(&mut buf).unwrap();
    let (comments, rows) = read_commented_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(comments[0].0, "config");
    assert_eq!(rows[0], ["hypothesis", "run", "seed", "Z"]);
    assert_eq!(rows.len(), 1 + 2 * 5);
    for (row, z) in rows[1..6].iter().zip(&ens.z_h0) {
        assert_eq!(row[3].parse::<f64>().unwrap(), *z);
    }
}
