use std::path::PathBuf;

use spectral_kinetics::detect::{self, Verdict};
use spectral_kinetics::market::{self, synth, BetaOptions};
use spectral_kinetics::pipeline::{self, SpectrumOptions, SweepConfig};
use spectral_kinetics::Error;

fn fixture() -> market::PricePanel {
    market::load_prices(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/sp500_sample.csv"), 1.0).unwrap()
}

fn small_config() -> SweepConfig {
    let mut cfg = SweepConfig::default();
    cfg.kinetics.steps = 400;
    cfg.kinetics.ensemble = 50;
    cfg.seed = 12;
    cfg
}

#[test]
fn single_cell_sweep_on_fixture_is_schema_complete() {
    let reports = detect::beta_sweep(&fixture(), &[0.0], &[0], &[0.1], &small_config()).unwrap();
    assert_eq!(reports.len(), 1);
    let json: serde_json::Value = serde_json::to_value(&reports[0]).unwrap();
    for key in ["schema_version", "beta", "temperature_ratio", "temperature", "critical_temperature", "threshold", "per_mode"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    let mode = &json["per_mode"][0];
    for key in ["mode", "fit", "fit_error", "second_derivative_max", "verdict"] {
        assert!(mode.get(key).is_some(), "missing per_mode.{key}");
    }
    assert_eq!(reports[0].per_mode.len(), 1);
    assert!(reports[0].critical_temperature.unwrap() > 0.0);
}

#[test]
fn sweep_is_a_pure_function_of_inputs_and_seed() {
    let cfg = small_config();
    let panel = fixture();
    let a = detect::beta_sweep(&panel, &[-0.5, 0.5], &[0, 1], &[0.1], &cfg).unwrap();
    let b = detect::beta_sweep(&panel, &[-0.5, 0.5], &[0, 1], &[0.1], &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    // a sub-grid reproduces the same cell
    let c = detect::beta_sweep(&panel, &[0.5], &[0, 1], &[0.1], &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a[1]).unwrap(), serde_json::to_string(&c[0]).unwrap());
}

#[test]
fn stage_errors_carry_the_cell_coordinate() {
    let err = detect::beta_sweep(&fixture(), &[1.5], &[0], &[0.1], &small_config()).unwrap_err();
    assert!(matches!(err, Error::Cell { beta, ratio: None, .. } if beta == 1.5));
    assert!(err.is_input_error());
    let err = detect::beta_sweep(&fixture(), &[0.0], &[500], &[0.1], &small_config()).unwrap_err();
    assert!(err.to_string().starts_with("at beta = 0, T/Tc = 0.1"), "{err}");
}

#[test]
fn fixture_beta_one_recovers_plain_mp() {
    let gbm = market::build_beta_panel(&fixture(), 1.0, 31, BetaOptions::default()).unwrap();
    let prepared = pipeline::prepare_spectrum(&gbm, &SpectrumOptions::default()).unwrap();
    println!("plain KS {:.4}, rescaled KS {:.4}", prepared.plain_ks, prepared.rescaled_ks);
    assert!(prepared.plain_ks < 0.1);
}

#[test]
fn fixture_rescaled_fit_beats_plain_fit() {
    let prepared = pipeline::prepare_spectrum(&fixture(), &SpectrumOptions::default()).unwrap();
    println!("plain KS {:.4}, rescaled KS {:.4}, outliers {}", prepared.plain_ks, prepared.rescaled_ks, prepared.n_outliers);
    assert!(prepared.n_outliers >= 1);
    assert!(prepared.rescaled_ks < prepared.plain_ks);
}

fn edge_d2(kind: synth::SynthSpec, beta: f64) -> (f64, Verdict) {
    let panel = synth::generate(&kind).unwrap();
    let mut cfg = small_config();
    cfg.kinetics.dt = Some(0.04);
    cfg.kinetics.steps = 500;
    cfg.kinetics.ensemble = 1000;
    let reports = detect::beta_sweep(&panel, &[beta], &[0], &[0.1], &cfg).unwrap();
    let m = &reports[0].per_mode[0];
    (m.second_derivative_max.unwrap(), m.verdict)
}

#[test]
fn edge_concavity_orders_correlated_above_independent() {
    let (correlated, verdict) = edge_d2(synth::SynthSpec::blocks(200, 800, vec![0.6, 0.4], 0.6, 4), 0.0);
    let (independent, _) = edge_d2(synth::SynthSpec::independent(200, 800, 4), 1.0);
    println!("mode 0 second derivative: correlated {correlated:.3}, independent {independent:.3}");
    assert_eq!(verdict, Verdict::Signal);
    assert!(correlated > independent);
}
