//! Probe the per-PC p-value distribution under stripped-down generator
//! configurations to locate what drives rejections.

use fdod_core::basis::{pca_fit, pca_project};
use fdod_core::pipeline::second_year_split;
use fdod_core::selection::{split_features, test_all_levels};
use fdod_core::simgen::{generate_telemetry, TelemetryConfig};
use fdod_core::twosample::TestKind;

fn probe(label: &str, cfg: &TelemetryConfig) {
    let (curves, _) = generate_telemetry(cfg).unwrap();
    let split = second_year_split(cfg.n_days, cfg.year_length).unwrap();
    let basis = pca_fit(&curves, &split).unwrap();
    let usable: Vec<usize> =
        (0..cfg.n_days).filter(|r| !basis.fit_indices().contains(r)).collect();
    let feats = pca_project(&curves, &basis, &usable).unwrap();
    let samples = split_features(&feats, &split).unwrap();
    let ps = test_all_levels(&samples, TestKind::WInf, None).unwrap();
    let tiny = ps.iter().filter(|&&p| p < 1e-6).count();
    let small = ps.iter().filter(|&&p| p < 1e-3).count();
    let mid = ps.iter().filter(|&&p| p < 0.05).count();
    println!(
        "{label:28} n_comp={:3} p<1e-6: {tiny:3}  p<1e-3: {small:3}  p<0.05: {mid:3}",
        basis.n_components()
    );
}

fn main() {
    let base = TelemetryConfig { anomalies: vec![], seed: 1, ..TelemetryConfig::default() };

    probe("full null (no drift)", &TelemetryConfig { drift_amplitude: 0.0, ..base.clone() });
    probe("seasonal off, drift on", &TelemetryConfig {
        seasonal_frac: 0.0,
        baseline_amplitude: 0.0,
        ..base.clone()
    });
    probe("seasonal off, drift off", &TelemetryConfig {
        seasonal_frac: 0.0,
        baseline_amplitude: 0.0,
        drift_amplitude: 0.0,
        ..base.clone()
    });
    probe("default (drift on)", &base);
}
