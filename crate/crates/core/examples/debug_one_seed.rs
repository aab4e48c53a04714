//! Inspect one seed of the default experiment in detail: selection sizes,
//! per-level p-values, and per-anomaly LOF scores for each feature set.

use fdod_core::basis::{pca_fit, pca_project};
use fdod_core::pipeline::{
    run_pipeline, second_year_split, FeatureSet, PipelineConfig, RunMetadata,
};
use fdod_core::selection::{split_features, test_all_levels};
use fdod_core::simgen::{generate_telemetry, TelemetryConfig};
use fdod_core::twosample::{BridgeTables, TestKind, MIN_DRAWS, MIN_TRUNCATION};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cache = std::env::temp_dir().join("fdod-cache");
    let tables = BridgeTables::load_or_build(&cache, MIN_DRAWS, MIN_TRUNCATION, 7).unwrap();

    let tcfg = TelemetryConfig { seed, ..TelemetryConfig::default() };
    let (curves, truth) = generate_telemetry(&tcfg).unwrap();
    let split = second_year_split(tcfg.n_days, tcfg.year_length).unwrap();

    // Distribution of PCA per-level p-values
    let basis = pca_fit(&curves, &split).unwrap();
    println!("pca eigenvalues (top 12): {:?}", &basis.eigenvalues()[..12]);
    let usable: Vec<usize> =
        (0..480).filter(|r| !basis.fit_indices().contains(r)).collect();
    let feats = pca_project(&curves, &basis, &usable).unwrap();
    let samples = split_features(&feats, &split).unwrap();
    let ps = test_all_levels(&samples, TestKind::WInf, None).unwrap();
    let tiny = ps.iter().filter(|&&p| p < 1e-6).count();
    let small = ps.iter().filter(|&&p| p < 1e-3).count();
    let mid = ps.iter().filter(|&&p| p < 0.05).count();
    println!("pca winf p-values: {} < 1e-6, {} < 1e-3, {} < 0.05 of {}", tiny, small, mid, ps.len());
    print!("first 30 p-values by rank: ");
    let mut sorted: Vec<(usize, f64)> = ps.iter().cloned().enumerate().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (idx, p) in sorted.iter().take(30) {
        print!("pc{}:{:.2e} ", idx + 1, p);
    }
    println!();

    let sets = [
        FeatureSet::RawData,
        FeatureSet::PcaFull,
        FeatureSet::PcaVariance95,
        FeatureSet::PcaW2,
        FeatureSet::PcaWInf,
        FeatureSet::HaarW2,
        FeatureSet::HaarWInf,
    ];
    let config = PipelineConfig { feature_sets: sets.to_vec(), ..PipelineConfig::default() };
    let report = run_pipeline(
        &curves,
        &split,
        Some(&truth),
        &config,
        Some(&tables),
        RunMetadata::new(Some(seed)),
    )
    .unwrap();

    println!("\nper-anomaly LOF scores (rows {:?}):", truth);
    println!("{:12} {:>8} {:>7} {:>7}", "set", "nfeat", "margin", "maxinl");
    for &s in &sets {
        let r = report.set(s).unwrap();
        let max_inlier = r
            .scores
            .iter()
            .filter(|d| !truth.contains(&d.row))
            .map(|d| d.lof)
            .fold(f64::NEG_INFINITY, f64::max);
        print!(
            "{:12} {:>8} {:>7.3} {:>7.2} | ",
            r.label,
            r.n_features,
            r.separation_margin.unwrap_or(f64::NAN),
            max_inlier
        );
        for &day in &truth {
            let lof = r.scores.iter().find(|d| d.row == day).unwrap().lof;
            print!("{day}:{lof:.2} ");
        }
        println!();
        if let Some(sel) = &r.selection {
            println!("             selected {}: {:?}", sel.k_star, sel.rejected_levels);
        }
    }
}
