//! Sweep the default telemetry experiment over seeds and print per-set
//! detection statistics. Used to sanity-check the default generator
//! constants; run with `cargo run --release -p fdod-core --example seed_sweep`.

use fdod_core::pipeline::{
    run_pipeline, second_year_split, FeatureSet, PipelineConfig, RunMetadata,
};
use fdod_core::simgen::{generate_telemetry, TelemetryConfig};
use fdod_core::twosample::{BridgeTables, MIN_DRAWS, MIN_TRUNCATION};

fn main() {
    let n_seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20);
    let cache = std::env::temp_dir().join("fdod-cache");
    let tables = BridgeTables::load_or_build(&cache, MIN_DRAWS, MIN_TRUNCATION, 7).unwrap();

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

    let mut tp2: Vec<Vec<usize>> = vec![Vec::new(); sets.len()];
    let mut fp2: Vec<Vec<usize>> = vec![Vec::new(); sets.len()];
    let mut tp4: Vec<Vec<usize>> = vec![Vec::new(); sets.len()];
    let mut nfeat: Vec<Vec<usize>> = vec![Vec::new(); sets.len()];
    let mut margins: Vec<Vec<f64>> = vec![Vec::new(); sets.len()];
    let mut superset_violations = 0usize;
    let mut margin_violations = 0usize;

    for seed in 0..n_seeds {
        let tcfg = TelemetryConfig { seed, ..TelemetryConfig::default() };
        let (curves, truth) = generate_telemetry(&tcfg).unwrap();
        let split = second_year_split(tcfg.n_days, tcfg.year_length).unwrap();
        let report = run_pipeline(
            &curves,
            &split,
            Some(&truth),
            &config,
            Some(&tables),
            RunMetadata::new(Some(seed)),
        )
        .unwrap();

        let detected2 = |s: FeatureSet| -> Vec<usize> {
            report
                .set(s)
                .unwrap()
                .detected(2.0)
                .unwrap()
                .detected_rows
                .iter()
                .copied()
                .filter(|r| truth.contains(r))
                .collect()
        };

        for (i, &s) in sets.iter().enumerate() {
            let r = report.set(s).unwrap();
            tp2[i].push(r.true_positive_count(2.0).unwrap());
            fp2[i].push(r.detected(2.0).unwrap().false_alarms.unwrap());
            tp4[i].push(r.true_positive_count(4.0).unwrap());
            nfeat[i].push(r.n_features);
            margins[i].push(r.separation_margin.unwrap_or(f64::NAN));
        }

        // set 7 and 8 should cover everything sets 1 and 2 find
        let d1 = detected2(FeatureSet::PcaFull);
        let d2 = detected2(FeatureSet::PcaVariance95);
        for strong in [FeatureSet::PcaW2, FeatureSet::PcaWInf] {
            let ds = detected2(strong);
            for r in d1.iter().chain(&d2) {
                if !ds.contains(r) {
                    superset_violations += 1;
                    println!("seed {seed}: {} misses row {r} found by a baseline", strong.label());
                }
            }
        }
        let m7 = report.set(FeatureSet::PcaW2).unwrap().separation_margin.unwrap_or(f64::NAN);
        let m2 = report
            .set(FeatureSet::PcaVariance95)
            .unwrap()
            .separation_margin
            .unwrap_or(f64::NAN);
        if !(m7 > m2) {
            margin_violations += 1;
            println!("seed {seed}: margin(pca-w2)={m7:.3} !> margin(pca-95)={m2:.3}");
        }
    }

    let median = |v: &mut Vec<usize>| -> usize {
        v.sort_unstable();
        v[v.len() / 2]
    };
    println!("\nper-set summary over {n_seeds} seeds (median / min / max):");
    for (i, &s) in sets.iter().enumerate() {
        let med2 = median(&mut tp2[i]);
        let med4 = median(&mut tp4[i]);
        let medf = median(&mut nfeat[i]);
        let fpmax = *fp2[i].iter().max().unwrap();
        let mmin = margins[i].iter().cloned().fold(f64::INFINITY, f64::min);
        println!(
            "{:12} tp@2 med {} [{}..{}]  tp@4 med {}  fp@2 max {}  nfeat med {}  margin min {:.3}",
            s.label(),
            med2,
            tp2[i].first().min(tp2[i].iter().min()).unwrap(),
            tp2[i].iter().max().unwrap(),
            med4,
            fpmax,
            medf,
            mmin
        );
    }
    println!("superset violations: {superset_violations}");
    println!("margin violations:   {margin_violations}");
}
