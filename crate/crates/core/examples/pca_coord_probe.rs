//! Look at the raw coordinate series of a rejected noise PC: year means,
//! spreads, and the coordinate as a function of the day, to identify what
//! carries the year contrast.

use fdod_core::basis::{pca_fit, pca_project};
use fdod_core::pipeline::second_year_split;
use fdod_core::simgen::{generate_telemetry, TelemetryConfig};

fn main() {
    let pc: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(106);
    let cfg = TelemetryConfig { seed: 0, ..TelemetryConfig::default() };
    let (curves, _) = generate_telemetry(&cfg).unwrap();
    let split = second_year_split(480, 240).unwrap();
    let basis = pca_fit(&curves, &split).unwrap();
    let rows: Vec<usize> = (0..480).collect();
    let feats = pca_project(&curves, &basis, &rows).unwrap();

    let col = pc - 1;
    let series: Vec<f64> = (0..480).map(|i| feats.coeffs().get(i, col)).collect();
    let stats = |days: &[usize]| -> (f64, f64) {
        let vals: Vec<f64> = days.iter().map(|&i| series[i]).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (vals.len() - 1) as f64;
        (m, v.sqrt())
    };
    let y1: Vec<usize> = (0..240).collect();
    let y2_odd: Vec<usize> = (240..480).filter(|i| !basis.fit_indices().contains(i)).collect();
    let y2_fit: Vec<usize> = basis.fit_indices().to_vec();
    let (m1, s1) = stats(&y1);
    let (m2, s2) = stats(&y2_odd);
    let (mf, sf) = stats(&y2_fit);
    println!("pc{pc}: eigenvalue {}", basis.eigenvalues()[col]);
    println!("  year1          mean {m1:+.6} sd {s1:.6}");
    println!("  year2 (odd)    mean {m2:+.6} sd {s2:.6}");
    println!("  year2 (fit)    mean {mf:+.6} sd {sf:.6}");
    println!("  noise coordinate sd would be {:.6}", 0.05 / 16.0);
    print!("  coordinate every 20 days: ");
    for i in (0..480).step_by(20) {
        print!("{:+.4} ", series[i]);
    }
    println!();
}
