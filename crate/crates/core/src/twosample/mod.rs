//! One-dimensional two-sample tests.
//!
//! Empirical CDF/quantile machinery, the Kolmogorov-Smirnov statistic, and
//! the 2- and infinity-Wasserstein statistics of the composed process
//! `G_n1(F_n0^{-1}(t)) - t`, evaluated exactly in closed form. Under the null
//! the KS and infinity-Wasserstein statistics follow the law of the supremum
//! of a Brownian bridge; the 2-Wasserstein statistic follows the law of the
//! integrated squared bridge, calibrated by Monte Carlo in [`bridge`].

mod bridge;

pub use bridge::{
    build_l2_bridge_table, sup_bridge_cdf, sup_bridge_quantile, BridgeTables,
    DEFAULT_BRIDGE_SEED, DEFAULT_NUM_DRAWS, DEFAULT_TRUNCATION, MIN_DRAWS, MIN_TRUNCATION,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A univariate sample with its order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl Sample {
    /// Validate and sort. Rejects empty input and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: 0, col: i });
            }
        }
        let mut sorted = values.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Sample { values, sorted })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Order statistics `X_(1) <= ... <= X_(n)`.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Right-continuous empirical CDF: `(1/n) #\{X_i <= t\}`.
    pub fn ecdf(&self, t: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= t);
        count as f64 / self.len() as f64
    }

    /// Empirical quantile, piecewise constant on `[(i-1)/n, i/n)`:
    /// `X_(1)` for `prob < 1/n`, `X_(i)` on `[(i-1)/n, i/n)`, `X_(n)` at 1.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::Domain { value: prob, domain: "[0, 1]" });
        }
        let n = self.len();
        let i = ((prob * n as f64).floor() as usize + 1).min(n);
        Ok(self.sorted[i - 1])
    }
}

/// Which two-sample statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Ks,
    W2,
    WInf,
}

impl TestKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestKind::Ks => "ks",
            TestKind::W2 => "w2",
            TestKind::WInf => "winf",
        }
    }
}

impl std::fmt::Display for TestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TestKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ks" => Ok(TestKind::Ks),
            "w2" => Ok(TestKind::W2),
            "winf" | "w-inf" | "woo" => Ok(TestKind::WInf),
            other => Err(format!("unknown test kind {other:?} (expected ks, w2, or winf)")),
        }
    }
}

/// Statistic, asymptotic p-value, and the size factor `gamma = n0 n1 / (n0 + n1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleResult {
    pub kind: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub gamma: f64,
}

fn gamma_factor(x: &Sample, y: &Sample) -> f64 {
    let n0 = x.len() as f64;
    let n1 = y.len() as f64;
    n0 * n1 / (n0 + n1)
}

/// Kolmogorov-Smirnov statistic
/// `D = sqrt(gamma) sup_x |F_n0(x) - G_n1(x)|` with its asymptotic p-value.
///
/// The supremum is attained just after a jump, so scanning the merged order
/// statistics is exact.
pub fn ks_statistic(x: &Sample, y: &Sample) -> TwoSampleResult {
    let xs = x.sorted();
    let ys = y.sorted();
    let (n, m) = (xs.len(), ys.len());
    let mut i = 0;
    let mut j = 0;
    let mut sup: f64 = 0.0;
    while i < n || j < m {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < n && xs[i] == v {
            i += 1;
        }
        while j < m && ys[j] == v {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        sup = sup.max(diff);
    }
    let gamma = gamma_factor(x, y);
    let statistic = gamma.sqrt() * sup;
    TwoSampleResult {
        kind: TestKind::Ks,
        statistic,
        p_value: 1.0 - sup_bridge_cdf(statistic),
        gamma,
    }
}

/// Values `c_i = G_n1(X_(i))`, the composed process on `[(i-1)/n0, i/n0)`.
fn composed_steps(x: &Sample, y: &Sample) -> Vec<f64> {
    x.sorted().iter().map(|&v| y.ecdf(v)).collect()
}

/// 2-Wasserstein statistic
/// `T2 = gamma * integral_0^1 (G_n1(F_n0^{-1}(t)) - t)^2 dt`,
/// integrated in closed form on each interval where the composed process is
/// constant. The p-value comes from the Monte Carlo table of the integrated
/// squared Brownian bridge.
pub fn w2_statistic(x: &Sample, y: &Sample, tables: &BridgeTables) -> TwoSampleResult {
    let statistic = w2_statistic_value(x, y);
    TwoSampleResult {
        kind: TestKind::W2,
        statistic,
        p_value: 1.0 - tables.l2_cdf(statistic),
        gamma: gamma_factor(x, y),
    }
}

/// The T2 statistic alone, exact closed form.
pub fn w2_statistic_value(x: &Sample, y: &Sample) -> f64 {
    let n0 = x.len();
    let steps = composed_steps(x, y);
    // integral over [a, b) of (c - t)^2 dt = ((c-a)^3 - (c-b)^3) / 3
    let mut total = 0.0;
    for (i, &c) in steps.iter().enumerate() {
        let a = i as f64 / n0 as f64;
        let b = (i + 1) as f64 / n0 as f64;
        let da = c - a;
        let db = c - b;
        total += da * da * da - db * db * db;
    }
    gamma_factor(x, y) * (total / 3.0)
}

/// Infinity-Wasserstein statistic
/// `Tinf = sqrt(gamma) sup_t |G_n1(F_n0^{-1}(t)) - t|`. On each interval the
/// supremum of `|c - t|` sits at an endpoint; the closed right endpoint is
/// the continuous limit, so both endpoints are candidates. Kolmogorov
/// asymptotics give the p-value.
pub fn winf_statistic(x: &Sample, y: &Sample) -> TwoSampleResult {
    let statistic = winf_statistic_value(x, y);
    TwoSampleResult {
        kind: TestKind::WInf,
        statistic,
        p_value: 1.0 - sup_bridge_cdf(statistic),
        gamma: gamma_factor(x, y),
    }
}

/// The Tinf statistic alone, exact over interval endpoints.
pub fn winf_statistic_value(x: &Sample, y: &Sample) -> f64 {
    let n0 = x.len();
    let steps = composed_steps(x, y);
    let mut sup: f64 = 0.0;
    for (i, &c) in steps.iter().enumerate() {
        let a = i as f64 / n0 as f64;
        let b = (i + 1) as f64 / n0 as f64;
        sup = sup.max((c - a).abs()).max((c - b).abs());
    }
    gamma_factor(x, y).sqrt() * sup
}

/// Dispatch on [`TestKind`]. W2 needs a bridge table.
pub fn two_sample_test(
    kind: TestKind,
    x: &Sample,
    y: &Sample,
    tables: Option<&BridgeTables>,
) -> Result<TwoSampleResult> {
    Ok(match kind {
        TestKind::Ks => ks_statistic(x, y),
        TestKind::WInf => winf_statistic(x, y),
        TestKind::W2 => w2_statistic(x, y, tables.ok_or(Error::MissingBridgeTable)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ecdf_small() {
        let x = s(&[1.0, 2.0, 3.0]);
        assert_eq!(x.ecdf(2.0), 2.0 / 3.0);
        assert_eq!(x.ecdf(0.5), 0.0);
        assert_eq!(x.ecdf(3.0), 1.0);
        assert_eq!(x.ecdf(7.0), 1.0);
    }

    #[test]
    fn ecdf_matches_counting_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vals: Vec<f64> = (0..200).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x = s(&vals);
        for _ in 0..1000 {
            let t: f64 = rng.random_range(-3.5..3.5);
            let naive = vals.iter().filter(|&&v| v <= t).count() as f64 / vals.len() as f64;
            assert_eq!(x.ecdf(t), naive);
        }
    }

    #[test]
    fn quantile_piecewise_definition() {
        let x = s(&[5.0, 1.0, 3.0]);
        // order stats (1, 3, 5); 0.5 in [1/3, 2/3) -> X_(2)
        assert_eq!(x.quantile(0.5).unwrap(), 3.0);
        assert_eq!(x.quantile(1.0).unwrap(), 5.0);
        assert_eq!(x.quantile(0.0).unwrap(), 1.0);
        assert!(x.quantile(1.2).is_err());
        assert!(x.quantile(-0.1).is_err());
    }

    #[test]
    fn ks_identical_samples() {
        let x = s(&[1.0, 2.0, 5.0]);
        let r = ks_statistic(&x, &x);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ks_disjoint_supports() {
        let x = s(&[1.0, 2.0]);
        let y = s(&[3.0, 4.0]);
        let r = ks_statistic(&x, &y);
        assert_eq!(r.statistic, 1.0); // sqrt(4/4) * 1
        assert_eq!(r.gamma, 1.0);
    }

    #[test]
    fn ks_symmetric_in_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = s(&(0..37).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<_>>());
        let y = s(&(0..53).map(|_| rng.random_range(0.2..1.2)).collect::<Vec<_>>());
        assert_eq!(ks_statistic(&x, &y).statistic, ks_statistic(&y, &x).statistic);
    }

    #[test]
    fn w2_hand_value_identical_pair() {
        // x = y = (1, 2): intervals [0, 1/2), [1/2, 1) with c = 1/2, 1;
        // each contributes (1/3)(1/2)^3. gamma = 1, so T2 = 1/12 exactly.
        let x = s(&[1.0, 2.0]);
        assert_eq!(w2_statistic_value(&x, &x), 1.0 / 12.0);
    }

    #[test]
    fn w2_identical_sample_law() {
        // identical samples of size n: T2 = gamma * n * (1/3)(1/n)^3 = 1/(6n)
        for n in [3usize, 10, 57] {
            let vals: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let x = s(&vals);
            let t2 = w2_statistic_value(&x, &x);
            assert!((t2 - 1.0 / (6.0 * n as f64)).abs() < 1e-15, "n={n} t2={t2}");
        }
    }

    #[test]
    fn winf_hand_value_identical_pair() {
        // x = y = (1, 2): on [0, 1/2) sup|1/2 - t| = 1/2 at t = 0.
        let x = s(&[1.0, 2.0]);
        assert_eq!(winf_statistic_value(&x, &x), 0.5);
    }

    #[test]
    fn winf_identical_large_sample() {
        // identical samples size 100: Tinf = sqrt(50) * 0.01
        let vals: Vec<f64> = (0..100).map(|i| i as f64 * 0.37).collect();
        let x = s(&vals);
        let t = winf_statistic_value(&x, &x);
        assert!((t - 50f64.sqrt() * 0.01).abs() < 1e-15);
    }

    #[test]
    fn statistics_are_rank_based() {
        // A common strictly increasing transform leaves all three statistics
        // unchanged, exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let xv: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let yv: Vec<f64> = (0..25).map(|_| rng.random_range(-0.5..1.5)).collect();
        let x = s(&xv);
        let y = s(&yv);
        let tx = s(&xv.iter().map(|v| v.exp()).collect::<Vec<_>>());
        let ty = s(&yv.iter().map(|v| v.exp()).collect::<Vec<_>>());
        assert_eq!(ks_statistic(&x, &y).statistic, ks_statistic(&tx, &ty).statistic);
        assert_eq!(w2_statistic_value(&x, &y), w2_statistic_value(&tx, &ty));
        assert_eq!(winf_statistic_value(&x, &y), winf_statistic_value(&tx, &ty));

        let ax = s(&xv.iter().map(|v| 3.0 * v + 7.0).collect::<Vec<_>>());
        let ay = s(&yv.iter().map(|v| 3.0 * v + 7.0).collect::<Vec<_>>());
        assert_eq!(w2_statistic_value(&x, &y), w2_statistic_value(&ax, &ay));
        assert_eq!(winf_statistic_value(&x, &y), winf_statistic_value(&ax, &ay));
    }

    #[test]
    fn w2_and_winf_are_exchange_symmetric() {
        // Although F and G play different roles in the formula, both
        // statistics are symmetric under exchanging the samples: the region
        // between the completed staircase of G(F^{-1}) and the diagonal maps
        // onto the swapped statistic's region under reflection, and both the
        // squared-gap integral (2 * double integral of |y - t| over that
        // region) and the sup over the completed path only depend on the
        // region. Asserted here on random pairs rather than assumed.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let n = rng.random_range(1..30);
            let m = rng.random_range(1..30);
            let xv: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let yv: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..1.0)).collect();
            let x = s(&xv);
            let y = s(&yv);
            let (a, b) = (w2_statistic_value(&x, &y), w2_statistic_value(&y, &x));
            assert!((a - b).abs() <= 1e-12 * a.max(1.0), "T2 swap mismatch: {a} vs {b}");
            assert_eq!(winf_statistic_value(&x, &y), winf_statistic_value(&y, &x));
        }
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(matches!(Sample::new(vec![]), Err(Error::EmptySample)));
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
    }
}
