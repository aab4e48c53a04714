//! Monte Carlo calibration and power studies for the two-sample tests, plus
//! the FDR null study. Replications are embarrassingly parallel; each draws
//! from its own RNG stream so aggregation is order-independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as RandDistribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selection::benjamini_hochberg;
use crate::twosample::{two_sample_test, BridgeTables, Sample, TestKind};

/// Sampling distribution for the study groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "family")]
pub enum StudyDistribution {
    Gaussian { mean: f64, variance: f64 },
    Exponential { rate: f64 },
}

impl StudyDistribution {
    pub fn standard_gaussian() -> Self {
        StudyDistribution::Gaussian { mean: 0.0, variance: 1.0 }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        match *self {
            StudyDistribution::Gaussian { mean, variance } => {
                let normal = Normal::new(mean, variance.sqrt()).expect("valid sd");
                (0..n).map(|_| normal.sample(rng)).collect()
            }
            StudyDistribution::Exponential { rate } => {
                let exp = Exp::new(rate).expect("valid rate");
                (0..n).map(|_| exp.sample(rng)).collect()
            }
        }
    }
}

/// Configuration shared by the level and power studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Per-group sample size (the table rows' `n`).
    pub group_size: usize,
    pub replications: usize,
    pub alpha: f64,
    pub distribution: StudyDistribution,
    /// Distribution of the shifted group in the power study.
    pub alternative: StudyDistribution,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            group_size: 1000,
            replications: 2000,
            alpha: 0.05,
            distribution: StudyDistribution::standard_gaussian(),
            alternative: StudyDistribution::Gaussian { mean: 0.1, variance: 1.15 },
            seed: 0,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 100 {
            return Err(Error::config("study needs at least 100 replications"));
        }
        if self.group_size < 2 {
            return Err(Error::config("study group size must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("alpha must lie in [0, 1]"));
        }
        Ok(())
    }
}

fn rep_rng(seed: u64, replication: usize, group: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64 * 4 + group);
    rng
}

/// Estimated size of a nominal level-alpha test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub test_kind: TestKind,
    pub group_size: usize,
    pub replications: usize,
    pub alpha: f64,
    /// Fraction of replications with `p < alpha`.
    pub alpha_hat: f64,
    /// Binomial standard error `sqrt(alpha_hat (1 - alpha_hat) / m)`.
    pub std_error: f64,
}

/// Estimate the empirical level: draw two same-distribution groups per
/// replication and count rejections at `alpha`.
pub fn level_study(
    config: &StudyConfig,
    kind: TestKind,
    tables: Option<&BridgeTables>,
) -> Result<LevelEstimate> {
    config.validate()?;
    if kind == TestKind::W2 && tables.is_none() {
        return Err(Error::MissingBridgeTable);
    }
    let m = config.replications;
    let rejected: usize = (0..m)
        .into_par_iter()
        .map(|rep| {
            let x = Sample::new(
                config.distribution.draw(&mut rep_rng(config.seed, rep, 0), config.group_size),
            )
            .expect("finite draws");
            let y = Sample::new(
                config.distribution.draw(&mut rep_rng(config.seed, rep, 1), config.group_size),
            )
            .expect("finite draws");
            let r = two_sample_test(kind, &x, &y, tables).expect("tables checked above");
            usize::from(r.p_value < config.alpha)
        })
        .sum();
    let alpha_hat = rejected as f64 / m as f64;
    Ok(LevelEstimate {
        test_kind: kind,
        group_size: config.group_size,
        replications: m,
        alpha: config.alpha,
        alpha_hat,
        std_error: (alpha_hat * (1.0 - alpha_hat) / m as f64).sqrt(),
    })
}

/// One ROC point: rejection rates under the null and under the alternative
/// at threshold `alpha`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RocPoint {
    pub alpha: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve of one test over the alpha grid, with its trapezoid AUC.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocCurve {
    pub test_kind: TestKind,
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Result of [`power_study`], one curve per requested test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerStudyResult {
    pub group_size: usize,
    pub replications: usize,
    pub curves: Vec<RocCurve>,
}

/// Number of points in the ROC alpha grid.
pub const ROC_GRID: usize = 200;

/// Power study: per replication draw `X, Y` from the null distribution and
/// `Z` from the alternative; test `X` vs `Y` (null pair) and `X` vs `Z`.
/// Rejection fractions over a 200-point alpha grid trace the ROC curve.
pub fn power_study(
    config: &StudyConfig,
    kinds: &[TestKind],
    tables: Option<&BridgeTables>,
) -> Result<PowerStudyResult> {
    config.validate()?;
    if kinds.contains(&TestKind::W2) && tables.is_none() {
        return Err(Error::MissingBridgeTable);
    }
    let m = config.replications;
    // p-value pairs per kind: (null-pair p, alternative-pair p)
    let all: Vec<Vec<(f64, f64)>> = (0..m)
        .into_par_iter()
        .map(|rep| {
            let x = Sample::new(
                config.distribution.draw(&mut rep_rng(config.seed, rep, 0), config.group_size),
            )
            .expect("finite draws");
            let y = Sample::new(
                config.distribution.draw(&mut rep_rng(config.seed, rep, 1), config.group_size),
            )
            .expect("finite draws");
            let z = Sample::new(
                config.alternative.draw(&mut rep_rng(config.seed, rep, 2), config.group_size),
            )
            .expect("finite draws");
            kinds
                .iter()
                .map(|&kind| {
                    let p0 = two_sample_test(kind, &x, &y, tables).expect("checked").p_value;
                    let p1 = two_sample_test(kind, &x, &z, tables).expect("checked").p_value;
                    (p0, p1)
                })
                .collect()
        })
        .collect();

    let curves = kinds
        .iter()
        .enumerate()
        .map(|(ki, &kind)| {
            let points: Vec<RocPoint> = (1..=ROC_GRID)
                .map(|g| {
                    let alpha = g as f64 / ROC_GRID as f64;
                    let fpr = all.iter().filter(|reps| reps[ki].0 < alpha).count() as f64
                        / m as f64;
                    let tpr = all.iter().filter(|reps| reps[ki].1 < alpha).count() as f64
                        / m as f64;
                    RocPoint { alpha, fpr, tpr }
                })
                .collect();
            let auc = roc_auc(&points);
            RocCurve { test_kind: kind, points, auc }
        })
        .collect();

    Ok(PowerStudyResult { group_size: config.group_size, replications: m, curves })
}

/// Trapezoid area under the (FPR, TPR) polyline, closed at (0,0) and (1,1).
pub fn roc_auc(points: &[RocPoint]) -> f64 {
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    for p in points {
        xs.push(p.fpr);
        ys.push(p.tpr);
    }
    xs.push(1.0);
    ys.push(1.0);
    let mut auc = 0.0;
    for w in 1..xs.len() {
        auc += (xs[w] - xs[w - 1]) * 0.5 * (ys[w] + ys[w - 1]);
    }
    auc
}

/// Counts from one full-null replication of the BH procedure.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FdrReplication {
    /// Rejections (all false under the full null), `V = R`.
    pub false_rejections: usize,
    pub rejections: usize,
    /// True nulls declared non-significant, `U = m - R`.
    pub accepted: usize,
}

/// Result of [`fdr_null_study`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FdrStudyResult {
    pub m_hypotheses: usize,
    pub replications: usize,
    pub alpha: f64,
    /// Mean of `V / max(R, 1)` over replications.
    pub empirical_fdr: f64,
    /// Standard error of that mean.
    pub std_error: f64,
    pub per_replication: Vec<FdrReplication>,
}

/// Full-null FDR study: independent uniform p-values, BH at `alpha`,
/// averaging `V / max(R, 1)`.
pub fn fdr_null_study(
    m_hypotheses: usize,
    replications: usize,
    alpha: f64,
    seed: u64,
) -> Result<FdrStudyResult> {
    if m_hypotheses == 0 {
        return Err(Error::config("need at least one hypothesis"));
    }
    if replications < 100 {
        return Err(Error::config("study needs at least 100 replications"));
    }
    let per_replication: Vec<FdrReplication> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(seed, rep, 0);
            let ps: Vec<f64> = (0..m_hypotheses).map(|_| rng.random::<f64>()).collect();
            let out = benjamini_hochberg(&ps, alpha).expect("uniform draws are valid p-values");
            FdrReplication {
                false_rejections: out.k_star,
                rejections: out.k_star,
                accepted: m_hypotheses - out.k_star,
            }
        })
        .collect();

    let ratios: Vec<f64> = per_replication
        .iter()
        .map(|r| r.false_rejections as f64 / (r.rejections.max(1)) as f64)
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let var = ratios.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (ratios.len() as f64 - 1.0);
    Ok(FdrStudyResult {
        m_hypotheses,
        replications,
        alpha,
        empirical_fdr: mean,
        std_error: (var / ratios.len() as f64).sqrt(),
        per_replication,
    })
}

/// Estimated probability that at least one of `num_tests` independent exact
/// null tests rejects at `alpha` (the union-bound phenomenon that motivates
/// FDR control).
pub fn union_bound_study(
    num_tests: usize,
    replications: usize,
    alpha: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if replications < 100 {
        return Err(Error::config("study needs at least 100 replications"));
    }
    let hits: usize = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(seed, rep, 0);
            usize::from((0..num_tests).any(|_| rng.random::<f64>() < alpha))
        })
        .sum();
    let p = hits as f64 / replications as f64;
    Ok((p, (p * (1.0 - p) / replications as f64).sqrt()))
}
