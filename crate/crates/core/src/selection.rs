//! Per-level two-sample testing and FDR-controlled level selection.
//!
//! Each basis level contributes one hypothesis: the nominal and test
//! coefficient distributions agree. Levels rejected by the Benjamini-Hochberg
//! step-up rule become the features used for outlier scoring.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, FeatureMatrix, LevelId};
use crate::curves::SplitLabels;
use crate::error::{Error, Result};
use crate::twosample::{two_sample_test, BridgeTables, Sample, TestKind};

/// p-values of exactly zero (statistic beyond the table range) are clamped
/// here so downstream logs stay finite.
pub const P_VALUE_FLOOR: f64 = 1e-16;

/// Nominal and test coefficient samples for one level.
#[derive(Debug, Clone)]
pub struct LevelSamples {
    pub level: LevelId,
    pub nominal: Sample,
    pub test: Sample,
}

/// Split a feature matrix into per-level nominal/test samples.
///
/// For a fixed basis (Haar) every nominal row enters the nominal sample. For
/// PCA the fit half was consumed by `pca_fit`, so only the remaining nominal
/// rows are usable; feature rows overlapping the fit set are rejected.
pub fn split_features(
    features: &FeatureMatrix,
    split: &SplitLabels,
) -> Result<Vec<LevelSamples>> {
    let nominal_rows: Vec<usize> = match features.basis_kind() {
        BasisKind::Haar => split.nominal_indices().to_vec(),
        BasisKind::Pca => {
            let fit = features.fit_rows().unwrap_or(&[]);
            let overlap: Vec<usize> = features
                .source_rows()
                .iter()
                .copied()
                .filter(|r| fit.contains(r))
                .collect();
            if !overlap.is_empty() {
                return Err(Error::ContaminatedFeatures { rows: overlap });
            }
            split.nominal_indices().iter().copied().filter(|r| !fit.contains(r)).collect()
        }
    };

    let positions = |rows: &[usize]| -> Result<Vec<usize>> {
        rows.iter()
            .map(|&r| {
                features.source_rows().iter().position(|&s| s == r).ok_or_else(|| {
                    Error::config(format!("feature matrix is missing required row {r}"))
                })
            })
            .collect()
    };
    let nominal_pos = positions(&nominal_rows)?;
    let test_pos = positions(split.test_indices())?;

    let coeffs = features.coeffs();
    features
        .levels()
        .iter()
        .enumerate()
        .map(|(col, &level)| {
            let gather = |pos: &[usize]| pos.iter().map(|&i| coeffs.get(i, col)).collect();
            Ok(LevelSamples {
                level,
                nominal: Sample::new(gather(&nominal_pos))?,
                test: Sample::new(gather(&test_pos))?,
            })
        })
        .collect()
}

/// Run the chosen two-sample test independently on every level.
///
/// Returns one p-value per level in input order; exact zeros are clamped to
/// [`P_VALUE_FLOOR`]. W2 requires a bridge table.
pub fn test_all_levels(
    levels: &[LevelSamples],
    kind: TestKind,
    tables: Option<&BridgeTables>,
) -> Result<Vec<f64>> {
    if kind == TestKind::W2 && tables.is_none() {
        return Err(Error::MissingBridgeTable);
    }
    levels
        .par_iter()
        .map(|ls| {
            let r = two_sample_test(kind, &ls.nominal, &ls.test, tables).map_err(|e| {
                Error::Level { level: ls.level.to_string(), source: Box::new(e) }
            })?;
            Ok(r.p_value.max(P_VALUE_FLOOR))
        })
        .collect()
}

/// Outcome of the step-up rule on a raw p-value vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BhOutcome {
    /// Largest `k` with `p_(k) <= k alpha / m`; 0 when nothing is rejected.
    pub k_star: usize,
    /// Rejection flag per input position.
    pub rejected: Vec<bool>,
}

/// Benjamini-Hochberg step-up rule at level `alpha`.
///
/// Sorts the p-values, finds the largest `k` with `p_(k) <= k alpha / m`,
/// and rejects the `k` smallest. Ranks are assigned by (p-value, position),
/// so ties at the cutoff resolve deterministically.
pub fn benjamini_hochberg(p_values: &[f64], alpha: f64) -> Result<BhOutcome> {
    validate_pvalues(p_values)?;
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));

    let mut k_star = 0;
    for (rank0, &idx) in order.iter().enumerate() {
        let k = rank0 + 1;
        if p_values[idx] <= alpha * k as f64 / m as f64 {
            k_star = k;
        }
    }
    let mut rejected = vec![false; m];
    for &idx in order.iter().take(k_star) {
        rejected[idx] = true;
    }
    Ok(BhOutcome { k_star, rejected })
}

/// Reject every `p < alpha` with no multiplicity correction.
pub fn uncorrected(p_values: &[f64], alpha: f64) -> Result<BhOutcome> {
    validate_pvalues(p_values)?;
    let rejected: Vec<bool> = p_values.iter().map(|&p| p < alpha).collect();
    let k_star = rejected.iter().filter(|&&r| r).count();
    Ok(BhOutcome { k_star, rejected })
}

fn validate_pvalues(p_values: &[f64]) -> Result<()> {
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidPValue { value: p });
        }
    }
    Ok(())
}

/// Multiplicity handling for [`select_levels`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    BenjaminiHochberg,
    Uncorrected,
}

/// Per-level p-values with the rejected level set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    pub levels: Vec<LevelId>,
    pub p_values: Vec<f64>,
    pub rejected: Vec<bool>,
    pub k_star: usize,
    pub alpha: f64,
    pub test_kind: TestKind,
    pub correction: Correction,
}

impl SelectionResult {
    pub fn rejected_levels(&self) -> Vec<LevelId> {
        self.levels
            .iter()
            .zip(&self.rejected)
            .filter(|(_, &r)| r)
            .map(|(&l, _)| l)
            .collect()
    }

    /// Column positions of the rejected levels.
    pub fn rejected_positions(&self) -> Vec<usize> {
        (0..self.levels.len()).filter(|&i| self.rejected[i]).collect()
    }

    pub fn n_rejected(&self) -> usize {
        self.rejected.iter().filter(|&&r| r).count()
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Metadata { path: path.into(), detail: e.to_string() })?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("level,p_value,rejected\n");
        for i in 0..self.levels.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.levels[i],
                crate::curves::format_f64(self.p_values[i]),
                self.rejected[i]
            );
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Test every level and apply the chosen correction at level `alpha`.
pub fn select_levels(
    samples: &[LevelSamples],
    kind: TestKind,
    alpha: f64,
    correction: Correction,
    tables: Option<&BridgeTables>,
) -> Result<SelectionResult> {
    let p_values = test_all_levels(samples, kind, tables)?;
    let outcome = match correction {
        Correction::BenjaminiHochberg => benjamini_hochberg(&p_values, alpha)?,
        Correction::Uncorrected => uncorrected(&p_values, alpha)?,
    };
    Ok(SelectionResult {
        levels: samples.iter().map(|ls| ls.level).collect(),
        p_values,
        rejected: outcome.rejected,
        k_star: outcome.k_star,
        alpha,
        test_kind: kind,
        correction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{haar_project, pca_fit, pca_project};
    use crate::curves::{make_split, CurveSet};
    use crate::mat::Mat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_curves(n: usize, p: usize, seed: u64) -> CurveSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        CurveSet::new(Mat::from_rows(&rows)).unwrap()
    }

    #[test]
    fn haar_split_uses_all_nominal_rows() {
        let cs = random_curves(480, 8, 1);
        let split = make_split(480, &(240..480).collect::<Vec<_>>()).unwrap();
        let features = haar_project(&cs).unwrap();
        let samples = split_features(&features, &split).unwrap();
        assert_eq!(samples.len(), 8);
        for ls in &samples {
            assert_eq!(ls.nominal.len(), 240);
            assert_eq!(ls.test.len(), 240);
        }
    }

    #[test]
    fn pca_split_uses_odd_half_of_nominal() {
        let cs = random_curves(480, 8, 2);
        let split = make_split(480, &(240..480).collect::<Vec<_>>()).unwrap();
        let basis = pca_fit(&cs, &split).unwrap();
        let fit = basis.fit_indices().to_vec();
        let rows: Vec<usize> = (0..480).filter(|r| !fit.contains(r)).collect();
        let features = pca_project(&cs, &basis, &rows).unwrap();
        let samples = split_features(&features, &split).unwrap();
        for ls in &samples {
            assert_eq!(ls.nominal.len(), 120);
            assert_eq!(ls.test.len(), 240);
        }
    }

    #[test]
    fn smallest_legal_pca_split() {
        let cs = random_curves(6, 4, 3);
        let split = make_split(6, &[0, 1, 2, 3]).unwrap();
        let basis = pca_fit(&cs, &split).unwrap();
        assert_eq!(basis.fit_indices(), &[1, 3]);
        let rows = vec![0, 2, 4, 5];
        let features = pca_project(&cs, &basis, &rows).unwrap();
        let samples = split_features(&features, &split).unwrap();
        for ls in &samples {
            assert_eq!(ls.nominal.len(), 2); // rows 0 and 2
            assert_eq!(ls.test.len(), 2);
        }
    }

    #[test]
    fn contaminated_pca_rows_rejected() {
        let cs = random_curves(8, 4, 4);
        let split = make_split(8, &[0, 1, 2, 3]).unwrap();
        let basis = pca_fit(&cs, &split).unwrap();
        // Row 1 is a fit row.
        let features = pca_project(&cs, &basis, &[0, 1, 4, 5, 6, 7]).unwrap();
        assert!(matches!(
            split_features(&features, &split),
            Err(Error::ContaminatedFeatures { .. })
        ));
    }

    #[test]
    fn identical_samples_give_near_one_pvalues() {
        let vals: Vec<f64> = (0..240).map(|i| (i as f64 * 0.71).sin()).collect();
        let samples: Vec<LevelSamples> = (0..4)
            .map(|r| LevelSamples {
                level: LevelId::Pc(r + 1),
                nominal: Sample::new(vals.clone()).unwrap(),
                test: Sample::new(vals.clone()).unwrap(),
            })
            .collect();
        let ps = test_all_levels(&samples, TestKind::WInf, None).unwrap();
        for &p in &ps {
            assert_eq!(p, ps[0]);
            assert!(p > 0.99, "degenerate statistic should be insignificant, p={p}");
        }
    }

    #[test]
    fn shifted_level_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut samples = Vec::new();
        for r in 0..6 {
            let nominal: Vec<f64> = (0..240).map(|_| rng.random_range(-1.0..1.0)).collect();
            let shift = if r == 3 { 10.0 } else { 0.0 };
            let test: Vec<f64> =
                (0..240).map(|_| rng.random_range(-1.0..1.0) + shift).collect();
            samples.push(LevelSamples {
                level: LevelId::Pc(r + 1),
                nominal: Sample::new(nominal).unwrap(),
                test: Sample::new(test).unwrap(),
            });
        }
        let ps = test_all_levels(&samples, TestKind::WInf, None).unwrap();
        assert!(ps[3] < 1e-3, "shifted level p = {}", ps[3]);
        for (r, &p) in ps.iter().enumerate() {
            if r != 3 {
                assert!(p > 1e-3);
            }
        }
    }

    #[test]
    fn null_rejection_fraction_near_alpha() {
        // Pure-noise levels: the fraction of p-values below 0.05 stays near
        // 0.05 across seeds.
        let mut total = 0usize;
        let mut count = 0usize;
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let samples: Vec<LevelSamples> = (0..256)
                .map(|r| {
                    let a: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let b: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
                    LevelSamples {
                        level: LevelId::Pc(r + 1),
                        nominal: Sample::new(a).unwrap(),
                        test: Sample::new(b).unwrap(),
                    }
                })
                .collect();
            let ps = test_all_levels(&samples, TestKind::WInf, None).unwrap();
            total += ps.len();
            count += ps.iter().filter(|&&p| p < 0.05).count();
        }
        let fraction = count as f64 / total as f64;
        assert!(
            (fraction - 0.05).abs() <= 0.03,
            "null rejection fraction {fraction} outside 0.05 +/- 0.03"
        );
    }

    #[test]
    fn bh_hand_example() {
        let ps = [0.001, 0.013, 0.04, 0.3, 0.9];
        let out = benjamini_hochberg(&ps, 0.05).unwrap();
        // thresholds (0.01, 0.02, 0.03, 0.04, 0.05): k* = 2.
        assert_eq!(out.k_star, 2);
        assert_eq!(out.rejected, vec![true, true, false, false, false]);
    }

    #[test]
    fn bh_nothing_significant() {
        let out = benjamini_hochberg(&[1.0, 1.0, 1.0], 0.05).unwrap();
        assert_eq!(out.k_star, 0);
        assert!(out.rejected.iter().all(|&r| !r));
    }

    #[test]
    fn bh_single_pvalue_reduces_to_plain_test() {
        let out = benjamini_hochberg(&[0.04], 0.05).unwrap();
        assert_eq!(out.k_star, 1);
        assert!(out.rejected[0]);
    }

    #[test]
    fn bh_rejects_invalid_pvalues() {
        assert!(matches!(
            benjamini_hochberg(&[0.5, 1.5], 0.05),
            Err(Error::InvalidPValue { .. })
        ));
    }

    #[test]
    fn uncorrected_mode() {
        let out = uncorrected(&[0.04, 0.06, 0.01], 0.05).unwrap();
        assert_eq!(out.rejected, vec![true, false, true]);
        assert_eq!(out.k_star, 2);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn pvec() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(0.0..=1.0f64, 1..40)
        }

        proptest! {
            #[test]
            fn alpha_monotone(ps in pvec(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let r_lo = benjamini_hochberg(&ps, lo).unwrap();
                let r_hi = benjamini_hochberg(&ps, hi).unwrap();
                for i in 0..ps.len() {
                    prop_assert!(!r_lo.rejected[i] || r_hi.rejected[i]);
                }
            }

            #[test]
            fn lowering_a_pvalue_never_shrinks_rejections(
                ps in pvec(),
                idx in any::<proptest::sample::Index>(),
                shrink in 0.0..1.0f64,
            ) {
                let i = idx.index(ps.len());
                let mut lowered = ps.clone();
                lowered[i] *= shrink;
                let before = benjamini_hochberg(&ps, 0.1).unwrap();
                let after = benjamini_hochberg(&lowered, 0.1).unwrap();
                for j in 0..ps.len() {
                    prop_assert!(!before.rejected[j] || after.rejected[j],
                        "position {j} lost rejection after lowering p[{i}]");
                }
            }

            #[test]
            fn permutation_equivariance(ps in pvec(), seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut perm: Vec<usize> = (0..ps.len()).collect();
                // Fisher-Yates
                for i in (1..perm.len()).rev() {
                    let j = rng.random_range(0..=i);
                    perm.swap(i, j);
                }
                let permuted: Vec<f64> = perm.iter().map(|&i| ps[i]).collect();
                let base = benjamini_hochberg(&ps, 0.07).unwrap();
                let moved = benjamini_hochberg(&permuted, 0.07).unwrap();
                prop_assert_eq!(base.k_star, moved.k_star);
                // Compare multisets of rejected p-values; ties may land on
                // different positions but the rejected values agree.
                let mut a: Vec<f64> = ps.iter().zip(&base.rejected)
                    .filter(|(_, &r)| r).map(|(&p, _)| p).collect();
                let mut b: Vec<f64> = permuted.iter().zip(&moved.rejected)
                    .filter(|(_, &r)| r).map(|(&p, _)| p).collect();
                a.sort_by(f64::total_cmp);
                b.sort_by(f64::total_cmp);
                prop_assert_eq!(a, b);
            }
        }
    }
}
