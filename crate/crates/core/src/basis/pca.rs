//! Principal component basis fitted on half the nominal set.
//!
//! To keep projected features independent of the fitted directions, the
//! basis is computed on every second nominal curve only (the fit half);
//! the remaining nominal curves stay available as a reference sample.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::curves::{format_f64, CurveSet, SplitLabels};
use crate::error::{Error, Result};
use crate::mat::Mat;

use super::{sidecar_path, BasisKind, FeatureMatrix, LevelId};

/// Eigenvalues below `RANK_TOLERANCE * lambda_max` are treated as numerical
/// rank deficiency and their components dropped.
const RANK_TOLERANCE: f64 = 1e-12;

/// Principal component basis: mean curve, components orthonormal under
/// `<u,v>_p`, eigenvalues in nonincreasing order, and the fit rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PCABasis {
    mean_curve: Vec<f64>,
    /// One component per row, `p` columns; unit norm under `<.,.>_p`.
    components: Mat,
    eigenvalues: Vec<f64>,
    fit_indices: Vec<usize>,
}

impl PCABasis {
    pub fn mean_curve(&self) -> &[f64] {
        &self.mean_curve
    }

    /// Component of 1-based `rank`.
    pub fn component(&self, rank: usize) -> &[f64] {
        self.components.row(rank - 1)
    }

    pub fn components(&self) -> &Mat {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.n_rows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn fit_indices(&self) -> &[usize] {
        &self.fit_indices
    }

    /// Samples per curve the basis was fitted for.
    pub fn n_samples(&self) -> usize {
        self.components.n_cols()
    }

    /// Smallest number of leading components whose eigenvalue mass reaches
    /// `fraction` of the total. Zero when the covariance is all zero.
    pub fn components_for_variance(&self, fraction: f64) -> usize {
        let total: f64 = self.eigenvalues.iter().sum();
        if total <= 0.0 {
            return 0;
        }
        let mut acc = 0.0;
        for (i, ev) in self.eigenvalues.iter().enumerate() {
            acc += ev;
            if acc >= fraction * total {
                return i + 1;
            }
        }
        self.eigenvalues.len()
    }

    /// Write components as CSV (one component per row) with a JSON sidecar
    /// carrying mean curve, eigenvalues, and fit rows.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for row in self.components.rows() {
            let line: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))?;
        let sidecar = PcaSidecar {
            mean_curve: self.mean_curve.clone(),
            eigenvalues: self.eigenvalues.clone(),
            fit_indices: self.fit_indices.clone(),
            n_samples: self.n_samples(),
        };
        let meta_path = sidecar_path(path);
        let json = serde_json::to_string_pretty(&sidecar)
            .map_err(|e| Error::Metadata { path: meta_path.clone(), detail: e.to_string() })?;
        fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta_path = sidecar_path(path);
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let sidecar: PcaSidecar = serde_json::from_str(&meta_text)
            .map_err(|e| Error::Metadata { path: meta_path.clone(), detail: e.to_string() })?;
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for (col, field) in line.split(',').enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::ParseCell {
                    path: path.into(),
                    row: lineno + 1,
                    col: col + 1,
                    text: field.trim().to_string(),
                })?;
                row.push(v);
            }
            if row.len() != sidecar.n_samples {
                return Err(Error::RaggedRow {
                    path: path.into(),
                    row: lineno + 1,
                    expected: sidecar.n_samples,
                    got: row.len(),
                });
            }
            rows.push(row);
        }
        let components =
            if rows.is_empty() { Mat::zeros(0, sidecar.n_samples) } else { Mat::from_rows(&rows) };
        Ok(PCABasis {
            mean_curve: sidecar.mean_curve,
            components,
            eigenvalues: sidecar.eigenvalues,
            fit_indices: sidecar.fit_indices,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PcaSidecar {
    mean_curve: Vec<f64>,
    eigenvalues: Vec<f64>,
    fit_indices: Vec<usize>,
    n_samples: usize,
}

/// Every second nominal row: 0-based positions 1, 3, 5, ... of the sorted
/// nominal index list. For nominal rows `1..n0` this is the even 1-based
/// indices `{2i}`.
pub(crate) fn fit_half(split: &SplitLabels) -> Vec<usize> {
    split
        .nominal_indices()
        .iter()
        .enumerate()
        .filter(|(pos, _)| pos % 2 == 1)
        .map(|(_, &row)| row)
        .collect()
}

/// Fit the principal component basis on the fit half of the nominal set.
///
/// The covariance uses the `1/|I0|` normalization. Components are Euclidean
/// eigenvectors rescaled by `sqrt(p)` so they are unit vectors under
/// `<.,.>_p`, ordered by decreasing eigenvalue, each with its first nonzero
/// coordinate made positive. Components whose eigenvalue falls below
/// `1e-12 * lambda_max` are dropped.
pub fn pca_fit(curves: &CurveSet, split: &SplitLabels) -> Result<PCABasis> {
    let fit_rows = fit_half(split);
    if fit_rows.len() < 2 {
        return Err(Error::InsufficientFitData { got: fit_rows.len() });
    }
    for &r in &fit_rows {
        if r >= curves.n_curves() {
            return Err(Error::IndexOutOfRange { index: r, n: curves.n_curves() });
        }
    }
    let p = curves.n_samples();
    let m = fit_rows.len();

    let mut mean = vec![0.0; p];
    for &r in &fit_rows {
        for (acc, v) in mean.iter_mut().zip(curves.curve(r)) {
            *acc += v;
        }
    }
    for v in mean.iter_mut() {
        *v /= m as f64;
    }

    // Centered fit block, m x p.
    let centered = DMatrix::from_fn(m, p, |i, j| curves.curve(fit_rows[i])[j] - mean[j]);
    let cov = centered.transpose() * &centered / m as f64;
    let eigen = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let lambda_max = eigen.eigenvalues[order[0]].max(0.0);
    let keep_cap = p.min(m);
    let sqrt_p = (p as f64).sqrt();
    let mut eigenvalues = Vec::new();
    let mut comps: Vec<Vec<f64>> = Vec::new();
    for &idx in order.iter().take(keep_cap) {
        let ev = eigen.eigenvalues[idx].max(0.0);
        if lambda_max <= 0.0 || ev < RANK_TOLERANCE * lambda_max {
            break;
        }
        let col = eigen.eigenvectors.column(idx);
        let sign = col.iter().find(|v| v.abs() > 1e-12).map_or(1.0, |v| v.signum());
        comps.push(col.iter().map(|v| v * sign * sqrt_p).collect());
        eigenvalues.push(ev);
    }

    let components = if comps.is_empty() { Mat::zeros(0, p) } else { Mat::from_rows(&comps) };
    Ok(PCABasis { mean_curve: mean, components, eigenvalues, fit_indices: fit_rows })
}

/// Project the given rows onto the basis: `theta[i][r] = <X_i, Phi_r>_p`.
///
/// Follows the displayed projection formula: the curve itself is projected,
/// not the centered residual. Rows used for selection or scoring must not
/// overlap the fit rows; that contract is enforced downstream where the
/// samples are assembled.
pub fn pca_project(curves: &CurveSet, basis: &PCABasis, rows: &[usize]) -> Result<FeatureMatrix> {
    project_impl(curves, basis, rows, false)
}

/// Variant that subtracts the fit mean before projecting.
pub fn pca_project_centered(
    curves: &CurveSet,
    basis: &PCABasis,
    rows: &[usize],
) -> Result<FeatureMatrix> {
    project_impl(curves, basis, rows, true)
}

fn project_impl(
    curves: &CurveSet,
    basis: &PCABasis,
    rows: &[usize],
    center: bool,
) -> Result<FeatureMatrix> {
    let p = curves.n_samples();
    if basis.n_samples() != p {
        return Err(Error::WidthMismatch { expected: basis.n_samples(), got: p });
    }
    for &r in rows {
        if r >= curves.n_curves() {
            return Err(Error::IndexOutOfRange { index: r, n: curves.n_curves() });
        }
    }
    let d = basis.n_components();
    let inv_p = 1.0 / p as f64;
    let mut coeffs = Mat::zeros(rows.len(), d);
    for (out_i, &r) in rows.iter().enumerate() {
        let x = curves.curve(r);
        let out = coeffs.row_mut(out_i);
        for (c, slot) in out.iter_mut().enumerate() {
            let phi = basis.components.row(c);
            let mut acc = 0.0;
            if center {
                for j in 0..p {
                    acc += (x[j] - basis.mean_curve[j]) * phi[j];
                }
            } else {
                for j in 0..p {
                    acc += x[j] * phi[j];
                }
            }
            *slot = acc * inv_p;
        }
    }
    Ok(FeatureMatrix {
        coeffs,
        levels: (1..=d).map(LevelId::Pc).collect(),
        basis_kind: BasisKind::Pca,
        source_rows: rows.to_vec(),
        fit_rows: Some(basis.fit_indices.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::make_split;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inner_p(u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / u.len() as f64
    }

    #[test]
    fn fit_half_takes_every_second_nominal() {
        let nominal: Vec<usize> = (240..480).collect();
        let split = make_split(480, &nominal).unwrap();
        let i0 = fit_half(&split);
        assert_eq!(i0.len(), 120);
        assert_eq!(i0[0], 241);
        assert_eq!(i0[1], 243);
        assert_eq!(*i0.last().unwrap(), 479);
    }

    #[test]
    fn constant_curves_give_zero_components() {
        let rows: Vec<Vec<f64>> = (0..6).map(|_| vec![1.0, 2.0, 3.0, 4.0]).collect();
        let cs = CurveSet::new(Mat::from_rows(&rows)).unwrap();
        let split = make_split(6, &[0, 1, 2, 3]).unwrap();
        let basis = pca_fit(&cs, &split).unwrap();
        assert_eq!(basis.n_components(), 0);
        assert_eq!(basis.components_for_variance(0.95), 0);
    }

    #[test]
    fn planar_data_has_two_components() {
        // Curves on a 2-D affine subspace of R^4.
        let u = [1.0, 0.0, -1.0, 0.5];
        let v = [0.0, 2.0, 1.0, -1.0];
        let base = [3.0, 3.0, 3.0, 3.0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                (0..4).map(|j| base[j] + a * u[j] + b * v[j]).collect()
            })
            .collect();
        let cs = CurveSet::new(Mat::from_rows(&rows)).unwrap();
        let split = make_split(12, &(0..8).collect::<Vec<_>>()).unwrap();
        let basis = pca_fit(&cs, &split).unwrap();
        assert_eq!(basis.n_components(), 2);
        // Components span {u, v}: residual of u and v after projecting onto
        // the fitted pair should vanish.
        for target in [u, v] {
            let mut residual: Vec<f64> = target.to_vec();
            for r in 1..=2 {
                let comp = basis.component(r);
                let c = inner_p(&target, comp);
                for (res, y) in residual.iter_mut().zip(comp) {
                    *res -= c * y;
                }
            }
            let norm = inner_p(&residual, &residual).sqrt();
            assert!(norm < 1e-8, "residual norm {norm}");
        }
    }

    #[test]
    fn components_orthonormal_under_discrete_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> =
            (0..10).map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let cs = CurveSet::new(Mat::from_rows(&rows)).unwrap();
        let split = make_split(10, &(0..8).collect::<Vec<_>>()).unwrap();
        let basis = pca_fit(&cs, &split).unwrap();
        for a in 1..=basis.n_components() {
            for b in a..=basis.n_components() {
                let dot = inner_p(basis.component(a), basis.component(b));
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-10, "({a},{b}) -> {dot}");
            }
        }
        // Eigenvalues nonincreasing.
        for w in basis.eigenvalues().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn projecting_a_component_gives_a_unit_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rows: Vec<Vec<f64>> =
            (0..12).map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let cs = CurveSet::new(Mat::from_rows(&rows)).unwrap();
        let split = make_split(12, &(0..8).collect::<Vec<_>>()).unwrap();
        let basis = pca_fit(&cs, &split).unwrap();
        assert!(basis.n_components() >= 2);

        let comp_curve = CurveSet::new(Mat::from_rows(&[basis.component(1).to_vec()])).unwrap();
        let f = pca_project(&comp_curve, &basis, &[0]).unwrap();
        for (c, &coeff) in f.coeffs().row(0).iter().enumerate() {
            let expected = if c == 0 { 1.0 } else { 0.0 };
            assert!((coeff - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_curve_projects_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut rows: Vec<Vec<f64>> =
            (0..8).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        rows.push(vec![0.0; 4]);
        let cs = CurveSet::new(Mat::from_rows(&rows)).unwrap();
        let split = make_split(9, &(0..8).collect::<Vec<_>>()).unwrap();
        let basis = pca_fit(&cs, &split).unwrap();
        let f = pca_project(&cs, &basis, &[8]).unwrap();
        for &c in f.coeffs().row(0) {
            assert_eq!(c, 0.0);
        }
    }

    #[test]
    fn project_matches_naive_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let rows: Vec<Vec<f64>> =
            (0..10).map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let cs = CurveSet::new(Mat::from_rows(&rows)).unwrap();
        let split = make_split(10, &(0..8).collect::<Vec<_>>()).unwrap();
        let basis = pca_fit(&cs, &split).unwrap();
        let f = pca_project(&cs, &basis, &[8, 9]).unwrap();
        for (out_i, &row) in [8usize, 9].iter().enumerate() {
            for c in 0..basis.n_components() {
                let expected = inner_p(cs.curve(row), basis.component(c + 1));
                assert!((f.coeffs().get(out_i, c) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fit_depends_only_on_membership_of_fit_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> =
            (0..6).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let cs = CurveSet::new(Mat::from_rows(&rows)).unwrap();
        // Swap the contents of the two fit rows (positions 1 and 3 of the
        // nominal list); the covariance is a sum, so the fit is unchanged.
        let mut swapped = rows.clone();
        swapped.swap(1, 3);
        let cs2 = CurveSet::new(Mat::from_rows(&swapped)).unwrap();
        let split = make_split(6, &[0, 1, 2, 3]).unwrap();
        let b1 = pca_fit(&cs, &split).unwrap();
        let b2 = pca_fit(&cs2, &split).unwrap();
        assert_eq!(b1.eigenvalues(), b2.eigenvalues());
        assert_eq!(b1.components(), b2.components());
    }

    #[test]
    fn width_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> =
            (0..6).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let cs = CurveSet::new(Mat::from_rows(&rows)).unwrap();
        let split = make_split(6, &[0, 1, 2, 3]).unwrap();
        let basis = pca_fit(&cs, &split).unwrap();
        let wide = CurveSet::new(Mat::from_rows(&[vec![0.0; 8]])).unwrap();
        assert!(matches!(
            pca_project(&wide, &basis, &[0]),
            Err(Error::WidthMismatch { expected: 4, got: 8 })
        ));
    }
}
