//! Haar wavelet basis on the dyadic grid.
//!
//! The mother wavelet is `psi = 1 on [0, 1/2), -1 on [1/2, 1)`, dilated and
//! translated as `phi_{l,k}(x) = 2^{l/2} psi(2^l x - k)`, plus the constant
//! scaling function. On the grid `t_j = j/p` with `p = 2^(J+1)` the family
//! `{scaling} ∪ {(l,k) : 0 <= l <= J}` has exactly `p` members and is
//! orthonormal for `<u,v>_p = (1/p) sum u_j v_j`.

use crate::curves::CurveSet;
use crate::error::{Error, Result};
use crate::mat::Mat;

use super::{BasisKind, FeatureMatrix, LevelId};

/// Index of one Haar basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HaarIndex {
    /// The constant function `phi_0 = 1`.
    Scaling,
    /// `phi_{l,k}` with `0 <= k < 2^l`.
    Wavelet { level: u32, shift: u32 },
}

impl HaarIndex {
    /// Wavelet level, or `None` for the scaling function.
    pub fn level(&self) -> Option<u32> {
        match self {
            HaarIndex::Scaling => None,
            HaarIndex::Wavelet { level, .. } => Some(*level),
        }
    }
}

/// Evaluate one Haar basis function at `t` in `[0, 1)`.
pub fn haar_eval(index: HaarIndex, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain { value: t, domain: "[0, 1)" });
    }
    Ok(match index {
        HaarIndex::Scaling => 1.0,
        HaarIndex::Wavelet { level, shift } => {
            let scale = 2f64.powi(level as i32);
            let u = scale * t - shift as f64;
            let amp = scale.sqrt();
            if (0.0..0.5).contains(&u) {
                amp
            } else if (0.5..1.0).contains(&u) {
                -amp
            } else {
                0.0
            }
        }
    })
}

/// The full index set for `p = 2^(J+1)` samples: scaling first, then wavelets
/// by level ascending, shift ascending. Has exactly `p` members.
pub fn full_index_set(p: usize) -> Result<Vec<HaarIndex>> {
    if p < 2 {
        return Err(Error::TooFewSamples { p });
    }
    if !p.is_power_of_two() {
        return Err(Error::NotPowerOfTwo { p });
    }
    let max_level = p.trailing_zeros() - 1; // p = 2^(J+1)
    let mut set = Vec::with_capacity(p);
    set.push(HaarIndex::Scaling);
    for level in 0..=max_level {
        for shift in 0..(1u32 << level) {
            set.push(HaarIndex::Wavelet { level, shift });
        }
    }
    debug_assert_eq!(set.len(), p);
    Ok(set)
}

/// Basis matrix `B[lambda][j] = phi_lambda(t_j)` on the grid `t_j = j/p`.
fn basis_matrix(p: usize, set: &[HaarIndex]) -> Mat {
    let mut b = Mat::zeros(set.len(), p);
    for (li, &idx) in set.iter().enumerate() {
        let row = b.row_mut(li);
        match idx {
            HaarIndex::Scaling => row.fill(1.0),
            HaarIndex::Wavelet { level, shift } => {
                // Support is the dyadic block of p / 2^l grid cells at `shift`.
                let block = p >> level;
                let start = shift as usize * block;
                let amp = 2f64.powi(level as i32).sqrt();
                for v in row[start..start + block / 2].iter_mut() {
                    *v = amp;
                }
                for v in row[start + block / 2..start + block].iter_mut() {
                    *v = -amp;
                }
            }
        }
    }
    b
}

/// Project every curve onto the full Haar basis:
/// `theta[i][lambda] = (1/p) sum_j X[i][j] phi_lambda(t_j)`.
pub fn haar_project(curves: &CurveSet) -> Result<FeatureMatrix> {
    let p = curves.n_samples();
    let set = full_index_set(p)?;
    let basis = basis_matrix(p, &set);
    let n = curves.n_curves();
    let mut coeffs = Mat::zeros(n, p);
    let inv_p = 1.0 / p as f64;
    for i in 0..n {
        let x = curves.curve(i);
        let out = coeffs.row_mut(i);
        for (li, c) in out.iter_mut().enumerate() {
            let phi = basis.row(li);
            let mut acc = 0.0;
            for j in 0..p {
                acc += x[j] * phi[j];
            }
            *c = acc * inv_p;
        }
    }
    Ok(FeatureMatrix {
        coeffs,
        levels: set.iter().map(|&h| LevelId::Haar(h)).collect(),
        basis_kind: BasisKind::Haar,
        source_rows: (0..n).collect(),
        fit_rows: None,
    })
}

/// Invert a full-width Haar projection:
/// `X[i][j] = sum_lambda theta[i][lambda] phi_lambda(t_j)`.
pub fn haar_reconstruct(features: &FeatureMatrix) -> Result<CurveSet> {
    let p = features.n_levels();
    if features.basis_kind != BasisKind::Haar || !p.is_power_of_two() || p < 2 {
        return Err(Error::IncompleteBasis {
            expected: features.n_levels().next_power_of_two().max(2),
            got: features.n_levels(),
        });
    }
    let set = full_index_set(p)?;
    let expected: Vec<LevelId> = set.iter().map(|&h| LevelId::Haar(h)).collect();
    if features.levels != expected {
        return Err(Error::IncompleteBasis { expected: p, got: features.n_levels() });
    }
    let basis = basis_matrix(p, &set);
    let n = features.coeffs.n_rows();
    let mut values = Mat::zeros(n, p);
    for i in 0..n {
        let theta = features.coeffs.row(i);
        let out = values.row_mut(i);
        for (li, &c) in theta.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let phi = basis.row(li);
            for j in 0..p {
                out[j] += c * phi[j];
            }
        }
    }
    CurveSet::new(values)
}
