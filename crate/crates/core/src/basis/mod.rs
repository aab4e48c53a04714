//! Orthonormal basis projections: Haar wavelets and principal components.
//!
//! Both bases are orthonormal for the discrete scalar product
//! `<u, v>_p = (1/p) sum_j u_j v_j`, so projection coefficients and
//! reconstruction formulas are uniform across the two.

mod haar;
mod pca;

pub use haar::{full_index_set, haar_eval, haar_project, haar_reconstruct, HaarIndex};
pub use pca::{pca_fit, pca_project, pca_project_centered, PCABasis};

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curves::format_f64;
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Which basis produced a feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Haar,
    Pca,
}

/// Identifier of a single feature level: a Haar index or a PC rank (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LevelId {
    Haar(HaarIndex),
    Pc(usize),
}

impl fmt::Display for LevelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelId::Haar(HaarIndex::Scaling) => write!(f, "scaling"),
            LevelId::Haar(HaarIndex::Wavelet { level, shift }) => write!(f, "w{level}.{shift}"),
            LevelId::Pc(rank) => write!(f, "pc{rank}"),
        }
    }
}

impl FromStr for LevelId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "scaling" {
            return Ok(LevelId::Haar(HaarIndex::Scaling));
        }
        if let Some(rest) = s.strip_prefix("pc") {
            let rank: usize = rest.parse().map_err(|_| format!("bad PC rank in {s:?}"))?;
            return Ok(LevelId::Pc(rank));
        }
        if let Some(rest) = s.strip_prefix('w') {
            let (l, k) = rest.split_once('.').ok_or_else(|| format!("bad level id {s:?}"))?;
            let level = l.parse().map_err(|_| format!("bad level in {s:?}"))?;
            let shift = k.parse().map_err(|_| format!("bad shift in {s:?}"))?;
            return Ok(LevelId::Haar(HaarIndex::Wavelet { level, shift }));
        }
        Err(format!("bad level id {s:?}"))
    }
}

impl Serialize for LevelId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LevelId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Projection coefficients: one row per source curve, one column per level.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub(crate) coeffs: Mat,
    pub(crate) levels: Vec<LevelId>,
    pub(crate) basis_kind: BasisKind,
    /// Curve index each coefficient row corresponds to.
    pub(crate) source_rows: Vec<usize>,
    /// For PCA features, the rows the basis was fitted on.
    pub(crate) fit_rows: Option<Vec<usize>>,
}

impl FeatureMatrix {
    pub fn coeffs(&self) -> &Mat {
        &self.coeffs
    }

    pub fn levels(&self) -> &[LevelId] {
        &self.levels
    }

    pub fn basis_kind(&self) -> BasisKind {
        self.basis_kind
    }

    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    pub fn fit_rows(&self) -> Option<&[usize]> {
        self.fit_rows.as_deref()
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Coefficient row for source curve `row`, if present.
    pub fn coeffs_for_row(&self, row: usize) -> Option<&[f64]> {
        let pos = self.source_rows.iter().position(|&r| r == row)?;
        Some(self.coeffs.row(pos))
    }

    /// Keep only the given columns (by position), preserving order.
    pub fn restrict_levels(&self, positions: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            coeffs: self.coeffs.select_cols(positions),
            levels: positions.iter().map(|&c| self.levels[c]).collect(),
            basis_kind: self.basis_kind,
            source_rows: self.source_rows.clone(),
            fit_rows: self.fit_rows.clone(),
        }
    }

    /// Write coefficients as CSV next to a JSON sidecar holding the metadata.
    ///
    /// `path` is the CSV file; the sidecar is `<path>.meta.json`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for row in self.coeffs.rows() {
            let line: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))?;

        let sidecar = FeatureSidecar {
            basis_kind: self.basis_kind,
            levels: self.levels.clone(),
            source_rows: self.source_rows.clone(),
            fit_rows: self.fit_rows.clone(),
        };
        let meta_path = sidecar_path(path);
        let json = serde_json::to_string_pretty(&sidecar)
            .map_err(|e| Error::Metadata { path: meta_path.clone(), detail: e.to_string() })?;
        fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))
    }

    /// Read a coefficient CSV and its `<path>.meta.json` sidecar.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta_path = sidecar_path(path);
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let sidecar: FeatureSidecar = serde_json::from_str(&meta_text)
            .map_err(|e| Error::Metadata { path: meta_path.clone(), detail: e.to_string() })?;

        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
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
            if row.len() != sidecar.levels.len() {
                return Err(Error::RaggedRow {
                    path: path.into(),
                    row: lineno + 1,
                    expected: sidecar.levels.len(),
                    got: row.len(),
                });
            }
            rows.push(row);
        }
        if rows.len() != sidecar.source_rows.len() {
            return Err(Error::Metadata {
                path: meta_path,
                detail: format!(
                    "sidecar lists {} source rows but CSV has {}",
                    sidecar.source_rows.len(),
                    rows.len()
                ),
            });
        }
        Ok(FeatureMatrix {
            coeffs: Mat::from_rows(&rows),
            levels: sidecar.levels,
            basis_kind: sidecar.basis_kind,
            source_rows: sidecar.source_rows,
            fit_rows: sidecar.fit_rows,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureSidecar {
    basis_kind: BasisKind,
    levels: Vec<LevelId>,
    source_rows: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fit_rows: Option<Vec<usize>>,
}

pub(crate) fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta.json");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_id_string_round_trip() {
        for id in [
            LevelId::Haar(HaarIndex::Scaling),
            LevelId::Haar(HaarIndex::Wavelet { level: 3, shift: 5 }),
            LevelId::Pc(17),
        ] {
            let s = id.to_string();
            assert_eq!(s.parse::<LevelId>().unwrap(), id);
        }
    }
}
