//! End-to-end pipeline: project curves, select levels, score with LOF, and
//! report detections against ground truth.
//!
//! Eleven feature sets are supported, from raw samples through fixed basis
//! subsets to the two-sample-selected coefficient sets. LOF runs over the
//! rows not labelled nominal; nominal rows can optionally join as
//! neighbours, scored but never reported.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::{
    haar_project, pca_fit, pca_project, pca_project_centered, FeatureMatrix, HaarIndex, LevelId,
};
use crate::curves::{format_f64, make_split, CurveSet, SplitLabels};
use crate::error::{Error, Result};
use crate::lof::{lof_scores, PointSet};
use crate::mat::Mat;
use crate::selection::{select_levels, split_features, Correction, SelectionResult};
use crate::twosample::{BridgeTables, TestKind};

/// The eleven feature sets of the application study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSet {
    /// 0: raw samples.
    RawData,
    /// 1: all retained PCA coefficients.
    PcaFull,
    /// 2: smallest PCA prefix holding 95% of the fit-half variance.
    PcaVariance95,
    /// 3: all Haar coefficients.
    HaarFull,
    /// 4: scaling plus wavelet levels 0-2 (8 coefficients).
    HaarCoarse,
    /// 5: wavelet level 3 (8 coefficients).
    HaarLevel3,
    /// 6: wavelet level 4 (16 coefficients).
    HaarLevel4,
    /// 7: PCA levels selected by the 2-Wasserstein test.
    PcaW2,
    /// 8: PCA levels selected by the infinity-Wasserstein test.
    PcaWInf,
    /// 9: Haar levels selected by the 2-Wasserstein test.
    HaarW2,
    /// 10: Haar levels selected by the infinity-Wasserstein test.
    HaarWInf,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 11] = [
        FeatureSet::RawData,
        FeatureSet::PcaFull,
        FeatureSet::PcaVariance95,
        FeatureSet::HaarFull,
        FeatureSet::HaarCoarse,
        FeatureSet::HaarLevel3,
        FeatureSet::HaarLevel4,
        FeatureSet::PcaW2,
        FeatureSet::PcaWInf,
        FeatureSet::HaarW2,
        FeatureSet::HaarWInf,
    ];

    pub fn id(self) -> u8 {
        Self::ALL.iter().position(|&s| s == self).unwrap() as u8
    }

    pub fn from_id(id: u8) -> Option<FeatureSet> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureSet::RawData => "raw",
            FeatureSet::PcaFull => "pca-full",
            FeatureSet::PcaVariance95 => "pca-95",
            FeatureSet::HaarFull => "haar-full",
            FeatureSet::HaarCoarse => "haar-lev012",
            FeatureSet::HaarLevel3 => "haar-lev3",
            FeatureSet::HaarLevel4 => "haar-lev4",
            FeatureSet::PcaW2 => "pca-w2",
            FeatureSet::PcaWInf => "pca-winf",
            FeatureSet::HaarW2 => "haar-w2",
            FeatureSet::HaarWInf => "haar-winf",
        }
    }

    /// Two-sample test behind the selection sets.
    fn selection_test(self) -> Option<TestKind> {
        match self {
            FeatureSet::PcaW2 | FeatureSet::HaarW2 => Some(TestKind::W2),
            FeatureSet::PcaWInf | FeatureSet::HaarWInf => Some(TestKind::WInf),
            _ => None,
        }
    }

}

/// Pipeline options; defaults follow the application study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub feature_sets: Vec<FeatureSet>,
    pub lof_k: usize,
    pub thresholds: Vec<f64>,
    pub alpha: f64,
    pub correction: Correction,
    /// Project centered residuals instead of the raw curves (PCA sets).
    pub pca_center: bool,
    /// Let nominal rows act as LOF neighbours (scored but not reported).
    pub include_nominal_neighbors: bool,
    /// Divide each feature by its nominal-set standard deviation.
    pub standardize: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            feature_sets: FeatureSet::ALL.to_vec(),
            lof_k: 10,
            thresholds: vec![2.0, 4.0],
            alpha: 0.05,
            correction: Correction::BenjaminiHochberg,
            pca_center: false,
            include_nominal_neighbors: false,
            standardize: false,
        }
    }
}

/// LOF score of one reported (test) row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DayScore {
    pub row: usize,
    /// 1-based day number, for cross-reading with 1-based run books.
    pub day: usize,
    pub id: String,
    pub lof: f64,
}

/// Rows flagged at one threshold, with ground-truth tallies when available.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub threshold: f64,
    pub detected_rows: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_positives: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub false_alarms: Option<usize>,
}

/// What the selection stage kept, for the selection-based sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub test_kind: TestKind,
    pub alpha: f64,
    pub correction: Correction,
    pub n_levels: usize,
    pub k_star: usize,
    pub rejected_levels: Vec<String>,
}

impl SelectionSummary {
    fn from_result(r: &SelectionResult) -> Self {
        SelectionSummary {
            test_kind: r.test_kind,
            alpha: r.alpha,
            correction: r.correction,
            n_levels: r.levels.len(),
            k_star: r.k_star,
            rejected_levels: r.rejected_levels().iter().map(|l| l.to_string()).collect(),
        }
    }
}

/// Per-feature-set outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSetReport {
    pub id: u8,
    pub label: String,
    /// Coordinate dimensionality actually passed to LOF.
    pub n_features: usize,
    pub scores: Vec<DayScore>,
    pub thresholds: Vec<ThresholdReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionSummary>,
    /// `min LOF over true anomalies - max LOF over the other test rows`,
    /// when ground truth is available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation_margin: Option<f64>,
}

impl FeatureSetReport {
    pub fn detected(&self, threshold: f64) -> Option<&ThresholdReport> {
        self.thresholds.iter().find(|t| t.threshold == threshold)
    }

    pub fn true_positive_count(&self, threshold: f64) -> Option<usize> {
        self.detected(threshold).and_then(|t| t.true_positives)
    }
}

/// Run metadata echoed into every report.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl RunMetadata {
    pub fn new(seed: Option<u64>) -> Self {
        RunMetadata {
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            extra: BTreeMap::new(),
        }
    }
}

/// Full pipeline output. Serializes to deterministic JSON: same seed and
/// config give byte-identical reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n_curves: usize,
    pub n_samples: usize,
    pub nominal_rows: Vec<usize>,
    pub lof_k: usize,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<usize>>,
    pub sets: Vec<FeatureSetReport>,
    pub metadata: RunMetadata,
}

impl PipelineReport {
    pub fn set(&self, set: FeatureSet) -> Option<&FeatureSetReport> {
        self.sets.iter().find(|s| s.id == set.id())
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Metadata { path: path.into(), detail: e.to_string() })?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Tidy per-day scores: `set,label,row,day,id,lof`, ready for plotting.
    pub fn save_scores_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("set,label,row,day,id,lof\n");
        for set in &self.sets {
            for s in &set.scores {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    set.id,
                    set.label,
                    s.row,
                    s.day,
                    s.id,
                    format_f64(s.lof)
                );
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Nominal-equals-second-year split used by the default experiment.
pub fn second_year_split(n_days: usize, year_length: usize) -> Result<SplitLabels> {
    if year_length >= n_days {
        return Err(Error::config("year_length must be smaller than n_days"));
    }
    make_split(n_days, &(year_length..n_days).collect::<Vec<_>>())
}

struct StageCtx<'a> {
    curves: &'a CurveSet,
    split: &'a SplitLabels,
    config: &'a PipelineConfig,
    tables: Option<&'a BridgeTables>,
}

/// Run the pipeline over the requested feature sets.
///
/// `ground_truth` rows, when given, are compared against detections. Sets
/// 7 and 9 need a bridge table for their 2-Wasserstein p-values.
pub fn run_pipeline(
    curves: &CurveSet,
    split: &SplitLabels,
    ground_truth: Option<&[usize]>,
    config: &PipelineConfig,
    tables: Option<&BridgeTables>,
    metadata: RunMetadata,
) -> Result<PipelineReport> {
    if split.n_total() != curves.n_curves() {
        return Err(Error::config(format!(
            "split covers {} rows but the curve set has {}",
            split.n_total(),
            curves.n_curves()
        )));
    }
    let needs_table = config
        .feature_sets
        .iter()
        .any(|s| s.selection_test() == Some(TestKind::W2));
    if needs_table && tables.is_none() {
        return Err(Error::MissingBridgeTable);
    }

    let mut sets: Vec<FeatureSet> = config.feature_sets.clone();
    sets.sort();
    sets.dedup();

    let ctx = StageCtx { curves, split, config, tables };
    let mut reports = Vec::with_capacity(sets.len());
    for set in sets {
        reports.push(run_one_set(&ctx, set, ground_truth)?);
    }

    Ok(PipelineReport {
        n_curves: curves.n_curves(),
        n_samples: curves.n_samples(),
        nominal_rows: split.nominal_indices().to_vec(),
        lof_k: config.lof_k,
        alpha: config.alpha,
        ground_truth: ground_truth.map(|t| t.to_vec()),
        sets: reports,
        metadata,
    })
}

fn stage_err(set: FeatureSet, stage: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::Stage { feature_set: set.id(), stage, source: Box::new(e) }
}

fn run_one_set(
    ctx: &StageCtx<'_>,
    set: FeatureSet,
    ground_truth: Option<&[usize]>,
) -> Result<FeatureSetReport> {
    // Rows passed to LOF: test rows first, then (optionally) nominal rows.
    let mut scoring_rows: Vec<usize> = ctx.split.test_indices().to_vec();
    if ctx.config.include_nominal_neighbors {
        scoring_rows.extend_from_slice(ctx.split.nominal_indices());
    }
    let n_reported = ctx.split.n_test();

    let (coords, reference, selection) = coordinates(ctx, set, &scoring_rows)?;
    let n_features = coords.n_cols();

    if n_features == 0 {
        // Nothing survived selection: no coordinates, nothing to flag.
        return Ok(FeatureSetReport {
            id: set.id(),
            label: set.label().to_string(),
            n_features: 0,
            scores: Vec::new(),
            thresholds: ctx
                .config
                .thresholds
                .iter()
                .map(|&threshold| ThresholdReport {
                    threshold,
                    detected_rows: Vec::new(),
                    true_positives: ground_truth.map(|_| 0),
                    false_alarms: ground_truth.map(|_| 0),
                })
                .collect(),
            selection,
            separation_margin: None,
        });
    }

    let coords = if ctx.config.standardize {
        standardized(coords, &reference)
    } else {
        coords
    };

    let ids = scoring_rows.iter().map(|&r| ctx.curves.curve_id(r).to_string()).collect();
    let points = PointSet::new(coords).map_err(stage_err(set, "points"))?.with_ids(ids);
    let lof = lof_scores(&points, ctx.config.lof_k).map_err(stage_err(set, "lof"))?;

    let scores: Vec<DayScore> = scoring_rows[..n_reported]
        .iter()
        .enumerate()
        .map(|(pos, &row)| DayScore {
            row,
            day: row + 1,
            id: ctx.curves.curve_id(row).to_string(),
            lof: lof.scores[pos],
        })
        .collect();

    let truth_set: Option<Vec<usize>> = ground_truth.map(|t| t.to_vec());
    let thresholds = ctx
        .config
        .thresholds
        .iter()
        .map(|&threshold| {
            let detected_rows: Vec<usize> = scores
                .iter()
                .filter(|s| s.lof > threshold)
                .map(|s| s.row)
                .collect();
            let (tp, fa) = match &truth_set {
                Some(truth) => {
                    let tp = detected_rows.iter().filter(|r| truth.contains(r)).count();
                    (Some(tp), Some(detected_rows.len() - tp))
                }
                None => (None, None),
            };
            ThresholdReport { threshold, detected_rows, true_positives: tp, false_alarms: fa }
        })
        .collect();

    let separation_margin = truth_set.as_ref().and_then(|truth| {
        let outlier_min = scores
            .iter()
            .filter(|s| truth.contains(&s.row))
            .map(|s| s.lof)
            .fold(f64::INFINITY, f64::min);
        let inlier_max = scores
            .iter()
            .filter(|s| !truth.contains(&s.row))
            .map(|s| s.lof)
            .fold(f64::NEG_INFINITY, f64::max);
        (outlier_min.is_finite() && inlier_max.is_finite()).then_some(outlier_min - inlier_max)
    });

    Ok(FeatureSetReport {
        id: set.id(),
        label: set.label().to_string(),
        n_features,
        scores,
        thresholds,
        selection,
        separation_margin,
    })
}

/// Coordinates for the scoring rows plus the nominal reference coordinates
/// used for standardization, and the selection summary when one ran.
fn coordinates(
    ctx: &StageCtx<'_>,
    set: FeatureSet,
    scoring_rows: &[usize],
) -> Result<(Mat, Mat, Option<SelectionSummary>)> {
    let wrap = stage_err(set, "features");
    match set {
        FeatureSet::RawData => {
            let coords = ctx.curves.values().select_rows(scoring_rows);
            let reference = ctx.curves.values().select_rows(ctx.split.nominal_indices());
            Ok((coords, reference, None))
        }
        FeatureSet::HaarFull | FeatureSet::HaarCoarse | FeatureSet::HaarLevel3
        | FeatureSet::HaarLevel4 => {
            let features = haar_project(ctx.curves).map_err(&wrap)?;
            let cols = haar_set_columns(set, &features)?;
            let restricted = features.restrict_levels(&cols);
            let coords = gather_rows(&restricted, scoring_rows)?;
            let reference = gather_rows(&restricted, ctx.split.nominal_indices())?;
            Ok((coords, reference, None))
        }
        FeatureSet::PcaFull | FeatureSet::PcaVariance95 => {
            let basis = pca_fit(ctx.curves, ctx.split).map_err(&wrap)?;
            let project = if ctx.config.pca_center { pca_project_centered } else { pca_project };
            let keep = match set {
                FeatureSet::PcaVariance95 => basis.components_for_variance(0.95),
                _ => basis.n_components(),
            };
            let nominal_ref: Vec<usize> = ctx
                .split
                .nominal_indices()
                .iter()
                .copied()
                .filter(|r| !basis.fit_indices().contains(r))
                .collect();
            let features =
                project(ctx.curves, &basis, scoring_rows).map_err(&wrap)?;
            let reference_features =
                project(ctx.curves, &basis, &nominal_ref).map_err(&wrap)?;
            let cols: Vec<usize> = (0..keep).collect();
            Ok((
                features.restrict_levels(&cols).coeffs().clone(),
                reference_features.restrict_levels(&cols).coeffs().clone(),
                None,
            ))
        }
        FeatureSet::PcaW2 | FeatureSet::PcaWInf => {
            let kind = set.selection_test().unwrap();
            let basis = pca_fit(ctx.curves, ctx.split).map_err(&wrap)?;
            let project = if ctx.config.pca_center { pca_project_centered } else { pca_project };
            // Selection sees every row outside the fit half.
            let usable: Vec<usize> = (0..ctx.curves.n_curves())
                .filter(|r| !basis.fit_indices().contains(r))
                .collect();
            let sel_features = project(ctx.curves, &basis, &usable).map_err(&wrap)?;
            let samples = split_features(&sel_features, ctx.split)
                .map_err(stage_err(set, "split-features"))?;
            let result =
                select_levels(&samples, kind, ctx.config.alpha, ctx.config.correction, ctx.tables)
                    .map_err(stage_err(set, "selection"))?;
            let summary = SelectionSummary::from_result(&result);
            let positions = result.rejected_positions();

            let features = project(ctx.curves, &basis, scoring_rows).map_err(&wrap)?;
            let nominal_ref: Vec<usize> = ctx
                .split
                .nominal_indices()
                .iter()
                .copied()
                .filter(|r| !basis.fit_indices().contains(r))
                .collect();
            let reference_features = project(ctx.curves, &basis, &nominal_ref).map_err(&wrap)?;
            Ok((
                features.restrict_levels(&positions).coeffs().clone(),
                reference_features.restrict_levels(&positions).coeffs().clone(),
                Some(summary),
            ))
        }
        FeatureSet::HaarW2 | FeatureSet::HaarWInf => {
            let kind = set.selection_test().unwrap();
            let features = haar_project(ctx.curves).map_err(&wrap)?;
            let samples = split_features(&features, ctx.split)
                .map_err(stage_err(set, "split-features"))?;
            let result =
                select_levels(&samples, kind, ctx.config.alpha, ctx.config.correction, ctx.tables)
                    .map_err(stage_err(set, "selection"))?;
            let summary = SelectionSummary::from_result(&result);
            let positions = result.rejected_positions();
            let restricted = features.restrict_levels(&positions);
            let coords = gather_rows(&restricted, scoring_rows)?;
            let reference = gather_rows(&restricted, ctx.split.nominal_indices())?;
            Ok((coords, reference, Some(summary)))
        }
    }
}

/// Column positions of the fixed Haar subsets.
fn haar_set_columns(set: FeatureSet, features: &FeatureMatrix) -> Result<Vec<usize>> {
    let wanted = |level: &LevelId| -> bool {
        let haar_level = match level {
            LevelId::Haar(HaarIndex::Scaling) => None,
            LevelId::Haar(HaarIndex::Wavelet { level, .. }) => Some(*level),
            LevelId::Pc(_) => return false,
        };
        match set {
            FeatureSet::HaarFull => true,
            FeatureSet::HaarCoarse => matches!(haar_level, None | Some(0) | Some(1) | Some(2)),
            FeatureSet::HaarLevel3 => haar_level == Some(3),
            FeatureSet::HaarLevel4 => haar_level == Some(4),
            _ => unreachable!("not a fixed Haar set"),
        }
    };
    let cols: Vec<usize> = features
        .levels()
        .iter()
        .enumerate()
        .filter(|(_, l)| wanted(l))
        .map(|(i, _)| i)
        .collect();
    if cols.is_empty() {
        return Err(Error::Stage {
            feature_set: set.id(),
            stage: "features",
            source: Box::new(Error::config(format!(
                "{} needs wavelet levels the data does not reach (p too small)",
                set.label()
            ))),
        });
    }
    Ok(cols)
}

fn gather_rows(features: &FeatureMatrix, rows: &[usize]) -> Result<Mat> {
    let mut out = Mat::zeros(rows.len(), features.n_levels());
    for (dst, &row) in rows.iter().enumerate() {
        let coeffs = features
            .coeffs_for_row(row)
            .ok_or_else(|| Error::config(format!("feature matrix is missing row {row}")))?;
        out.row_mut(dst).copy_from_slice(coeffs);
    }
    Ok(out)
}

/// Divide each column by its standard deviation over the reference rows.
/// Columns with zero spread are left unscaled.
fn standardized(mut coords: Mat, reference: &Mat) -> Mat {
    let d = coords.n_cols();
    let m = reference.n_rows();
    if m < 2 {
        return coords;
    }
    for c in 0..d {
        let col = reference.column(c);
        let mean = col.iter().sum::<f64>() / m as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m as f64 - 1.0);
        let sd = var.sqrt();
        if sd > 0.0 {
            for i in 0..coords.n_rows() {
                let v = coords.get(i, c);
                coords.set(i, c, v / sd);
            }
        }
    }
    coords
}
