//! Local Outlier Factor scoring.
//!
//! Density-ratio outlier score over points in a feature space: the k-distance
//! `d^k`, reachability distance `r_k(x, o) = max(d^k(o), d(x, o))`, local
//! reachability density `lr_k(x) = k / sum r_k(x, o)`, and
//! `LOF_k(x) = (1/k) sum lr_k(o) / lr_k(x)` over the k nearest neighbours.
//! Scores sit near 1 in homogeneous regions and grow with isolation.
//!
//! Distances are Euclidean over the selected feature coordinates. Neighbour
//! search is exact O(n^2); at a few hundred points per run nothing faster is
//! warranted, and the same code doubles as its own reference.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::curves::format_f64;
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Ratio contributed by a neighbour of infinite density when the centre has
/// finite density.
const INFINITE_DENSITY_RATIO: f64 = 1e12;

/// Points to score: one row per object.
#[derive(Debug, Clone)]
pub struct PointSet {
    points: Mat,
    ids: Vec<String>,
}

impl PointSet {
    /// Validate dimensions and entries. Needs at least one column and finite
    /// coordinates; identifiers default to the row index.
    pub fn new(points: Mat) -> Result<Self> {
        if points.n_cols() == 0 {
            return Err(Error::config("point set needs at least one coordinate"));
        }
        for (i, row) in points.rows().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        let ids = (0..points.n_rows()).map(|i| i.to_string()).collect();
        Ok(PointSet { points, ids })
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Self {
        assert_eq!(ids.len(), self.len(), "one id per point");
        self.ids = ids;
        self
    }

    pub fn len(&self) -> usize {
        self.points.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.n_cols()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// k-distances, neighbour lists, local reachability densities, and scores.
#[derive(Debug, Clone)]
pub struct LOFScores {
    pub k: usize,
    pub scores: Vec<f64>,
    pub kdist: Vec<f64>,
    pub lrd: Vec<f64>,
    pub neighbours: Vec<Vec<usize>>,
}

impl LOFScores {
    /// Indices whose score strictly exceeds `threshold`.
    pub fn flagged(&self, threshold: f64) -> Vec<usize> {
        (0..self.scores.len()).filter(|&i| self.scores[i] > threshold).collect()
    }

    /// CSV rows `id,lof,kdist,lrd` for the given point set.
    pub fn save_csv(&self, points: &PointSet, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("id,lof,kdist,lrd\n");
        for i in 0..self.scores.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                points.ids()[i],
                format_f64(self.scores[i]),
                format_f64(self.kdist[i]),
                format_f64(self.lrd[i])
            );
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// k-distance and the k nearest neighbours of every point.
///
/// Ties in distance are broken by ascending index, so every neighbour list
/// has exactly `k` entries and results are deterministic even with duplicate
/// points.
pub fn kdistance_and_neighbors(
    points: &PointSet,
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<usize>>)> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidNeighbourCount { k, n });
    }
    let mut kdist = vec![0.0; n];
    let mut neighbours = vec![Vec::with_capacity(k); n];
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        for j in 0..n {
            if j != i {
                order.push((euclidean(points.point(i), points.point(j)), j));
            }
        }
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        kdist[i] = order[k - 1].0;
        neighbours[i] = order[..k].iter().map(|&(_, j)| j).collect();
    }
    Ok((kdist, neighbours))
}

/// Full LOF computation.
///
/// Coincident points can make every reachability distance zero; such points
/// get infinite local density and a score of exactly 1 (maximally dense),
/// and contribute a capped ratio of 1e12 to finite-density centres.
pub fn lof_scores(points: &PointSet, k: usize) -> Result<LOFScores> {
    let (kdist, neighbours) = kdistance_and_neighbors(points, k)?;
    let n = points.len();

    let mut lrd = vec![0.0; n];
    for i in 0..n {
        let mut reach_sum = 0.0;
        for &o in &neighbours[i] {
            let d = euclidean(points.point(i), points.point(o));
            reach_sum += d.max(kdist[o]);
        }
        lrd[i] = if reach_sum == 0.0 { f64::INFINITY } else { k as f64 / reach_sum };
    }

    let mut scores = vec![0.0; n];
    for i in 0..n {
        if lrd[i].is_infinite() {
            scores[i] = 1.0;
            continue;
        }
        let mut acc = 0.0;
        for &o in &neighbours[i] {
            acc += if lrd[o].is_infinite() { INFINITE_DENSITY_RATIO } else { lrd[o] / lrd[i] };
        }
        scores[i] = acc / k as f64;
    }
    Ok(LOFScores { k, scores, kdist, lrd, neighbours })
}
