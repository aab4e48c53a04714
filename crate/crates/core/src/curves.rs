//! Regularly-sampled functional observations and the nominal/test split.
//!
//! A [`CurveSet`] holds `n` curves sampled at `p` regular time points on
//! `[0, 1)`. Sample `j` (0-based) is identified with the dyadic cell
//! `[j/p, (j+1)/p)`, so `sample_times[j] = j/p`; this grid makes the discrete
//! Haar orthonormality in [`crate::basis`] exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mat::Mat;

/// `n` curves sampled at `p` regular time points in `[0, 1)`.
///
/// Immutable after construction; cheap to share between readers.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    values: Mat,
    sample_times: Vec<f64>,
    curve_ids: Vec<String>,
}

impl CurveSet {
    /// Build a curve set from a value matrix, generating the `j/p` grid and
    /// default `day-<i>` identifiers.
    pub fn new(values: Mat) -> Result<Self> {
        let p = values.n_cols();
        if p < 2 {
            return Err(Error::TooFewSamples { p });
        }
        for (i, row) in values.rows().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        let sample_times = (0..p).map(|j| j as f64 / p as f64).collect();
        let curve_ids = (0..values.n_rows()).map(|i| format!("day-{i}")).collect();
        Ok(CurveSet { values, sample_times, curve_ids })
    }

    /// Replace the default curve identifiers. Panics on length mismatch.
    pub fn with_ids(mut self, ids: Vec<String>) -> Self {
        assert_eq!(ids.len(), self.n_curves(), "one id per curve");
        self.curve_ids = ids;
        self
    }

    /// Number of curves `n`.
    pub fn n_curves(&self) -> usize {
        self.values.n_rows()
    }

    /// Samples per curve `p`.
    pub fn n_samples(&self) -> usize {
        self.values.n_cols()
    }

    /// Samples of curve `i`, in time order.
    pub fn curve(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    /// The grid `(0, 1/p, ..., (p-1)/p)`.
    pub fn sample_times(&self) -> &[f64] {
        &self.sample_times
    }

    pub fn curve_ids(&self) -> &[String] {
        &self.curve_ids
    }

    pub fn curve_id(&self, i: usize) -> &str {
        &self.curve_ids[i]
    }

    /// Read a curve set from CSV: one curve per row, samples in time order,
    /// comma separated, decimal point. With `has_header` the first line is
    /// skipped.
    pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        if has_header {
            lines.next();
        }

        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut expected = None;
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let width = *expected.get_or_insert(fields.len());
            if fields.len() != width {
                return Err(Error::RaggedRow {
                    path: path.into(),
                    row: lineno + 1,
                    expected: width,
                    got: fields.len(),
                });
            }
            let mut row = Vec::with_capacity(width);
            for (col, field) in fields.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::ParseCell {
                    path: path.into(),
                    row: lineno + 1,
                    col: col + 1,
                    text: field.trim().to_string(),
                })?;
                row.push(v);
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput { path: path.into() });
        }
        CurveSet::new(Mat::from_rows(&rows))
    }

    /// Write the curve set as CSV with 17 significant digits per value, which
    /// round-trips `f64` exactly through `load_csv`.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for row in self.values.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                let _ = write!(out, "{}", format_f64(*v));
                first = false;
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// 17-significant-digit decimal rendering; parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Partition of `{0..n-1}` into nominal and test rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitLabels {
    nominal: Vec<usize>,
    test: Vec<usize>,
    n: usize,
}

impl SplitLabels {
    /// Nominal row indices, sorted ascending.
    pub fn nominal_indices(&self) -> &[usize] {
        &self.nominal
    }

    /// Test row indices (the complement), sorted ascending.
    pub fn test_indices(&self) -> &[usize] {
        &self.test
    }

    /// Size of the nominal set.
    pub fn n_nominal(&self) -> usize {
        self.nominal.len()
    }

    /// Size of the test set.
    pub fn n_test(&self) -> usize {
        self.test.len()
    }

    /// Total number of rows partitioned.
    pub fn n_total(&self) -> usize {
        self.n
    }
}

/// Split `n` rows into a nominal set and its complement.
///
/// The nominal set must hold at least 4 rows (so the PCA even/odd split keeps
/// a usable half on each side) and must not cover everything.
pub fn make_split(n: usize, nominal_indices: &[usize]) -> Result<SplitLabels> {
    let mut seen = vec![false; n];
    for &idx in nominal_indices {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, n });
        }
        if seen[idx] {
            return Err(Error::DuplicateIndex { index: idx });
        }
        seen[idx] = true;
    }
    let n0 = nominal_indices.len();
    if n0 < 4 {
        return Err(Error::NominalTooSmall { n0 });
    }
    if n0 == n {
        return Err(Error::EmptyTestSet { n });
    }
    let mut nominal: Vec<usize> = nominal_indices.to_vec();
    nominal.sort_unstable();
    let test: Vec<usize> = (0..n).filter(|i| !seen[*i]).collect();
    Ok(SplitLabels { nominal, test, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> std::path::PathBuf {
        let mut path = std::env::temp_dir();
        let unique = format!(
            "fdod-curves-{}-{:?}.csv",
            std::process::id(),
            std::thread::current().id()
        );
        path.push(unique);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn load_small_csv() {
        let path = write_temp("1,2,3,4\n5,6,7,8\n9,10,11,12\n");
        let cs = CurveSet::load_csv(&path, false).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(cs.n_curves(), 3);
        assert_eq!(cs.n_samples(), 4);
        assert_eq!(cs.sample_times(), &[0.0, 0.25, 0.5, 0.75]);
        assert_eq!(cs.curve(1), &[5.0, 6.0, 7.0, 8.0]);
        assert_eq!(cs.curve_id(0), "day-0");
    }

    #[test]
    fn ragged_row_is_rejected() {
        let path = write_temp("1,2,3,4\n5,6,7\n9,10,11,12\n");
        let err = CurveSet::load_csv(&path, false).unwrap_err();
        fs::remove_file(&path).ok();
        match err {
            Error::RaggedRow { row, expected, got, .. } => {
                assert_eq!(row, 2);
                assert_eq!(expected, 4);
                assert_eq!(got, 3);
            }
            other => panic!("expected ragged-row error, got {other}"),
        }
    }

    #[test]
    fn non_numeric_cell_is_rejected() {
        let path = write_temp("1,2\n3,x\n");
        let err = CurveSet::load_csv(&path, false).unwrap_err();
        fs::remove_file(&path).ok();
        match err {
            Error::ParseCell { row, col, text, .. } => {
                assert_eq!((row, col), (2, 2));
                assert_eq!(text, "x");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn empty_file_is_rejected() {
        let path = write_temp("");
        let err = CurveSet::load_csv(&path, false).unwrap_err();
        fs::remove_file(&path).ok();
        assert!(matches!(err, Error::EmptyInput { .. }));
    }

    #[test]
    fn header_is_skipped() {
        let path = write_temp("t0,t1\n1.5,2.5\n3.5,4.5\n");
        let cs = CurveSet::load_csv(&path, true).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(cs.n_curves(), 2);
        assert_eq!(cs.curve(0), &[1.5, 2.5]);
    }

    #[test]
    fn save_load_identity_on_awkward_values() {
        let vals = vec![
            vec![0.1, 1.0 / 3.0, -2.5e-17, 1.7976931348623157e308],
            vec![5e-324, -0.0, 123456789.123456789, 2.2250738585072014e-308],
        ];
        let cs = CurveSet::new(Mat::from_rows(&vals)).unwrap();
        let path = write_temp("");
        cs.save_csv(&path).unwrap();
        let back = CurveSet::load_csv(&path, false).unwrap();
        fs::remove_file(&path).ok();
        for i in 0..2 {
            for j in 0..4 {
                assert_eq!(cs.curve(i)[j].to_bits(), back.curve(i)[j].to_bits());
            }
        }
    }

    #[test]
    fn split_year_two_nominal() {
        let nominal: Vec<usize> = (240..480).collect();
        let s = make_split(480, &nominal).unwrap();
        assert_eq!(s.n_nominal(), 240);
        assert_eq!(s.n_test(), 240);
        assert_eq!(s.test_indices(), (0..240).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn split_rejects_full_cover() {
        let err = make_split(4, &[0, 1, 2, 3]).unwrap_err();
        assert!(matches!(err, Error::EmptyTestSet { n: 4 }));
    }

    #[test]
    fn split_complement() {
        let s = make_split(10, &[0, 2, 4, 6]).unwrap();
        assert_eq!(s.test_indices(), &[1, 3, 5, 7, 8, 9]);
    }

    #[test]
    fn split_rejects_bad_indices() {
        assert!(matches!(
            make_split(5, &[0, 1, 2, 7]),
            Err(Error::IndexOutOfRange { index: 7, n: 5 })
        ));
        assert!(matches!(
            make_split(6, &[0, 1, 1, 2]),
            Err(Error::DuplicateIndex { index: 1 })
        ));
        assert!(matches!(make_split(6, &[0, 1, 2]), Err(Error::NominalTooSmall { n0: 3 })));
    }

    #[test]
    fn split_partitions() {
        let s = make_split(13, &[3, 7, 11, 0, 5]).unwrap();
        let mut all: Vec<usize> = s.nominal_indices().to_vec();
        all.extend_from_slice(s.test_indices());
        all.sort_unstable();
        assert_eq!(all, (0..13).collect::<Vec<_>>());
    }
}
