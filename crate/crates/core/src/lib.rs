//! Semi-supervised outlier detection for functional data.
//!
//! Curves are projected onto orthonormal bases (Haar wavelets or principal
//! components fitted on half the nominal set); a per-level two-sample test
//! (Kolmogorov-Smirnov, 2-Wasserstein, or infinity-Wasserstein) compares the
//! nominal and test coefficient distributions; Benjamini-Hochberg keeps the
//! false discovery rate of the level selection under control; and the Local
//! Outlier Factor scores the test curves on the selected coordinates.
//!
//! The crate also ships the telemetry simulator and the Monte Carlo level,
//! power, and FDR studies used to validate the tests, plus an end-to-end
//! [`pipeline`].

pub mod basis;
pub mod curves;
pub mod error;
pub mod lof;
pub mod mat;
pub mod pipeline;
pub mod selection;
pub mod simgen;
pub mod twosample;

pub use error::{Error, Result};
