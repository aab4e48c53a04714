//! Brownian-bridge limiting laws.
//!
//! The supremum law (Kolmogorov distribution) has a fast alternating series.
//! The integrated-square law is calibrated once by seeded Monte Carlo over
//! its Karhunen-Loeve representation `sum_k Z_k^2 / (k pi)^2` and stored as
//! an empirical quantile table, cached on disk keyed by its parameters.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::curves::format_f64;
use crate::error::{Error, Result};

/// Defaults for the integrated-square table; the build is deterministic in
/// these three numbers, so the cache file name carries all of them.
pub const DEFAULT_NUM_DRAWS: usize = 1_000_000;
pub const DEFAULT_TRUNCATION: usize = 10_000;
pub const DEFAULT_BRIDGE_SEED: u64 = 271_828;

pub const MIN_DRAWS: usize = 100_000;
pub const MIN_TRUNCATION: usize = 1_000;

/// Probability spacing of the stored quantile grid.
const PROB_STEP: f64 = 1e-4;
const GRID_LEN: usize = 10_001;

/// CDF of `sup_t |B(t)|` (Kolmogorov distribution):
/// `1 - 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`, truncated once a term
/// drops below 1e-12. Returns 0 for `x <= 0.02` where the series underflows.
pub fn sup_bridge_cdf(x: f64) -> f64 {
    if x <= 0.02 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut k = 1.0;
    loop {
        let term = (-2.0 * k * k * x * x).exp();
        if term < 1e-12 {
            break;
        }
        sum += sign * term;
        sign = -sign;
        k += 1.0;
    }
    (1.0 - 2.0 * sum).clamp(0.0, 1.0)
}

/// Quantile of the Kolmogorov distribution by bisection.
pub fn sup_bridge_quantile(prob: f64) -> f64 {
    assert!((0.0..1.0).contains(&prob), "prob must be in [0, 1)");
    let mut lo = 0.02;
    let mut hi = 8.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sup_bridge_cdf(mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Monte Carlo quantile table for `integral_0^1 B(t)^2 dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeTables {
    num_draws: usize,
    truncation: usize,
    seed: u64,
    /// Quantiles at probabilities `0, 1e-4, ..., 1`.
    quantiles: Vec<f64>,
    mean: f64,
    sd: f64,
}

impl BridgeTables {
    pub fn num_draws(&self) -> usize {
        self.num_draws
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sample mean of the Monte Carlo draws (population value 1/6).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation of the draws.
    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn quantile_grid(&self) -> &[f64] {
        &self.quantiles
    }

    /// Interpolated quantile at `prob` in `[0, 1]`.
    pub fn l2_quantile(&self, prob: f64) -> f64 {
        assert!((0.0..=1.0).contains(&prob));
        let pos = prob / PROB_STEP;
        let lo = (pos.floor() as usize).min(GRID_LEN - 1);
        if lo == GRID_LEN - 1 {
            return self.quantiles[GRID_LEN - 1];
        }
        let frac = pos - lo as f64;
        self.quantiles[lo] * (1.0 - frac) + self.quantiles[lo + 1] * frac
    }

    /// CDF by inverse interpolation of the quantile table. Below the table
    /// minimum it is 0, above the maximum 1.
    pub fn l2_cdf(&self, x: f64) -> f64 {
        if x <= self.quantiles[0] {
            return 0.0;
        }
        if x >= self.quantiles[GRID_LEN - 1] {
            return 1.0;
        }
        // rightmost segment [i, i+1] with q[i] <= x
        let i = self.quantiles.partition_point(|&q| q <= x) - 1;
        let (qa, qb) = (self.quantiles[i], self.quantiles[i + 1]);
        let frac = if qb > qa { (x - qa) / (qb - qa) } else { 1.0 };
        ((i as f64 + frac) * PROB_STEP).clamp(0.0, 1.0)
    }

    /// Cache file for these parameters inside `dir`.
    pub fn cache_path(dir: &Path, num_draws: usize, truncation: usize, seed: u64) -> PathBuf {
        dir.join(format!("l2-bridge-{num_draws}-{truncation}-{seed}.csv"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::with_capacity(GRID_LEN * 24 + 64);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            self.num_draws,
            self.truncation,
            self.seed,
            format_f64(self.mean),
            format_f64(self.sd)
        ));
        for q in &self.quantiles {
            out.push_str(&format_f64(*q));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::EmptyInput { path: path.into() })?;
        let parts: Vec<&str> = header.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::Metadata {
                path: path.into(),
                detail: "expected 5 header fields".into(),
            });
        }
        let bad = |detail: &str| Error::Metadata { path: path.into(), detail: detail.into() };
        let num_draws = parts[0].parse().map_err(|_| bad("num_draws"))?;
        let truncation = parts[1].parse().map_err(|_| bad("truncation"))?;
        let seed = parts[2].parse().map_err(|_| bad("seed"))?;
        let mean = parts[3].parse().map_err(|_| bad("mean"))?;
        let sd = parts[4].parse().map_err(|_| bad("sd"))?;
        let mut quantiles = Vec::with_capacity(GRID_LEN);
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            quantiles.push(line.trim().parse().map_err(|_| bad("quantile"))?);
        }
        if quantiles.len() != GRID_LEN {
            return Err(bad(&format!("expected {GRID_LEN} quantiles, got {}", quantiles.len())));
        }
        Ok(BridgeTables { num_draws, truncation, seed, quantiles, mean, sd })
    }

    /// Load the cached table for these parameters, or build and cache it.
    pub fn load_or_build(
        dir: &Path,
        num_draws: usize,
        truncation: usize,
        seed: u64,
    ) -> Result<Self> {
        let path = Self::cache_path(dir, num_draws, truncation, seed);
        if path.exists() {
            if let Ok(t) = Self::load(&path) {
                if t.num_draws == num_draws && t.truncation == truncation && t.seed == seed {
                    return Ok(t);
                }
            }
        }
        let table = build_l2_bridge_table(num_draws, truncation, seed)?;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        table.save(&path)?;
        Ok(table)
    }

    /// The default table, cached in `dir`.
    pub fn default_in(dir: &Path) -> Result<Self> {
        Self::load_or_build(dir, DEFAULT_NUM_DRAWS, DEFAULT_TRUNCATION, DEFAULT_BRIDGE_SEED)
    }
}

/// Sample `integral B^2` via its Karhunen-Loeve series and tabulate the
/// empirical quantiles on a 1e-4 probability grid. One RNG stream per draw
/// keeps the result independent of the parallel schedule.
pub fn build_l2_bridge_table(
    num_draws: usize,
    truncation: usize,
    seed: u64,
) -> Result<BridgeTables> {
    if num_draws < MIN_DRAWS {
        return Err(Error::InsufficientDraws { min: MIN_DRAWS, got: num_draws });
    }
    if truncation < MIN_TRUNCATION {
        return Err(Error::InsufficientTruncation { min: MIN_TRUNCATION, got: truncation });
    }
    let weights: Vec<f64> = (1..=truncation)
        .map(|k| {
            let kp = k as f64 * std::f64::consts::PI;
            1.0 / (kp * kp)
        })
        .collect();

    let mut draws: Vec<f64> = (0..num_draws as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let mut acc = 0.0;
            for &w in &weights {
                let z: f64 = StandardNormal.sample(&mut rng);
                acc += w * z * z;
            }
            acc
        })
        .collect();

    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    draws.sort_unstable_by(f64::total_cmp);

    let quantiles: Vec<f64> = (0..GRID_LEN)
        .map(|g| {
            let pos = g as f64 * PROB_STEP * (num_draws - 1) as f64;
            let lo = pos.floor() as usize;
            if lo + 1 >= num_draws {
                draws[num_draws - 1]
            } else {
                let frac = pos - lo as f64;
                draws[lo] * (1.0 - frac) + draws[lo + 1] * frac
            }
        })
        .collect();

    Ok(BridgeTables { num_draws, truncation, seed, quantiles, mean, sd: var.sqrt() })
}
