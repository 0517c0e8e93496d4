//! Seeded Latin hypercube designs and uniform fallback points.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SpotError;
use crate::rng::substream;

/// Keeps jittered points strictly inside their stratum under rounding.
const STRATUM_INSET: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub points: Vec<Vec<f64>>,
    /// Each row is evaluated this many times; rows are not duplicated here.
    pub repeats: usize,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn k(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

/// Latin hypercube design of `n` points in `[lower, upper]` drawn from the
/// `design` stream of `seed`.
pub fn lhd(n: usize, lower: &[f64], upper: &[f64], seed: u64) -> Result<DesignMatrix, SpotError> {
    let mut rng = substream(seed, "design", 0);
    let points = lhd_with_rng(n, lower, upper, &mut rng)?;
    Ok(DesignMatrix { points, repeats: 1 })
}

pub fn lhd_with_rng<R: Rng + ?Sized>(
    n: usize,
    lower: &[f64],
    upper: &[f64],
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, SpotError> {
    if n == 0 {
        return Err(SpotError::Argument("design size must be at least 1".into()));
    }
    if lower.len() != upper.len() || lower.is_empty() {
        return Err(SpotError::Argument(format!(
            "bounds must be non-empty and of equal length ({} vs {})",
            lower.len(),
            upper.len()
        )));
    }
    let k = lower.len();
    let mut points = vec![vec![0.0; k]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..k {
        strata.shuffle(rng);
        let width = upper[j] - lower[j];
        for (row, &s) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            let jitter = STRATUM_INSET + u * (1.0 - 2.0 * STRATUM_INSET);
            row[j] = if width > 0.0 {
                (lower[j] + width * ((s as f64 + jitter) / n as f64)).clamp(lower[j], upper[j])
            } else {
                lower[j]
            };
        }
    }
    Ok(points)
}

/// Uniform point in the box.
pub fn random_point<R: Rng + ?Sized>(lower: &[f64], upper: &[f64], rng: &mut R) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(&lo, &hi)| {
            let u: f64 = rng.random();
            if hi > lo {
                (lo + u * (hi - lo)).min(hi)
            } else {
                lo
            }
        })
        .collect()
}
