use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Histogram bins behind the entropy statistic.
pub const ENTROPY_BINS: usize = 64;

/// Names of the five per-group statistics, in column order.
pub const STAT_NAMES: [&str; 5] = ["mean", "std", "skew", "kurt", "entropy"];

/// Summary of one group of measurements.
///
/// Moments are population moments: `std = sqrt(m2)`, skewness `m3 / m2^1.5`,
/// excess kurtosis `m4 / m2^2 - 3`. Entropy is the Shannon entropy in nats
/// of a 64-bin equal-width histogram over `[min, max]`. A constant group has
/// every statistic but the mean equal to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub entropy: f64,
}

impl RegionStats {
    pub fn as_array(&self) -> [f64; 5] {
        [self.mean, self.std, self.skewness, self.kurtosis, self.entropy]
    }
}

pub fn region_stats(values: &[f64]) -> Result<RegionStats> {
    if values.is_empty() {
        return Err(Error::domain("cannot summarize an empty group"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("group values must be finite"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(RegionStats {
            mean: lo,
            std: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
            entropy: 0.0,
        });
    }

    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    let mut counts = [0usize; ENTROPY_BINS];
    let width = hi - lo;
    for &v in values {
        let b = (((v - lo) / width) * ENTROPY_BINS as f64) as usize;
        counts[b.min(ENTROPY_BINS - 1)] += 1;
    }
    let entropy = -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>();

    Ok(RegionStats {
        mean,
        std: m2.sqrt(),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2) - 3.0,
        entropy,
    })
}
