//! Stratified k-fold assignment for continuous targets.
//!
//! Targets are quantized into equal-width bins over their observed range and
//! each bin is shuffled and dealt round-robin across folds, so every fold
//! sees the same share of every bin.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvParams {
    pub k: usize,
    pub n_bins: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for CvParams {
    fn default() -> Self {
        Self {
            k: 5,
            n_bins: 5,
            repeats: 3,
            seed: 0,
        }
    }
}

impl CvParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::domain(format!("k must be at least 2, got {}", self.k)));
        }
        if self.n_bins == 0 {
            return Err(Error::domain("n_bins must be at least 1"));
        }
        if self.repeats == 0 {
            return Err(Error::domain("repeats must be at least 1"));
        }
        Ok(())
    }

    /// Model fits needed to score one subset.
    pub fn fits_per_evaluation(&self) -> u64 {
        (self.k * self.repeats) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    /// `(train, test)` row indices for fold `f`, ascending.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.fold_of.len()).partition(|&i| self.fold_of[i] != f)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Equal-width bin labels over `[min(y), max(y)]`; the maximum lands in the
/// last bin and a constant target puts everything in bin 0.
pub fn stratify_bins(y: &[f64], n_bins: usize) -> Result<Vec<usize>> {
    if n_bins == 0 {
        return Err(Error::domain("n_bins must be at least 1"));
    }
    if y.len() < n_bins {
        return Err(Error::domain(format!("{} samples cannot fill {n_bins} bins", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("targets must be finite"));
    }
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    if width <= 0.0 {
        return Ok(vec![0; y.len()]);
    }
    Ok(y.iter()
        .map(|&v| (((v - lo) / width * n_bins as f64) as usize).min(n_bins - 1))
        .collect())
}

/// One fold assignment per repeat.
///
/// Each `(repeat, bin)` pair shuffles with its own ChaCha stream derived from
/// `cv.seed`. Dealing continues the round-robin position across bins so the
/// overall fold sizes also stay within one of each other.
pub fn stratified_kfold(y: &[f64], cv: &CvParams) -> Result<Vec<FoldAssignment>> {
    cv.validate()?;
    if y.len() < cv.k {
        return Err(Error::domain(format!("{} samples cannot fill {} folds", y.len(), cv.k)));
    }
    let bins = stratify_bins(y, cv.n_bins.min(y.len()))?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); cv.n_bins];
    for (i, &b) in bins.iter().enumerate() {
        members[b].push(i);
    }

    let mut out = Vec::with_capacity(cv.repeats);
    for repeat in 0..cv.repeats {
        let mut fold_of = vec![usize::MAX; y.len()];
        let mut next = 0usize;
        for (b, rows) in members.iter().enumerate() {
            let mut rows = rows.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(cv.seed);
            rng.set_stream(((repeat as u64) << 32) | b as u64);
            rows.shuffle(&mut rng);
            for r in rows {
                fold_of[r] = next % cv.k;
                next += 1;
            }
        }
        out.push(FoldAssignment { k: cv.k, fold_of });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bin_fold_counts(y: &[f64], a: &FoldAssignment, n_bins: usize) -> Vec<Vec<usize>> {
        let bins = stratify_bins(y, n_bins).unwrap();
        let mut counts = vec![vec![0; a.k]; n_bins];
        for (i, &f) in a.fold_of.iter().enumerate() {
            counts[bins[i]][f] += 1;
        }
        counts
    }

    #[test]
    fn bins_examples() {
        assert_eq!(stratify_bins(&[-3.0, -1.5, 0.0, 1.5, 3.0], 5).unwrap(), [0, 1, 2, 3, 4]);
        assert_eq!(stratify_bins(&[2.0; 6], 5).unwrap(), [0; 6]);
        assert!(stratify_bins(&[1.0, 2.0], 5).is_err());
    }

    #[test]
    fn uniform_bins_are_balanced() {
        use rand::Rng;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = (0..1000).map(|_| rng.random_range(-3.0..3.0)).collect();
            let bins = stratify_bins(&y, 5).unwrap();
            for b in 0..5 {
                let c = bins.iter().filter(|&&x| x == b).count();
                assert!((140..=260).contains(&c), "seed {seed} bin {b} has {c}");
            }
        }
    }

    #[test]
    fn kfold_examples() {
        let cv = CvParams {
            k: 5,
            n_bins: 1,
            repeats: 1,
            seed: 3,
        };
        let y: Vec<f64> = (0..10).map(f64::from).collect();
        let a = &stratified_kfold(&y, &cv).unwrap()[0];
        assert_eq!(a.fold_sizes(), [2; 5]);

        let y: Vec<f64> = (0..25).map(|i| (i / 5) as f64).collect();
        let cv = CvParams { n_bins: 5, ..cv };
        let a = &stratified_kfold(&y, &cv).unwrap()[0];
        assert!(bin_fold_counts(&y, a, 5).iter().flatten().all(|&c| c == 1));

        assert_eq!(stratified_kfold(&y, &cv).unwrap(), stratified_kfold(&y, &cv).unwrap());
        assert!(stratified_kfold(&y[..4], &cv).is_err());
    }

    #[test]
    fn repeats_differ() {
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = stratified_kfold(&y, &CvParams::default()).unwrap();
        assert_eq!(a.len(), 3);
        assert_ne!(a[0], a[1]);
        assert_ne!(a[1], a[2]);
    }

    proptest! {
        #[test]
        fn per_bin_counts_within_one(
            y in proptest::collection::vec(-3.0f64..3.0, 10..200),
            seed in any::<u64>(),
            k in 2usize..7,
        ) {
            prop_assume!(y.len() >= k);
            let cv = CvParams { k, n_bins: 5, repeats: 2, seed };
            for a in stratified_kfold(&y, &cv).unwrap() {
                prop_assert!(a.fold_of.iter().all(|&f| f < k));
                for row in bin_fold_counts(&y, &a, 5) {
                    let (lo, hi) = (row.iter().min().unwrap(), row.iter().max().unwrap());
                    prop_assert!(hi - lo <= 1);
                }
                let sizes = a.fold_sizes();
                prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            }
        }
    }
}
