//! Synthetic regression datasets with a known set of relevant features.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::stats::STAT_NAMES;
use crate::dataset::{Dataset, FeatureTag};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Region labels used to tag synthetic features.
pub const REGIONS: [&str; 7] = ["LR", "RR", "LM", "RM", "LC", "RC", "CC"];

/// Diffusion metric labels used to tag synthetic features.
pub const METRICS: [&str; 8] = ["FA", "MD", "MK", "AK", "AWF", "DA", "De-par", "De-perp"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    /// `y = sum_j w_j x_j + noise`.
    Linear,
    /// Like `Linear`, except the last two relevant features enter only
    /// through one product term `w x_a x_b`.
    Interaction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub m: usize,
    /// Planted feature indices; order matters for [`Effect::Interaction`].
    pub relevant: Vec<usize>,
    pub effect: Effect,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// `count` relevant features drawn uniformly from `0..m` with `seed`.
    pub fn with_random_relevant(
        n: usize,
        m: usize,
        count: usize,
        effect: Effect,
        noise_sd: f64,
        seed: u64,
    ) -> Result<Self> {
        if count > m {
            return Err(Error::domain(format!("cannot plant {count} of {m} features")));
        }
        let mut rng = stream(seed, 3);
        let relevant = sample(&mut rng, m, count).into_vec();
        Ok(Self {
            n,
            m,
            relevant,
            effect,
            noise_sd,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.m == 0 {
            return Err(Error::domain("synthetic data needs n >= 2 and m >= 1"));
        }
        if self.relevant.len() > self.m {
            return Err(Error::domain("more relevant features than features"));
        }
        if let Some(&j) = self.relevant.iter().find(|&&j| j >= self.m) {
            return Err(Error::domain(format!("relevant index {j} out of range")));
        }
        let mut sorted = self.relevant.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.relevant.len() {
            return Err(Error::domain("relevant indices must be distinct"));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::domain("noise_sd must be finite and non-negative"));
        }
        if self.effect == Effect::Interaction && self.relevant.len() < 2 {
            return Err(Error::domain("an interaction needs two relevant features"));
        }
        Ok(())
    }
}

/// The generating process behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub linear: Vec<(usize, f64)>,
    pub interaction: Option<(usize, usize, f64)>,
    pub noise: Vec<f64>,
    /// Standardization applied after adding noise: `(raw - center) / scale`.
    pub center: f64,
    pub scale: f64,
}

impl SyntheticTruth {
    /// Recomputes the target from `x`. Reads only the relevant columns.
    pub fn target(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| (self.raw_signal(x.row(i)) + self.noise[i] - self.center) / self.scale)
            .collect()
    }

    fn raw_signal(&self, row: &[f64]) -> f64 {
        let mut s: f64 = self.linear.iter().map(|&(j, w)| w * row[j]).sum();
        if let Some((a, b, w)) = self.interaction {
            s += w * row[a] * row[b];
        }
        s
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Names and tags over the region × metric × statistic grid, repeating with a
/// numeric suffix past 280 features.
pub fn grid_feature_names(m: usize) -> (Vec<String>, Vec<FeatureTag>) {
    let per_cycle = REGIONS.len() * METRICS.len() * STAT_NAMES.len();
    (0..m)
        .map(|j| {
            let stat = STAT_NAMES[j % 5];
            let metric = METRICS[(j / 5) % METRICS.len()];
            let region = REGIONS[(j / (5 * METRICS.len())) % REGIONS.len()];
            let cycle = j / per_cycle;
            let mut name = format!("{region}_{metric}_{stat}");
            if cycle > 0 {
                name.push_str(&format!("_{cycle}"));
            }
            (
                name,
                FeatureTag {
                    region: region.into(),
                    metric: metric.into(),
                    statistic: stat.into(),
                },
            )
        })
        .unzip()
}

pub fn synth_dataset(spec: &SynthSpec) -> Result<Dataset> {
    Ok(synth_with_truth(spec)?.0)
}

/// Generates the dataset and returns the process that produced it.
///
/// `X` is i.i.d. standard normal. Weights are drawn from `Uniform(0.5, 1.5)`
/// with random signs. The target is standardized to zero mean and unit
/// variance. `X`, weights and noise come from separate streams of `seed`.
pub fn synth_with_truth(spec: &SynthSpec) -> Result<(Dataset, SyntheticTruth)> {
    spec.validate()?;
    let (n, m) = (spec.n, spec.m);

    let mut rng = stream(spec.seed, 0);
    let data: Vec<f64> = (0..n * m).map(|_| rng.sample(StandardNormal)).collect();
    let x = Matrix::new(n, m, data)?;

    let mut rng = stream(spec.seed, 1);
    let mut weight = || {
        let w: f64 = rng.random_range(0.5..1.5);
        if rng.random_bool(0.5) {
            -w
        } else {
            w
        }
    };
    let (linear_idx, interaction) = match spec.effect {
        Effect::Linear => (&spec.relevant[..], None),
        Effect::Interaction => {
            let k = spec.relevant.len();
            (
                &spec.relevant[..k - 2],
                Some((spec.relevant[k - 2], spec.relevant[k - 1])),
            )
        }
    };
    let linear: Vec<(usize, f64)> = linear_idx.iter().map(|&j| (j, weight())).collect();
    let interaction = interaction.map(|(a, b)| (a, b, weight()));

    let mut rng = stream(spec.seed, 2);
    let noise: Vec<f64> = (0..n)
        .map(|_| spec.noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();

    let mut truth = SyntheticTruth {
        linear,
        interaction,
        noise,
        center: 0.0,
        scale: 1.0,
    };
    let raw = truth.target(&x);
    let center = raw.iter().sum::<f64>() / n as f64;
    let sd = (raw.iter().map(|v| (v - center).powi(2)).sum::<f64>() / n as f64).sqrt();
    truth.center = center;
    truth.scale = if sd > 0.0 { sd } else { 1.0 };
    let y = truth.target(&x);

    let (names, tags) = grid_feature_names(m);
    let mut ds = Dataset::new(x, y, names)?.with_tags(tags)?;
    ds.meta.planted_relevant = Some(spec.relevant.clone());
    ds.meta.synth_spec = Some(spec.clone());
    Ok((ds, truth))
}
