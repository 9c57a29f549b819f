//! The feature-subset lattice.
//!
//! Every subset of `M` features is a vertex; two vertices are adjacent when they
//! differ in exactly one feature. Edge weights are score differences, so the
//! length of any path telescopes to the score difference of its endpoints and
//! the longest path from the empty subset ends at the best-scoring subset.
//!
//! The lattice is implicit: vertices exist only once a search visits them.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported feature count.
pub const MAX_FEATURES: usize = 4096;

const WORD_BITS: usize = 64;

/// A vertex of the subset lattice: a fixed-width bit vector, bit `i` set when
/// feature `i` is selected.
///
/// Bits are packed into machine words. Padding bits in the last word are
/// always zero so that derived equality and hashing agree with bit equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FeatureSubset {
    words: Box<[u64]>,
    len: usize,
}

impl FeatureSubset {
    /// The empty subset over `m` features.
    pub fn empty(m: usize) -> Result<Self> {
        check_width(m)?;
        Ok(Self {
            words: vec![0; m.div_ceil(WORD_BITS)].into_boxed_slice(),
            len: m,
        })
    }

    /// The subset selecting every one of `m` features.
    pub fn full(m: usize) -> Result<Self> {
        let mut s = Self::empty(m)?;
        for i in 0..m {
            s.set(i, true);
        }
        Ok(s)
    }

    /// Number of features `M` this subset ranges over.
    pub fn width(&self) -> usize {
        self.len
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Whether feature `i` is selected. Panics if `i >= width()`.
    pub fn contains(&self, i: usize) -> bool {
        assert!(i < self.len, "feature index {i} out of range for width {}", self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    /// Indices of the selected features, ascending.
    pub fn indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count());
        for (wi, &word) in self.words.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                out.push(wi * WORD_BITS + w.trailing_zeros() as usize);
                w &= w - 1;
            }
        }
        out
    }

    /// Copy of `self` with feature `i` toggled.
    pub fn flipped(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.set(i, !self.contains(i));
        s
    }

    fn set(&mut self, i: usize, on: bool) {
        let mask = 1u64 << (i % WORD_BITS);
        if on {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    /// Order used everywhere a deterministic tie-break between subsets is
    /// needed: fewer selected features first, then the `'0'/'1'` rendering
    /// compared lexicographically.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.count().cmp(&other.count()))
            .then_with(|| {
                for (a, b) in self.words.iter().zip(other.words.iter()) {
                    let diff = a ^ b;
                    if diff != 0 {
                        // lowest differing feature index decides; '0' < '1'
                        let bit = diff.trailing_zeros();
                        return if a >> bit & 1 == 1 {
                            Ordering::Greater
                        } else {
                            Ordering::Less
                        };
                    }
                }
                Ordering::Equal
            })
    }
}

impl Ord for FeatureSubset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_cmp(other)
    }
}

impl PartialOrd for FeatureSubset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_width(m: usize) -> Result<()> {
    if m == 0 || m > MAX_FEATURES {
        return Err(Error::domain(format!(
            "feature count must be in [1, {MAX_FEATURES}], got {m}"
        )));
    }
    Ok(())
}

/// Renders as a `'0'/'1'` string with feature 0 first.
impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len)
            .map(|i| if self.contains(i) { '1' } else { '0' })
            .collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureSubset({self})")
    }
}

impl FromStr for FeatureSubset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut subset = Self::empty(s.len())?;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => subset.set(i, true),
                other => return Err(Error::domain(format!("invalid character {other:?} in subset string"))),
            }
        }
        Ok(subset)
    }
}

impl Serialize for FeatureSubset {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureSubset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A directed lattice edge. `weight` is the score gained by moving from
/// `from` to `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeEdge {
    pub from: FeatureSubset,
    pub to: FeatureSubset,
    pub weight: f64,
}

impl LatticeEdge {
    pub fn new(from: FeatureSubset, to: FeatureSubset, score_from: f64, score_to: f64) -> Result<Self> {
        if hamming(&from, &to)? != 1 {
            return Err(Error::domain("lattice edges join subsets differing in one feature"));
        }
        Ok(Self {
            weight: edge_weight(score_from, score_to)?,
            from,
            to,
        })
    }
}

/// Builds the subset of width `m` selecting exactly `indices`.
pub fn make_subset(indices: impl IntoIterator<Item = usize>, m: usize) -> Result<FeatureSubset> {
    let mut subset = FeatureSubset::empty(m)?;
    for i in indices {
        if i >= m {
            return Err(Error::domain(format!(
                "feature index {i} out of range for {m} features"
            )));
        }
        subset.set(i, true);
    }
    Ok(subset)
}

/// All `M` subsets adjacent to `node`, ordered by flipped feature index.
pub fn neighbors(node: &FeatureSubset) -> Vec<FeatureSubset> {
    (0..node.width()).map(|i| node.flipped(i)).collect()
}

pub fn hamming(a: &FeatureSubset, b: &FeatureSubset) -> Result<usize> {
    if a.len != b.len {
        return Err(Error::domain(format!("subset widths differ ({} vs {})", a.len, b.len)));
    }
    Ok(a.words
        .iter()
        .zip(b.words.iter())
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

/// Combines the two children of `parent` by per-bit `child1 + child2 - parent`.
///
/// Both children must be lattice neighbors of `parent` and distinct from each
/// other. The result moves away from `parent` at both flipped positions:
/// two additions merge (skip down), an addition and a removal replace one
/// feature with another, two removals skip up.
pub fn crossover(parent: &FeatureSubset, child1: &FeatureSubset, child2: &FeatureSubset) -> Result<FeatureSubset> {
    if hamming(parent, child1)? != 1 || hamming(parent, child2)? != 1 {
        return Err(Error::domain("crossover children must be neighbors of the parent"));
    }
    if child1 == child2 {
        return Err(Error::domain("crossover children must be distinct"));
    }
    let mut out = FeatureSubset::empty(parent.width())?;
    for i in 0..parent.width() {
        let v = i8::from(child1.contains(i)) + i8::from(child2.contains(i)) - i8::from(parent.contains(i));
        match v {
            0 => {}
            1 => out.set(i, true),
            _ => {
                return Err(Error::domain(format!(
                    "crossover left {{0,1}} at feature {i} (value {v})"
                )))
            }
        }
    }
    Ok(out)
}

pub fn edge_weight(score_from: f64, score_to: f64) -> Result<f64> {
    if !score_from.is_finite() || !score_to.is_finite() {
        return Err(Error::domain("edge weights need finite scores"));
    }
    Ok(score_to - score_from)
}

/// Sum of edge weights along a path given by the scores of its vertices.
pub fn path_length(scores: &[f64]) -> Result<f64> {
    if scores.len() < 2 {
        return Err(Error::domain("a path needs at least two vertices"));
    }
    scores.windows(2).map(|w| edge_weight(w[0], w[1])).sum()
}
