//! How often each metric, region and statistic appears among selected
//! features.

use std::collections::BTreeMap;
use std::fmt::Write;

use featsel::FeatureTag;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagCount {
    pub name: String,
    pub count: u64,
}

/// Counts per tag dimension, each sorted by count (descending) then name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyReport {
    /// Number of subsets folded in.
    pub subsets: u64,
    /// Total selected features over those subsets.
    pub features: u64,
    pub metric: Vec<TagCount>,
    pub region: Vec<TagCount>,
    pub statistic: Vec<TagCount>,
}

impl FrequencyReport {
    /// Counts over the selected feature indices of each subset.
    pub fn from_selections(tags: &[FeatureTag], selections: &[Vec<usize>]) -> Result<Self> {
        let mut acc = Accumulator::default();
        for sel in selections {
            acc.add(tags, sel)?;
        }
        Ok(acc.finish())
    }

    /// Adds another report's counts to this one.
    pub fn merge(&self, other: &FrequencyReport) -> FrequencyReport {
        let mut acc = Accumulator::default();
        for r in [self, other] {
            acc.subsets += r.subsets;
            acc.features += r.features;
            for (dim, counts) in [(0, &r.metric), (1, &r.region), (2, &r.statistic)] {
                for c in counts {
                    *acc.dims[dim].entry(c.name.clone()).or_default() += c.count;
                }
            }
        }
        acc.finish()
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (title, counts) in [
            ("metric", &self.metric),
            ("region", &self.region),
            ("statistic", &self.statistic),
        ] {
            let _ = writeln!(out, "{title}");
            let width = counts.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in counts {
                let _ = writeln!(out, "  {:<width$}  {}", c.name, c.count);
            }
        }
        let _ = writeln!(out, "subsets {}, selected features {}", self.subsets, self.features);
        out
    }
}

#[derive(Default)]
struct Accumulator {
    subsets: u64,
    features: u64,
    dims: [BTreeMap<String, u64>; 3],
}

impl Accumulator {
    fn add(&mut self, tags: &[FeatureTag], selection: &[usize]) -> Result<()> {
        self.subsets += 1;
        for &j in selection {
            let tag = tags
                .get(j)
                .ok_or_else(|| CliError::Invalid(format!("feature {j} has no tag ({} tags)", tags.len())))?;
            self.features += 1;
            for (dim, key) in [&tag.metric, &tag.region, &tag.statistic].into_iter().enumerate() {
                *self.dims[dim].entry(key.clone()).or_default() += 1;
            }
        }
        Ok(())
    }

    fn finish(self) -> FrequencyReport {
        let [metric, region, statistic] = self.dims.map(|d| {
            let mut v: Vec<TagCount> = d.into_iter().map(|(name, count)| TagCount { name, count }).collect();
            v.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.name.cmp(&b.name)));
            v
        });
        FrequencyReport {
            subsets: self.subsets,
            features: self.features,
            metric,
            region,
            statistic,
        }
    }
}

/// Recovers tags from `<region>_<metric>_<statistic>` column names. Metric
/// names may themselves contain underscores.
pub fn tags_from_names(names: &[String]) -> Result<Vec<FeatureTag>> {
    names
        .iter()
        .map(|n| {
            let parts: Vec<&str> = n.split('_').collect();
            if parts.len() < 3 {
                return Err(CliError::Invalid(format!(
                    "column `{n}` is not named <region>_<metric>_<statistic>"
                )));
            }
            Ok(FeatureTag {
                region: parts[0].to_string(),
                metric: parts[1..parts.len() - 1].join("_"),
                statistic: parts[parts.len() - 1].to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(region: &str, metric: &str, stat: &str) -> FeatureTag {
        FeatureTag {
            region: region.into(),
            metric: metric.into(),
            statistic: stat.into(),
        }
    }

    fn tags() -> Vec<FeatureTag> {
        vec![
            tag("CC", "AWF", "mean"),
            tag("LR", "AWF", "std"),
            tag("CC", "DA", "mean"),
            tag("RR", "FA", "skew"),
        ]
    }

    #[test]
    fn counts_per_dimension() {
        let r = FrequencyReport::from_selections(&tags(), &[vec![0, 1, 2]]).unwrap();
        assert_eq!(
            r.metric,
            [
                TagCount {
                    name: "AWF".into(),
                    count: 2
                },
                TagCount {
                    name: "DA".into(),
                    count: 1
                }
            ]
        );
        assert_eq!(
            r.region[0],
            TagCount {
                name: "CC".into(),
                count: 2
            }
        );
        for dim in [&r.metric, &r.region, &r.statistic] {
            assert_eq!(dim.iter().map(|c| c.count).sum::<u64>(), 3);
        }
    }

    #[test]
    fn empty_subset_counts_nothing() {
        let r = FrequencyReport::from_selections(&tags(), &[vec![]]).unwrap();
        assert!(r.metric.is_empty() && r.region.is_empty() && r.statistic.is_empty());
        assert_eq!(r.subsets, 1);
    }

    #[test]
    fn additive_over_reports() {
        let sels = [vec![0, 1], vec![2, 3], vec![0, 2, 3]];
        let parts: Vec<FrequencyReport> = sels
            .iter()
            .map(|s| FrequencyReport::from_selections(&tags(), std::slice::from_ref(s)).unwrap())
            .collect();
        let summed = parts[0].merge(&parts[1]).merge(&parts[2]);
        let direct = FrequencyReport::from_selections(&tags(), &sels).unwrap();
        assert_eq!(summed, direct);
    }

    #[test]
    fn missing_tag_is_an_error() {
        assert!(FrequencyReport::from_selections(&tags(), &[vec![7]]).is_err());
    }

    #[test]
    fn names_parse_into_tags() {
        let t = tags_from_names(&["LR_De-par_mean".into(), "CC_my_metric_entropy".into()]).unwrap();
        assert_eq!(t[0], tag("LR", "De-par", "mean"));
        assert_eq!(t[1], tag("CC", "my_metric", "entropy"));
        assert!(tags_from_names(&["plain".into()]).is_err());
    }
}
