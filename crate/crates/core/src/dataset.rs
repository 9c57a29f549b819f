use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::SynthSpec;
use crate::matrix::Matrix;

/// Provenance of a feature column built from grouped measurements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureTag {
    pub region: String,
    pub metric: String,
    pub statistic: String,
}

/// Everything about a dataset that is not the numbers themselves; written as
/// a JSON sidecar next to feature CSVs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<FeatureTag>>,
    /// Ground-truth relevant features of a synthetic dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_relevant: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth_spec: Option<SynthSpec>,
    /// Histogram bins behind any entropy features.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_bins: Option<usize>,
}

impl DatasetMeta {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// `N` samples of `M` finite features with a regression target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    feature_names: Vec<String>,
    cohorts: Option<Vec<String>>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>, feature_names: Vec<String>) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::domain(format!("{} targets for {} rows", y.len(), x.rows())));
        }
        if feature_names.len() != x.cols() {
            return Err(Error::domain(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.cols()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = feature_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::domain(format!("duplicate feature name `{dup}`")));
        }
        if x.as_slice().iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::domain("dataset entries must be finite"));
        }
        Ok(Self {
            x,
            y,
            feature_names,
            cohorts: None,
            meta: DatasetMeta::default(),
        })
    }

    pub fn with_tags(mut self, tags: Vec<FeatureTag>) -> Result<Self> {
        if tags.len() != self.n_features() {
            return Err(Error::domain(format!(
                "{} tags for {} features",
                tags.len(),
                self.n_features()
            )));
        }
        self.meta.tags = Some(tags);
        Ok(self)
    }

    pub fn with_cohorts(mut self, cohorts: Vec<String>) -> Result<Self> {
        if cohorts.len() != self.n_samples() {
            return Err(Error::domain(format!(
                "{} cohort labels for {} samples",
                cohorts.len(),
                self.n_samples()
            )));
        }
        self.cohorts = Some(cohorts);
        Ok(self)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn tags(&self) -> Option<&[FeatureTag]> {
        self.meta.tags.as_deref()
    }

    pub fn cohorts(&self) -> Option<&[String]> {
        self.cohorts.as_deref()
    }

    pub fn n_samples(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    /// Rows whose cohort label equals `cohort`.
    pub fn filter_cohort(&self, cohort: &str) -> Result<Dataset> {
        let labels = self
            .cohorts
            .as_ref()
            .ok_or_else(|| Error::domain("dataset has no cohort labels"))?;
        let rows: Vec<usize> = (0..self.n_samples()).filter(|&i| labels[i] == cohort).collect();
        if rows.is_empty() {
            return Err(Error::domain(format!("no samples in cohort `{cohort}`")));
        }
        let cols: Vec<usize> = (0..self.n_features()).collect();
        Ok(Dataset {
            x: self.x.select(&rows, &cols),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            cohorts: Some(rows.iter().map(|&i| labels[i].clone()).collect()),
            meta: self.meta.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        Dataset::new(x, vec![0.0, 1.0, 2.0], vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn validates_shape_and_names() {
        let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(Dataset::new(x.clone(), vec![0.0], vec!["a".into()]).is_err());
        assert!(Dataset::new(x.clone(), vec![0.0], vec!["a".into(), "a".into()]).is_err());
        assert!(Dataset::new(x, vec![f64::NAN], vec!["a".into(), "b".into()]).is_err());
    }

    #[test]
    fn cohort_filter() {
        let d = tiny()
            .with_cohorts(vec!["nc".into(), "tbi".into(), "nc".into()])
            .unwrap();
        let nc = d.filter_cohort("nc").unwrap();
        assert_eq!(nc.y(), [0.0, 2.0]);
        assert_eq!(nc.x().row(1), [5.0, 6.0]);
        assert!(d.filter_cohort("other").is_err());
        assert!(tiny().filter_cohort("nc").is_err());
    }
}
