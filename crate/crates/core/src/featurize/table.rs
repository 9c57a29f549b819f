//! Per-subject grouped measurements and the feature table built from them.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use super::stats::{region_stats, ENTROPY_BINS, STAT_NAMES};
use crate::dataset::{Dataset, FeatureTag};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One subject's measurements, keyed by `(region, metric)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubjectSamples {
    pub id: String,
    pub groups: HashMap<(String, String), Vec<f64>>,
}

/// Measurements of every subject over a shared `(region, metric)` grid.
/// Region and metric order fixes the feature column order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupedSamples {
    pub regions: Vec<String>,
    pub metrics: Vec<String>,
    pub subjects: Vec<SubjectSamples>,
}

#[derive(Debug, Deserialize)]
struct VoxelRow {
    subject_id: String,
    region: String,
    metric: String,
    value: f64,
}

impl GroupedSamples {
    /// Reads a long-format CSV with columns `subject_id,region,metric,value`.
    /// Subjects, regions and metrics keep their order of first appearance.
    pub fn load_voxel_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut out = GroupedSamples::default();
        let mut subject_pos: HashMap<String, usize> = HashMap::new();
        for (i, rec) in reader.deserialize::<VoxelRow>().enumerate() {
            let row = rec.map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                source: e,
            })?;
            if !row.value.is_finite() {
                return Err(Error::Cell {
                    path: path.to_path_buf(),
                    row: i + 1,
                    column: "value".into(),
                    message: "value is not finite".into(),
                });
            }
            if !out.regions.contains(&row.region) {
                out.regions.push(row.region.clone());
            }
            if !out.metrics.contains(&row.metric) {
                out.metrics.push(row.metric.clone());
            }
            let pos = *subject_pos.entry(row.subject_id.clone()).or_insert_with(|| {
                out.subjects.push(SubjectSamples {
                    id: row.subject_id.clone(),
                    groups: HashMap::new(),
                });
                out.subjects.len() - 1
            });
            out.subjects[pos]
                .groups
                .entry((row.region, row.metric))
                .or_default()
                .push(row.value);
        }
        Ok(out)
    }
}

/// Reads `column` of a per-subject table keyed by a `subject_id` column.
pub fn load_targets(path: &Path, column: &str) -> Result<HashMap<String, f64>> {
    let csv_err = |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Ingestion(format!("{}: no column `{name}`", path.display())))
    };
    let (id_col, value_col) = (find("subject_id")?, find(column)?);
    let mut out = HashMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let raw = rec.get(value_col).unwrap_or("").trim();
        let value: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Cell {
                path: path.to_path_buf(),
                row: i + 1,
                column: column.to_string(),
                message: format!("`{raw}` is not a finite number"),
            })?;
        let id = rec.get(id_col).unwrap_or("").trim().to_string();
        if out.insert(id.clone(), value).is_some() {
            return Err(Error::Ingestion(format!(
                "{}: subject `{id}` listed twice",
                path.display()
            )));
        }
    }
    Ok(out)
}

/// Builds one row per subject with five statistics for every
/// `(region, metric)` group. Columns are named `<region>_<metric>_<stat>` in
/// region-major, then metric, then statistic order.
pub fn build_feature_table(grouped: &GroupedSamples, targets: &HashMap<String, f64>) -> Result<Dataset> {
    let n_cols = grouped.regions.len() * grouped.metrics.len() * STAT_NAMES.len();
    if n_cols == 0 || grouped.subjects.is_empty() {
        return Err(Error::Ingestion("no subjects or groups to featurize".into()));
    }
    let mut names = Vec::with_capacity(n_cols);
    let mut tags = Vec::with_capacity(n_cols);
    for region in &grouped.regions {
        for metric in &grouped.metrics {
            for stat in STAT_NAMES {
                names.push(format!("{region}_{metric}_{stat}"));
                tags.push(FeatureTag {
                    region: region.clone(),
                    metric: metric.clone(),
                    statistic: stat.to_string(),
                });
            }
        }
    }

    let mut x = Matrix::zeros(grouped.subjects.len(), n_cols);
    let mut y = Vec::with_capacity(grouped.subjects.len());
    for (i, subject) in grouped.subjects.iter().enumerate() {
        let target = targets
            .get(&subject.id)
            .ok_or_else(|| Error::Ingestion(format!("subject `{}` has no target value", subject.id)))?;
        y.push(*target);
        let row = x.row_mut(i);
        let mut col = 0;
        for region in &grouped.regions {
            for metric in &grouped.metrics {
                let values = subject
                    .groups
                    .get(&(region.clone(), metric.clone()))
                    .filter(|v| !v.is_empty())
                    .ok_or_else(|| {
                        Error::Ingestion(format!(
                            "subject `{}` has no values for region `{region}`, metric `{metric}`",
                            subject.id
                        ))
                    })?;
                row[col..col + 5].copy_from_slice(&region_stats(values)?.as_array());
                col += 5;
            }
        }
    }
    let mut ds = Dataset::new(x, y, names)?.with_tags(tags)?;
    ds.meta.entropy_bins = Some(ENTROPY_BINS);
    Ok(ds)
}
