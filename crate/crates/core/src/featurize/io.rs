//! Feature CSV reading and writing.

use std::collections::HashSet;
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub target: String,
    /// Column holding a non-numeric cohort label per row.
    pub cohort_column: Option<String>,
    /// Columns to skip entirely.
    pub ignore: Vec<String>,
}

/// Loads a feature CSV; every column except `target` becomes a feature.
pub fn load_csv(path: &Path, target: &str) -> Result<Dataset> {
    load_csv_with(
        path,
        &CsvOptions {
            target: target.to_string(),
            ..Default::default()
        },
    )
}

/// Rows in error messages count data rows from 1, not counting the header.
pub fn load_csv_with(path: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let csv_err = |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut seen = HashSet::new();
    if let Some(dup) = header.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(Error::Ingestion(format!(
            "{}: duplicate column `{dup}` in header",
            path.display()
        )));
    }
    let target_col = header
        .iter()
        .position(|h| *h == opts.target)
        .ok_or_else(|| Error::Ingestion(format!("{}: no target column `{}`", path.display(), opts.target)))?;
    let cohort_col = match &opts.cohort_column {
        Some(c) => Some(
            header
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| Error::Ingestion(format!("{}: no cohort column `{c}`", path.display())))?,
        ),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&j| j != target_col && Some(j) != cohort_col && !opts.ignore.contains(&header[j]))
        .collect();

    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut cohorts = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = r + 1;
        let cell = |j: usize| -> Result<f64> {
            let raw = rec.get(j).unwrap_or("").trim();
            let fail = |message: &str| Error::Cell {
                path: path.to_path_buf(),
                row,
                column: header[j].clone(),
                message: message.to_string(),
            };
            if raw.is_empty() {
                return Err(fail("empty cell"));
            }
            let v: f64 = raw.parse().map_err(|_| fail(&format!("`{raw}` is not a number")))?;
            if !v.is_finite() {
                return Err(fail("value is not finite"));
            }
            Ok(v)
        };
        for &j in &feature_cols {
            data.push(cell(j)?);
        }
        y.push(cell(target_col)?);
        if let Some(c) = cohort_col {
            cohorts.push(rec.get(c).unwrap_or("").trim().to_string());
        }
    }

    let x = Matrix::new(y.len(), feature_cols.len(), data)?;
    let names = feature_cols.iter().map(|&j| header[j].clone()).collect();
    let ds = Dataset::new(x, y, names)?;
    if cohort_col.is_some() {
        ds.with_cohorts(cohorts)
    } else {
        Ok(ds)
    }
}

/// Writes features, then the target column, then cohort labels when present.
/// Values use the shortest representation that parses back exactly.
pub fn save_csv(dataset: &Dataset, path: &Path, target: &str) -> Result<()> {
    let csv_err = |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push(target);
    if dataset.cohorts().is_some() {
        header.push("cohort");
    }
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..dataset.n_samples() {
        let mut rec: Vec<String> = dataset.x().row(i).iter().map(f64::to_string).collect();
        rec.push(dataset.y()[i].to_string());
        if let Some(c) = dataset.cohorts() {
            rec.push(c[i].clone());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
