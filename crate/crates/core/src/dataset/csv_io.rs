//! CSV ingestion and export.
//!
//! One format: comma-separated UTF-8 with decimal-point reals, an optional
//! header row, and one label column selected by index or header name. Label
//! tokens (integral or string) are canonicalized to dense ids in order of
//! first appearance.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// How to find the label column.
#[derive(Debug, Clone)]
pub enum LabelColumn {
    Index(usize),
    /// Requires a header row.
    Name(String),
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub has_header: bool,
}

impl CsvOptions {
    pub fn label_index(index: usize, has_header: bool) -> Self {
        CsvOptions {
            label_column: LabelColumn::Index(index),
            has_header,
        }
    }
}

/// Bidirectional mapping between original label tokens and dense ids.
#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl LabelMap {
    fn intern(&mut self, token: &str) -> usize {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.names.len();
        self.names.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    pub fn id_of(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn name_of(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Loads a dataset from CSV. Every non-label column must be numeric.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<(Dataset, LabelMap)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;

    let label_idx = match &options.label_column {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            if !options.has_header {
                return Err(Error::invalid(
                    "label_column",
                    "column selected by name but the file has no header",
                ));
            }
            let headers = reader.headers().map_err(csv_error)?;
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::invalid("label_column", format!("no column named {name}")))?
        }
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut map = LabelMap::default();
    let mut n_cols: Option<usize> = None;

    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows.len() + 1);
        if record.len() == 1 && record.get(0) == Some("") {
            continue; // trailing blank line
        }
        match n_cols {
            None => n_cols = Some(record.len()),
            Some(expected) if expected != record.len() => {
                return Err(Error::CsvStructure {
                    line,
                    expected,
                    found: record.len(),
                });
            }
            _ => {}
        }
        if label_idx >= record.len() {
            return Err(Error::invalid(
                "label_column",
                format!("index {label_idx} out of range for {} columns", record.len()),
            ));
        }
        let mut features = Vec::with_capacity(record.len() - 1);
        for (col, field) in record.iter().enumerate() {
            if col == label_idx {
                labels.push(map.intern(field));
            } else {
                let value: f64 = field.parse().map_err(|_| Error::CsvParse {
                    line,
                    reason: format!("column {col}: {field:?} is not numeric"),
                })?;
                features.push(value);
            }
        }
        rows.push(features);
    }

    if rows.is_empty() {
        return Err(Error::EmptyInput("csv file"));
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(Error::invalid("features", "csv has only a label column"));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let n = labels.len();
    let features = Array2::from_shape_vec((n, d), flat)
        .map_err(|e| Error::invalid("features", e.to_string()))?;
    let dataset = Dataset::new(features, labels, map.len())?;
    Ok((dataset, map))
}

fn csv_error(err: csv::Error) -> Error {
    let line = err
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or_default();
    Error::CsvParse {
        line,
        reason: err.to_string(),
    }
}

/// Writes a dataset as CSV with the label in the last column. The label is
/// written through `label_map` when provided, else as the dense id.
pub fn write_dataset_csv(
    path: &Path,
    dataset: &Dataset,
    label_map: Option<&LabelMap>,
    header: bool,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    if header {
        for j in 0..dataset.dim() {
            write!(out, "f{j},")?;
        }
        writeln!(out, "label")?;
    }
    for i in 0..dataset.n_samples() {
        for v in dataset.row(i) {
            write!(out, "{v},")?;
        }
        let label = dataset.labels()[i];
        match label_map.and_then(|m| m.name_of(label)) {
            Some(name) => writeln!(out, "{name}")?,
            None => writeln!(out, "{label}")?,
        }
    }
    Ok(())
}
