//! CSV ingestion: parse a delimited file into a typed in-memory table with
//! an identified target column, numerical/categorical column kinds, and a
//! missing-cell mask.
//!
//! Comma-delimited UTF-8 files with a header row only; quoted fields follow
//! RFC-4180 conventions. ARFF or other formats must be converted to CSV
//! before ingestion.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cell values that mark a missing entry, compared case-insensitively.
pub const MISSING_SENTINELS: &[&str] = &["", "na", "n/a", "?", "nan", "null"];

/// A numerical target with at most this many distinct integer values is
/// treated as a classification target rather than a regression one.
pub const CLASSIFICATION_CARDINALITY_MAX: usize = 28;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("input has no header row")]
    HeaderMissing,
    #[error("row at line {line} has {got} cells, expected {expected}")]
    RaggedRow {
        line: u64,
        expected: usize,
        got: usize,
    },
    #[error("target column {0:?} not found in header")]
    TargetNotFound(String),
    #[error("target column has fewer than 2 distinct non-missing values")]
    DegenerateTarget,
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Whether a column holds numbers or free-form categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numerical,
    Categorical,
}

/// Per-column schema: name, inferred kind, and missing-cell count.
///
/// A column is `Numerical` iff every non-missing cell parses as a finite
/// decimal number; a single non-numeric cell makes it `Categorical`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub missing_count: usize,
}

/// One table cell: a finite number, a category string, or missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Number(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    fn parse(raw: &str) -> Cell {
        if MISSING_SENTINELS.contains(&raw.to_ascii_lowercase().as_str()) {
            return Cell::Missing;
        }
        match raw.parse::<f64>() {
            Ok(n) if n.is_finite() => Cell::Number(n),
            _ => Cell::Text(raw.to_string()),
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Number(n) => format!("{n}"),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    /// Canonical grouping key for distinct-value counting. Numbers that
    /// compare equal map to the same key (0.0 and -0.0 included).
    fn value_key(&self) -> Option<String> {
        match self {
            Cell::Number(n) => {
                let n = if *n == 0.0 { 0.0 } else { *n };
                Some(format!("n:{n}"))
            }
            Cell::Text(s) => Some(format!("t:{s}")),
            Cell::Missing => None,
        }
    }
}

/// The prediction task implied by the target column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    BinaryClassification,
    MulticlassClassification,
    Regression,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::BinaryClassification => write!(f, "binary_classification"),
            Task::MulticlassClassification => write!(f, "multiclass_classification"),
            Task::Regression => write!(f, "regression"),
        }
    }
}

/// A fully-loaded tabular dataset. Cells are stored row-major; every row
/// has exactly `columns.len()` cells. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub id: String,
    pub columns: Vec<ColumnSchema>,
    pub cells: Vec<Cell>,
    pub n_rows: usize,
    pub target_index: usize,
    pub task: Task,
}

impl TabularDataset {
    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.cells[row * self.columns.len() + col]
    }

    /// Feature columns, i.e. every column except the target.
    pub fn feature_columns(&self) -> impl Iterator<Item = (usize, &ColumnSchema)> {
        self.columns
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != self.target_index)
    }

    /// Non-missing numeric values of one column, in row order.
    pub fn numeric_values(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows)
            .filter_map(|row| match self.cell(row, col) {
                Cell::Number(n) => Some(*n),
                _ => None,
            })
            .collect()
    }

    /// Total missing cells across all columns, target included.
    pub fn total_missing(&self) -> usize {
        self.columns.iter().map(|c| c.missing_count).sum()
    }

    /// Counts of each distinct non-missing target value.
    pub fn target_class_counts(&self) -> Vec<usize> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for row in 0..self.n_rows {
            if let Some(key) = self.cell(row, self.target_index).value_key() {
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        counts.into_values().collect()
    }

    /// Non-missing numeric target values; empty for categorical targets.
    pub fn numeric_target_values(&self) -> Vec<f64> {
        self.numeric_values(self.target_index)
    }
}

/// Load a CSV file into a [`TabularDataset`].
///
/// The header row names the columns. `target_name` selects the target
/// column; when absent the last column is the target. Cells matching one
/// of [`MISSING_SENTINELS`] (case-insensitive) are recorded as missing.
pub fn load_dataset(path: &Path, target_name: Option<&str>) -> Result<TabularDataset, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(IngestError::HeaderMissing);
    }
    let n_cols = headers.len();

    let target_index = match target_name {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::TargetNotFound(name.to_string()))?,
        None => n_cols - 1,
    };

    let mut cells: Vec<Cell> = Vec::new();
    let mut n_rows = 0usize;
    for record in reader.records() {
        let record = record?;
        if record.len() != n_cols {
            return Err(IngestError::RaggedRow {
                line: record.position().map(|p| p.line()).unwrap_or(0),
                expected: n_cols,
                got: record.len(),
            });
        }
        cells.extend(record.iter().map(Cell::parse));
        n_rows += 1;
    }

    let columns: Vec<ColumnSchema> = headers
        .iter()
        .enumerate()
        .map(|(col, name)| {
            let mut missing = 0usize;
            let mut numerical = true;
            for row in 0..n_rows {
                match &cells[row * n_cols + col] {
                    Cell::Missing => missing += 1,
                    Cell::Number(_) => {}
                    Cell::Text(_) => numerical = false,
                }
            }
            ColumnSchema {
                name: name.clone(),
                kind: if numerical {
                    ColumnKind::Numerical
                } else {
                    ColumnKind::Categorical
                },
                missing_count: missing,
            }
        })
        .collect();

    let mut dataset = TabularDataset {
        id,
        columns,
        cells,
        n_rows,
        target_index,
        // placeholder until inference below
        task: Task::Regression,
    };
    dataset.task = infer_task(&dataset)?;
    Ok(dataset)
}

/// Re-infer the prediction task from the target column.
///
/// Binary iff the target has exactly 2 distinct non-missing values.
/// Multiclass for categorical targets, and for numerical targets whose
/// entries are all integer-valued with at most
/// [`CLASSIFICATION_CARDINALITY_MAX`] distinct values. Regression otherwise.
pub fn infer_task(dataset: &TabularDataset) -> Result<Task, IngestError> {
    let counts = dataset.target_class_counts();
    let distinct = counts.len();
    if distinct < 2 {
        return Err(IngestError::DegenerateTarget);
    }
    if distinct == 2 {
        return Ok(Task::BinaryClassification);
    }
    let target_kind = dataset.columns[dataset.target_index].kind;
    if target_kind == ColumnKind::Categorical {
        return Ok(Task::MulticlassClassification);
    }
    let integer_valued = dataset
        .numeric_target_values()
        .iter()
        .all(|v| v.fract() == 0.0);
    if distinct <= CLASSIFICATION_CARDINALITY_MAX && integer_valued {
        Ok(Task::MulticlassClassification)
    } else {
        Ok(Task::Regression)
    }
}

/// Write a dataset back to CSV. Missing cells become empty fields, so a
/// save/load round trip reproduces schemas, cell values, and missing masks.
pub fn save_dataset(dataset: &TabularDataset, path: &Path) -> Result<(), IngestError> {
    let file = std::fs::File::create(path).map_err(|source| IngestError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(dataset.columns.iter().map(|c| c.name.as_str()))?;
    for row in 0..dataset.n_rows {
        let rendered: Vec<String> = (0..dataset.columns.len())
            .map(|col| dataset.cell(row, col).render())
            .collect();
        writer.write_record(&rendered)?;
    }
    writer.flush().map_err(|source| IngestError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}
