//! CSV dataset ingestion with line-level diagnostics.

use super::CliError;
use crate::classifiers::{ClassLabel, LabeledDataset};
use ndarray::Array2;
use std::path::Path;

/// A parsed dataset file: samples in rows, optional labels.
pub struct DatasetFile {
    pub features: Array2<f64>,
    pub labels: Option<Vec<ClassLabel>>,
}

impl DatasetFile {
    pub fn into_labeled(self) -> Result<LabeledDataset, CliError> {
        let labels = self
            .labels
            .ok_or_else(|| CliError::Runtime("file has no labels".into()))?;
        LabeledDataset::new(self.features, labels).map_err(|e| CliError::Runtime(e.to_string()))
    }

    pub fn into_parts(self) -> (Array2<f64>, Option<Vec<ClassLabel>>) {
        (self.features, self.labels)
    }
}

fn parse_label(cell: &str, line: usize) -> Result<ClassLabel, CliError> {
    match cell.trim() {
        "1" => Ok(ClassLabel::One),
        "2" => Ok(ClassLabel::Two),
        other => Err(CliError::Runtime(format!(
            "line {line}: label '{other}' is outside {{1, 2}}"
        ))),
    }
}

fn parse_value(cell: &str, line: usize, column: usize) -> Result<f64, CliError> {
    cell.trim().parse::<f64>().map_err(|_| {
        CliError::Runtime(format!(
            "line {line}, column {column}: '{cell}' is not a number"
        ))
    })
}

fn read_records(path: &Path) -> Result<Vec<(usize, Vec<String>)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let cells: Vec<String> = record.iter().map(|c| c.to_string()).collect();
        if cells.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        rows.push((i + 1, cells));
    }
    Ok(rows)
}

fn is_numeric(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

/// Reads a dataset CSV. Standard orientation: one sample per row, label
/// first when `labeled`; a header row is skipped when its first cell is not
/// numeric. Transposed orientation: samples in columns with the label row
/// first; a leading name column is detected and dropped the same way.
pub fn read_dataset(
    path: &Path,
    transpose: bool,
    labeled: bool,
) -> Result<DatasetFile, CliError> {
    let rows = read_records(path)?;
    if rows.is_empty() {
        return Err(CliError::Runtime(format!(
            "{}: file contains no data",
            path.display()
        )));
    }
    if transpose {
        read_transposed(rows, labeled)
    } else {
        read_standard(rows, labeled)
    }
}

fn read_standard(
    mut rows: Vec<(usize, Vec<String>)>,
    labeled: bool,
) -> Result<DatasetFile, CliError> {
    if !rows.is_empty() && !is_numeric(&rows[0].1[0]) {
        rows.remove(0); // header row
    }
    if rows.is_empty() {
        return Err(CliError::Runtime("file contains no data rows".into()));
    }
    let offset = usize::from(labeled);
    let width = rows[0].1.len();
    if width < offset + 1 {
        return Err(CliError::Runtime(format!(
            "line {}: expected at least {} columns",
            rows[0].0,
            offset + 1
        )));
    }
    let p = width - offset;
    let n = rows.len();
    let mut features = Array2::zeros((n, p));
    let mut labels = Vec::with_capacity(n);
    for (r, (line, cells)) in rows.iter().enumerate() {
        if cells.len() != width {
            return Err(CliError::Runtime(format!(
                "line {line}: expected {width} columns, found {}",
                cells.len()
            )));
        }
        if labeled {
            labels.push(parse_label(&cells[0], *line)?);
        }
        for (c, cell) in cells[offset..].iter().enumerate() {
            features[[r, c]] = parse_value(cell, *line, c + offset + 1)?;
        }
    }
    Ok(DatasetFile {
        features,
        labels: labeled.then_some(labels),
    })
}

fn read_transposed(
    rows: Vec<(usize, Vec<String>)>,
    labeled: bool,
) -> Result<DatasetFile, CliError> {
    // A non-numeric first cell in the first row means every row carries a
    // leading name cell.
    let first = &rows[0];
    let name_col = !is_numeric(&first.1[0]);
    let offset = usize::from(name_col);
    let width = first.1.len();
    if width < offset + 1 {
        return Err(CliError::Runtime(
            "transposed file has no sample columns".into(),
        ));
    }
    let n = width - offset;

    let (label_row, feature_rows) = if labeled {
        (Some(&rows[0]), &rows[1..])
    } else {
        (None, &rows[..])
    };
    let labels = match label_row {
        Some((line, cells)) => {
            let mut labels = Vec::with_capacity(n);
            for cell in &cells[offset..] {
                labels.push(parse_label(cell, *line)?);
            }
            Some(labels)
        }
        None => None,
    };
    if feature_rows.is_empty() {
        return Err(CliError::Runtime(
            "transposed file has no feature rows".into(),
        ));
    }
    let p = feature_rows.len();
    let mut features = Array2::zeros((n, p));
    for (r, (line, cells)) in feature_rows.iter().enumerate() {
        if cells.len() != width {
            return Err(CliError::Runtime(format!(
                "line {line}: expected {width} columns, found {}",
                cells.len()
            )));
        }
        for (s, cell) in cells[offset..].iter().enumerate() {
            features[[s, r]] = parse_value(cell, *line, s + offset + 1)?;
        }
    }
    Ok(DatasetFile { features, labels })
}
