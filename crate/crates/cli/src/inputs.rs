//! Readers for the auxiliary inputs: sample metadata, labelled square
//! matrices and per-vertex values.

use std::collections::HashMap;
use std::path::Path;

use metricord::Matrix;

use crate::error::{CliError, Result};

fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => b',',
        _ => b'\t',
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter_for(path))
        .comment(Some(b'#'))
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    CliError::Config(format!("{}: line {line}: {e}", path.display()))
}

/// Group label of each location, read from column `column` of a metadata
/// file whose first column holds location labels.
pub fn read_groups(path: &Path, column: &str, locations: &[String]) -> Result<Vec<String>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = headers.iter().position(|h| h == column).ok_or_else(|| {
        CliError::Config(format!("{}: no column named {column:?}", path.display()))
    })?;
    if col == 0 {
        return Err(CliError::Config(format!(
            "{}: the first column holds location labels and cannot be the group column",
            path.display()
        )));
    }
    let mut groups: HashMap<String, String> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let id = record.get(0).unwrap_or("").to_string();
        let group = record.get(col).unwrap_or("").to_string();
        if groups.insert(id.clone(), group).is_some() {
            return Err(CliError::Config(format!(
                "{}: location {id:?} listed twice",
                path.display()
            )));
        }
    }
    locations
        .iter()
        .map(|l| {
            groups.get(l).cloned().ok_or_else(|| {
                CliError::Config(format!("{}: no metadata row for location {l:?}", path.display()))
            })
        })
        .collect()
}

/// A square matrix with labelled rows and columns (header row of column
/// labels after a corner cell; first column of row labels).
pub struct LabelledMatrix {
    pub labels: Vec<String>,
    pub values: Matrix,
}

pub fn read_labelled_matrix(path: &Path) -> Result<LabelledMatrix> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    let mut row_labels = Vec::new();
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        row_labels.push(record.get(0).unwrap_or("").to_string());
        for (j, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Config(format!(
                    "{}: row {}, column {}: cannot parse {cell:?}",
                    path.display(),
                    i + 1,
                    j + 2
                ))
            })?;
            values.push(v);
        }
    }
    if row_labels != labels {
        return Err(CliError::Config(format!(
            "{}: row labels must repeat the column labels in the same order",
            path.display()
        )));
    }
    Ok(LabelledMatrix {
        values: Matrix::from_row_slice(n, n, &values),
        labels,
    })
}

/// `label, value` pairs with a header row.
pub fn read_values(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut rdr = reader(path)?;
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != 2 {
            return Err(CliError::Config(format!(
                "{}: row {} must have a label and a value",
                path.display(),
                i + 1
            )));
        }
        let v: f64 = record[1].parse().map_err(|_| {
            CliError::Config(format!(
                "{}: row {}: cannot parse {:?}",
                path.display(),
                i + 1,
                &record[1]
            ))
        })?;
        out.push((record[0].to_string(), v));
    }
    Ok(out)
}
