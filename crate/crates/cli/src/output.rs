//! CSV and JSON writers. Numbers are printed with 12 significant digits and
//! a '.' decimal separator regardless of locale.

use std::fs;
use std::path::Path;

use metricord::{format_number, Matrix};
use serde::Serialize;

use crate::error::{CliError, Result};

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// A CSV document built in memory, then written in one go.
#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Self::default();
        csv.row(header.iter().map(|h| h.to_string()));
        csv
    }

    pub fn row(&mut self, fields: impl IntoIterator<Item = String>) {
        let line: Vec<String> = fields.into_iter().map(|f| quote(&f)).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    /// `label, m[i, 0], m[i, 1], ...`.
    pub fn labelled_row(&mut self, label: &str, values: impl IntoIterator<Item = f64>) {
        let fields = std::iter::once(label.to_string()).chain(values.into_iter().map(format_number));
        self.row(fields);
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Rows of `m` labelled, under a header of `first` then `prefix1..prefixk`.
pub fn matrix_csv(first: &str, prefix: &str, labels: &[String], m: &Matrix) -> String {
    let names: Vec<String> = (1..=m.ncols()).map(|j| format!("{prefix}{j}")).collect();
    square_csv(first, &names, labels, m)
}

/// Rows of `m` labelled, with explicit column names.
pub fn square_csv(first: &str, columns: &[String], labels: &[String], m: &Matrix) -> String {
    let mut header = vec![first];
    header.extend(columns.iter().map(String::as_str));
    let mut csv = Csv::new(&header);
    for (i, label) in labels.iter().enumerate() {
        csv.labelled_row(label, m.row(i).iter().copied());
    }
    csv.into_string()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Pretty JSON with a trailing newline. Non-finite numbers have no JSON
/// form and serialize as null; reports carry explicit flags for them.
pub fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// A float rounded to 12 significant digits, for JSON reports.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        format_number(x).parse().expect("formatted number parses")
    } else {
        x
    }
}

pub fn round_all(v: impl IntoIterator<Item = f64>) -> Vec<f64> {
    v.into_iter().map(round12).collect()
}
