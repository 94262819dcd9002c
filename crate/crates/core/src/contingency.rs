//! Abundance tables and their profile representation.
//!
//! A table `F` has one row per location and one column per species. Its
//! profiles are the rows of `F` divided by their sums, the location weights
//! are the normalized row sums and the species weights the normalized
//! column sums.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone)]
pub struct AbundanceTable {
    /// `L x S` nonnegative counts.
    pub counts: Matrix,
    pub location_labels: Vec<String>,
    pub species_labels: Vec<String>,
    /// Rows or columns dropped while loading.
    pub warnings: Vec<String>,
}

impl AbundanceTable {
    pub fn new(
        counts: Matrix,
        location_labels: Vec<String>,
        species_labels: Vec<String>,
    ) -> Result<Self> {
        if counts.nrows() != location_labels.len() || counts.ncols() != species_labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} counts with {} location and {} species labels",
                counts.nrows(),
                counts.ncols(),
                location_labels.len(),
                species_labels.len()
            )));
        }
        for labels in [&location_labels, &species_labels] {
            let mut seen = HashSet::new();
            for l in labels {
                if !seen.insert(l) {
                    return Err(Error::DuplicateLabel(l.clone()));
                }
            }
        }
        for j in 0..counts.ncols() {
            for i in 0..counts.nrows() {
                let v = counts[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry { row: i, col: j });
                }
            }
        }
        Ok(Self {
            counts,
            location_labels,
            species_labels,
            warnings: Vec::new(),
        })
    }

    /// Convenience constructor with generated labels `L1.. / S1..`.
    pub fn from_counts(counts: Matrix) -> Result<Self> {
        let locs = (1..=counts.nrows()).map(|i| format!("L{i}")).collect();
        let sps = (1..=counts.ncols()).map(|j| format!("S{j}")).collect();
        Self::new(counts, locs, sps)
    }

    pub fn n_locations(&self) -> usize {
        self.counts.nrows()
    }

    pub fn n_species(&self) -> usize {
        self.counts.ncols()
    }

    /// Total count `N`.
    pub fn total(&self) -> f64 {
        self.counts.sum()
    }

    pub fn row_sums(&self) -> Vector {
        Vector::from_iterator(self.n_locations(), self.counts.row_iter().map(|r| r.sum()))
    }

    pub fn col_sums(&self) -> Vector {
        Vector::from_iterator(self.n_species(), self.counts.column_iter().map(|c| c.sum()))
    }

    /// Drop rows, then columns, whose entries are all zero. Each drop is
    /// recorded in `warnings`.
    pub fn drop_empty(mut self) -> Result<Self> {
        let rows: Vec<usize> = (0..self.n_locations())
            .filter(|&i| self.counts.row(i).iter().any(|&v| v != 0.0))
            .collect();
        for i in 0..self.n_locations() {
            if !rows.contains(&i) {
                self.warnings.push(format!(
                    "dropped location {:?}: all counts are zero",
                    self.location_labels[i]
                ));
            }
        }
        let cols: Vec<usize> = (0..self.n_species())
            .filter(|&j| rows.iter().any(|&i| self.counts[(i, j)] != 0.0))
            .collect();
        for j in 0..self.n_species() {
            if !cols.contains(&j) {
                self.warnings.push(format!(
                    "dropped species {:?}: all counts are zero",
                    self.species_labels[j]
                ));
            }
        }
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::EmptyTable);
        }
        let mut out = self.select(&rows, &cols);
        out.warnings = self.warnings;
        Ok(out)
    }

    /// Sub-table with the given row and column indices, in that order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self {
            counts: Matrix::from_fn(rows.len(), cols.len(), |i, j| {
                self.counts[(rows[i], cols[j])]
            }),
            location_labels: rows.iter().map(|&i| self.location_labels[i].clone()).collect(),
            species_labels: cols.iter().map(|&j| self.species_labels[j].clone()).collect(),
            warnings: self.warnings.clone(),
        }
    }

    /// Apply a pseudocount and/or `log1p` to every cell. The pseudocount is
    /// added first.
    pub fn transformed(&self, transform: Transform) -> Self {
        let mut out = self.clone();
        if let Some(eps) = transform.pseudocount {
            out.counts.apply(|v| *v += eps);
        }
        if transform.log1p {
            out.counts.apply(|v| *v = v.ln_1p());
        }
        out
    }

    /// Counts as nonnegative integers, or an error naming a fractional cell.
    pub fn integer_counts(&self) -> Result<Vec<Vec<u64>>> {
        (0..self.n_locations())
            .map(|i| {
                (0..self.n_species())
                    .map(|j| {
                        let v = self.counts[(i, j)];
                        if v.fract() != 0.0 || v > u64::MAX as f64 {
                            Err(Error::NonIntegerCounts {
                                row: i,
                                col: j,
                                value: v,
                            })
                        } else {
                            Ok(v as u64)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Sum rows that share a group label; groups appear in first-seen order.
    pub fn pool_rows(&self, groups: &[String]) -> Result<Self> {
        if groups.len() != self.n_locations() {
            return Err(Error::DimensionMismatch(format!(
                "{} group labels for {} locations",
                groups.len(),
                self.n_locations()
            )));
        }
        let mut order: Vec<String> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        for g in groups {
            if !index.contains_key(g.as_str()) {
                index.insert(g, order.len());
                order.push(g.clone());
            }
        }
        let mut counts = Matrix::zeros(order.len(), self.n_species());
        for (i, g) in groups.iter().enumerate() {
            let k = index[g.as_str()];
            for j in 0..self.n_species() {
                counts[(k, j)] += self.counts[(i, j)];
            }
        }
        Self::new(counts, order, self.species_labels.clone())
    }
}

/// Count transforms applied before profiling.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Transform {
    pub pseudocount: Option<f64>,
    pub log1p: bool,
}

impl Transform {
    pub fn is_identity(&self) -> bool {
        self.pseudocount.is_none() && !self.log1p
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// The file lists species as rows and locations as columns.
    pub species_as_rows: bool,
    /// Field delimiter; inferred from the extension when `None`
    /// (`.csv` is comma separated, anything else tab separated).
    pub delimiter: Option<u8>,
}

pub fn load_table(path: &Path, opts: LoadOptions) -> Result<AbundanceTable> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let delimiter = opts.delimiter.unwrap_or_else(|| {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => b',',
            _ => b'\t',
        }
    });
    parse_table(&text, delimiter, opts.species_as_rows)
}

/// Parse delimited text: a header row of column labels, then one row per
/// record with its label in the first field. `#` lines are comments.
pub fn parse_table(text: &str, delimiter: u8, species_as_rows: bool) -> Result<AbundanceTable> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut header: Option<Vec<String>> = None;
    let mut row_labels = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::UnparsableCell {
            line: e.position().map_or(0, |p| p.line() as usize),
            col: 0,
            text: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let Some(cols) = &header else {
            header = Some(record.iter().skip(1).map(|s| s.trim().to_string()).collect());
            continue;
        };
        if record.len() != cols.len() + 1 {
            return Err(Error::UnparsableCell {
                line,
                col: record.len(),
                text: format!("expected {} fields, found {}", cols.len() + 1, record.len()),
            });
        }
        row_labels.push(record[0].trim().to_string());
        for (j, cell) in record.iter().enumerate().skip(1) {
            let trimmed = cell.trim();
            let v: f64 = trimmed.parse().map_err(|_| Error::UnparsableCell {
                line,
                col: j + 1,
                text: trimmed.to_string(),
            })?;
            if v < 0.0 {
                return Err(Error::NegativeEntry {
                    row: row_labels.len() - 1,
                    col: j - 1,
                });
            }
            values.push(v);
        }
    }
    let col_labels = header.ok_or(Error::EmptyTable)?;
    if row_labels.is_empty() || col_labels.is_empty() {
        return Err(Error::EmptyTable);
    }
    let m = Matrix::from_row_slice(row_labels.len(), col_labels.len(), &values);
    let table = if species_as_rows {
        AbundanceTable::new(m.transpose(), col_labels, row_labels)?
    } else {
        AbundanceTable::new(m, row_labels, col_labels)?
    };
    table.drop_empty()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum WeightMode {
    /// `w` proportional to row sums.
    #[default]
    Abundance,
    /// `w = 1 / L`.
    Uniform,
}

/// Profiles, weights and the centered profile matrix of a table.
#[derive(Debug, Clone)]
pub struct ProfileData {
    /// `L x S` row profiles; each row sums to one.
    pub x: Matrix,
    /// Location weights, summing to one.
    pub w: Vector,
    /// Species weights: relative column frequencies of the table.
    pub c: Vector,
    /// `P_w X`, the profiles centered at their `w`-weighted mean.
    pub xc: Matrix,
    pub weight_mode: WeightMode,
    pub location_labels: Vec<String>,
    pub species_labels: Vec<String>,
    /// Total count `N` of the table the profiles came from.
    pub total: f64,
}

pub fn profiles(table: &AbundanceTable, mode: WeightMode) -> Result<ProfileData> {
    let (l, s) = table.counts.shape();
    let n = table.total();
    if !(n > 0.0) {
        return Err(Error::EmptyTable);
    }
    let rows = table.row_sums();
    if let Some(i) = (0..l).find(|&i| rows[i] <= 0.0) {
        return Err(Error::ZeroRowSum(table.location_labels[i].clone()));
    }
    let x = Matrix::from_fn(l, s, |i, j| table.counts[(i, j)] / rows[i]);
    let w = match mode {
        WeightMode::Abundance => rows.map(|r| r / n),
        WeightMode::Uniform => Vector::from_element(l, 1.0 / l as f64),
    };
    let c = table.col_sums().map(|v| v / n);
    let mean = x.transpose() * &w;
    let xc = Matrix::from_fn(l, s, |i, j| x[(i, j)] - mean[j]);
    Ok(ProfileData {
        x,
        w,
        c,
        xc,
        weight_mode: mode,
        location_labels: table.location_labels.clone(),
        species_labels: table.species_labels.clone(),
        total: n,
    })
}

impl ProfileData {
    pub fn n_locations(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_species(&self) -> usize {
        self.x.ncols()
    }

    /// Weighted mean profile `X^T w`.
    pub fn mean_profile(&self) -> Vector {
        self.x.transpose() * &self.w
    }

    pub fn location_metric(&self) -> Matrix {
        Matrix::from_diagonal(&self.w)
    }

    /// `P_c = I - 1 c^T`.
    pub fn species_centering(&self) -> Matrix {
        let s = self.n_species();
        Matrix::identity(s, s) - Vector::from_element(s, 1.0) * self.c.transpose()
    }
}

/// `max |P_w X - X P_c|` over all entries.
pub fn centering_duality_check(pd: &ProfileData) -> f64 {
    let column_centered = &pd.x * pd.species_centering();
    (&pd.xc - column_centered).amax()
}

/// Result of matching table species against tree leaves.
#[derive(Debug, Clone)]
pub struct SpeciesJoin {
    /// For each table species, the index of its leaf in `leaf_order`.
    pub leaf_index: Vec<usize>,
    /// Tree leaves absent from the table.
    pub pruned: Vec<String>,
}

/// Join table species to tree leaves by label. Species missing from the
/// tree are an error; unused leaves are pruned, or rejected when `strict`.
pub fn join_species(species: &[String], leaf_order: &[String], strict: bool) -> Result<SpeciesJoin> {
    let position: HashMap<&str, usize> = leaf_order
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut leaf_index = Vec::with_capacity(species.len());
    for s in species {
        match position.get(s.as_str()) {
            Some(&i) => leaf_index.push(i),
            None => return Err(Error::MissingSpecies(s.clone())),
        }
    }
    let used: HashSet<usize> = leaf_index.iter().copied().collect();
    let pruned: Vec<String> = leaf_order
        .iter()
        .enumerate()
        .filter(|(i, _)| !used.contains(i))
        .map(|(_, l)| l.clone())
        .collect();
    if strict {
        if let Some(first) = pruned.first() {
            return Err(Error::UnusedLeaf(first.clone()));
        }
    }
    Ok(SpeciesJoin { leaf_index, pruned })
}

/// Rows and columns `index` of a square matrix.
pub fn submatrix(m: &Matrix, index: &[usize]) -> Matrix {
    Matrix::from_fn(index.len(), index.len(), |i, j| m[(index[i], index[j])])
}
