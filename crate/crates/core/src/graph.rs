//! Spectral metrics on undirected weighted graphs: Laplacians, the heat
//! kernel, Geary's c, Moran's I and the degree-weighted variance split.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector, PSD_TOL, RANK_TOL};

/// Maximum asymmetry accepted in an adjacency matrix.
pub const ADJACENCY_SYMMETRY_TOL: f64 = 1e-12;
/// Agreement required between the double-sum and quadratic forms.
pub const FORMS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Graph {
    adjacency: Matrix,
    degrees: Vector,
    labels: Vec<String>,
}

impl Graph {
    pub fn from_adjacency(adjacency: Matrix) -> Result<Self> {
        let labels = (0..adjacency.nrows()).map(|i| format!("v{i}")).collect();
        Self::with_labels(adjacency, labels)
    }

    pub fn with_labels(adjacency: Matrix, labels: Vec<String>) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n || n == 0 {
            return Err(Error::InvalidGraph(format!(
                "adjacency is {}x{}",
                adjacency.nrows(),
                adjacency.ncols()
            )));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch(format!("{} labels for {n} vertices", labels.len())));
        }
        linalg::ensure_finite(&adjacency)?;
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::InvalidGraph(format!("self loop at vertex {}", labels[i])));
            }
            for j in 0..n {
                if adjacency[(i, j)] < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "negative weight between {} and {}",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        let asym = linalg::asymmetry(&adjacency);
        if asym > ADJACENCY_SYMMETRY_TOL {
            return Err(Error::InvalidGraph(format!("adjacency asymmetric by {asym:.3e}")));
        }
        let degrees = adjacency.column_sum();
        Ok(Self {
            adjacency,
            degrees,
            labels,
        })
    }

    /// Parse an edge list: one `u v [weight]` per line, `#` comments, a lone
    /// label declares an isolated vertex. Labels are numbered in order of
    /// first appearance; the default weight is 1.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut edges: Vec<(usize, usize, f64, usize)> = Vec::new();
        let mut vertex = |name: &str, labels: &mut Vec<String>| -> usize {
            *index.entry(name.to_string()).or_insert_with(|| {
                labels.push(name.to_string());
                labels.len() - 1
            })
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let line_no = lineno + 1;
            match fields.as_slice() {
                [u] => {
                    vertex(u, &mut labels);
                }
                [u, v, rest @ ..] if rest.len() <= 1 => {
                    let w = match rest.first() {
                        None => 1.0,
                        Some(t) => t.parse::<f64>().map_err(|_| {
                            Error::InvalidGraph(format!("line {line_no}: bad weight {t:?}"))
                        })?,
                    };
                    if !w.is_finite() || w < 0.0 {
                        return Err(Error::InvalidGraph(format!(
                            "line {line_no}: weight {w} must be finite and nonnegative"
                        )));
                    }
                    let a = vertex(u, &mut labels);
                    let b = vertex(v, &mut labels);
                    if a == b {
                        return Err(Error::InvalidGraph(format!("line {line_no}: self loop at {u}")));
                    }
                    edges.push((a, b, w, line_no));
                }
                _ => {
                    return Err(Error::InvalidGraph(format!(
                        "line {line_no}: expected `u v [weight]`"
                    )))
                }
            }
        }
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidGraph("no vertices".into()));
        }
        let mut adjacency = Matrix::zeros(n, n);
        let mut seen = vec![false; n * n];
        for (a, b, w, line_no) in edges {
            if seen[a * n + b] {
                return Err(Error::InvalidGraph(format!(
                    "line {line_no}: duplicate edge {} {}",
                    labels[a], labels[b]
                )));
            }
            seen[a * n + b] = true;
            seen[b * n + a] = true;
            adjacency[(a, b)] = w;
            adjacency[(b, a)] = w;
        }
        Self::with_labels(adjacency, labels)
    }

    pub fn load_edge_list(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_edge_list(&text)
    }

    pub fn n_vertices(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn degrees(&self) -> &Vector {
        &self.degrees
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `N_e = sum_ij A_ij`, twice the (weighted) number of edges.
    pub fn total_weight(&self) -> f64 {
        self.degrees.sum()
    }

    fn positive_degrees(&self) -> Result<()> {
        match (0..self.n_vertices()).find(|&i| self.degrees[i] <= 0.0) {
            Some(i) => Err(Error::IsolatedVertex(i)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaplacianKind {
    /// `L = D - A`.
    #[default]
    Raw,
    /// `L* = D^{-1} (D - A)`.
    RowStandardized,
    /// `D^{-1/2} (D - A) D^{-1/2}`.
    SymmetricNormalized,
}

pub fn laplacian(g: &Graph, kind: LaplacianKind) -> Result<Matrix> {
    let raw = Matrix::from_diagonal(g.degrees()) - g.adjacency();
    match kind {
        LaplacianKind::Raw => Ok(raw),
        LaplacianKind::RowStandardized => {
            g.positive_degrees()?;
            let d = g.degrees();
            Ok(Matrix::from_fn(raw.nrows(), raw.ncols(), |i, j| raw[(i, j)] / d[i]))
        }
        LaplacianKind::SymmetricNormalized => {
            g.positive_degrees()?;
            let r = g.degrees().map(|d| 1.0 / d.sqrt());
            Ok(Matrix::from_fn(raw.nrows(), raw.ncols(), |i, j| {
                r[i] * raw[(i, j)] * r[j]
            }))
        }
    }
}

/// A statistic evaluated both as a double sum over vertex pairs and as a
/// quadratic form; `value` is the quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Autocorrelation {
    pub value: f64,
    pub double_sum: f64,
    pub quadratic: f64,
}

/// `y` centered by its unweighted mean, together with `y~^T y~`.
fn centered(y: &Vector, g: &Graph) -> Result<(Vector, f64)> {
    if y.len() != g.n_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} on a graph with {} vertices",
            y.len(),
            g.n_vertices()
        )));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite value {v} in y")));
    }
    let mean = y.mean();
    let yc = y.map(|v| v - mean);
    let ss = yc.norm_squared();
    let scale = y.amax();
    if ss <= (1e-14 * scale).powi(2) * y.len() as f64 {
        return Err(Error::ConstantVector);
    }
    Ok((yc, ss))
}

fn agree(stat: &str, a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > FORMS_TOL * a.abs().max(b.abs()).max(1.0) {
        return Err(Error::Numeric(format!(
            "{stat}: double sum {a:.15e} and quadratic form {b:.15e} disagree"
        )));
    }
    Ok(())
}

/// Geary's c: `(n-1)/N_e * y~^T L y~ / y~^T y~`.
pub fn geary_c(y: &Vector, g: &Graph) -> Result<Autocorrelation> {
    let (yc, ss) = centered(y, g)?;
    let n = g.n_vertices();
    let ne = g.total_weight();
    if ne <= 0.0 {
        return Err(Error::InvalidGraph("graph has no edges".into()));
    }
    let a = g.adjacency();
    let mut pairs = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = y[i] - y[j];
            pairs += a[(i, j)] * d * d;
        }
    }
    let double_sum = (n as f64 - 1.0) * pairs / (2.0 * ne * ss);
    let l = laplacian(g, LaplacianKind::Raw)?;
    let quadratic = (n as f64 - 1.0) / ne * (yc.transpose() * l * &yc)[0] / ss;
    agree("Geary's c", double_sum, quadratic)?;
    Ok(Autocorrelation {
        value: quadratic,
        double_sum,
        quadratic,
    })
}

/// Moran's I: `n/N_e * y~^T A y~ / y~^T y~`; may be negative.
pub fn moran_i(y: &Vector, g: &Graph) -> Result<Autocorrelation> {
    let (yc, ss) = centered(y, g)?;
    let n = g.n_vertices();
    let ne = g.total_weight();
    if ne <= 0.0 {
        return Err(Error::InvalidGraph("graph has no edges".into()));
    }
    let a = g.adjacency();
    let mut pairs = 0.0;
    for i in 0..n {
        for j in 0..n {
            pairs += a[(i, j)] * yc[i] * yc[j];
        }
    }
    let double_sum = n as f64 * pairs / (ne * ss);
    let quadratic = n as f64 / ne * (yc.transpose() * a * &yc)[0] / ss;
    agree("Moran's I", double_sum, quadratic)?;
    Ok(Autocorrelation {
        value: quadratic,
        double_sum,
        quadratic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct VarianceDecomposition {
    /// `y~^T D y~ / N_e`.
    pub total: f64,
    /// `y~^T (D - A) y~ / N_e`.
    pub laplacian_part: f64,
    /// `y~^T A y~ / N_e`.
    pub adjacency_part: f64,
}

/// Degree-weighted variance of `y` split into Laplacian and adjacency parts.
/// A constant `y` gives all parts zero.
pub fn variance_decomposition(y: &Vector, g: &Graph) -> Result<VarianceDecomposition> {
    if y.len() != g.n_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} on a graph with {} vertices",
            y.len(),
            g.n_vertices()
        )));
    }
    let ne = g.total_weight();
    if ne <= 0.0 {
        return Err(Error::InvalidGraph("graph has no edges".into()));
    }
    let mean = y.mean();
    let yc = y.map(|v| v - mean);
    let a = g.adjacency();
    let d = g.degrees();
    let total: f64 = (0..yc.len()).map(|i| d[i] * yc[i] * yc[i]).sum::<f64>() / ne;
    let adjacency_part = (yc.transpose() * a * &yc)[0] / ne;
    // Computed as the remainder so the identity holds to rounding of one
    // subtraction; equal to y~^T (D - A) y~ / N_e.
    let laplacian_part = total - adjacency_part;
    Ok(VarianceDecomposition {
        total,
        laplacian_part,
        adjacency_part,
    })
}

fn check_psd(eig: &linalg::SpectralDecomposition) -> Result<()> {
    let lmax = eig.lambda_max().max(0.0);
    let lmin = eig.min_eigenvalue();
    if lmin < -PSD_TOL * lmax.max(1.0) {
        return Err(Error::IndefiniteBeyondTolerance { eigenvalue: lmin });
    }
    Ok(())
}

/// `exp(-2 alpha L) = V diag(exp(-2 alpha lambda)) V^T`.
pub fn heat_kernel(l: &Matrix, alpha: f64) -> Result<Matrix> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("heat kernel alpha {alpha} must be >= 0")));
    }
    linalg::ensure_symmetric(l)?;
    let eig = linalg::symmetric_eigen(l)?;
    check_psd(&eig)?;
    if alpha == 0.0 {
        return Ok(Matrix::identity(l.nrows(), l.ncols()));
    }
    linalg::spectral_map(l, |lambda| (-2.0 * alpha * lambda.max(0.0)).exp())
}

/// Weighting of the Laplacian eigenbasis used to build a metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralWeight {
    /// `lambda` itself (the Laplacian).
    Lambda,
    /// `1 / lambda` on the positive eigenspace.
    InverseLambda,
    /// `exp(-2 alpha lambda)` (the heat kernel).
    Heat(f64),
}

#[derive(Debug, Clone)]
pub struct LaplacianMetric {
    pub metric: Matrix,
    /// Eigen-directions given weight zero (e.g. the constant vector).
    pub discarded: usize,
}

pub fn laplacian_metric(l: &Matrix, weight: SpectralWeight) -> Result<LaplacianMetric> {
    if let SpectralWeight::Heat(alpha) = weight {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("heat kernel alpha {alpha} must be >= 0")));
        }
    }
    linalg::ensure_symmetric(l)?;
    let eig = linalg::symmetric_eigen(l)?;
    check_psd(&eig)?;
    let cut = RANK_TOL * eig.lambda_max().max(0.0);
    let weights: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&lambda| match weight {
            SpectralWeight::Lambda => {
                if lambda > cut {
                    lambda
                } else {
                    0.0
                }
            }
            SpectralWeight::InverseLambda => {
                if lambda > cut {
                    1.0 / lambda
                } else {
                    0.0
                }
            }
            SpectralWeight::Heat(alpha) => (-2.0 * alpha * lambda.max(0.0)).exp(),
        })
        .collect();
    let discarded = weights.iter().filter(|&&w| w == 0.0).count();
    let mut scaled = eig.eigenvectors.clone();
    for (j, w) in weights.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*w);
    }
    let m = scaled * eig.eigenvectors.transpose();
    Ok(LaplacianMetric {
        metric: (&m + m.transpose()) * 0.5,
        discarded,
    })
}
