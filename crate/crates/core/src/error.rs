use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical and data-handling layers.
///
/// Variants are grouped by the layer that raises them; the CLI maps the
/// validation group to exit code 2 and the numeric group to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    // linalg
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric (max asymmetry {deviation:.3e})")]
    NotSymmetric { deviation: f64 },
    #[error("matrix is indefinite: eigenvalue {eigenvalue:.3e} below -tol * lambda_max")]
    IndefiniteBeyondTolerance { eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("metric is not positive definite (min eigenvalue {min_eigenvalue:.3e}, condition {condition:.3e})")]
    MetricNotPD { min_eigenvalue: f64, condition: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),

    // tree
    #[error("Newick parse error at byte {position}: {reason}")]
    Parse { position: usize, reason: String },
    #[error("missing branch length for node {node}")]
    MissingBranchLength { node: String },
    #[error("duplicate leaf label {0:?}")]
    DuplicateLeafLabel(String),
    #[error("branch above node {node} has zero length")]
    ZeroBranchLength { node: String },

    // contingency
    #[error("negative entry at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize },
    #[error("table is empty after dropping zero rows and columns")]
    EmptyTable,
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("cannot parse cell at line {line}, column {col}: {text:?}")]
    UnparsableCell { line: usize, col: usize, text: String },
    #[error("location {0:?} has a zero row sum")]
    ZeroRowSum(String),
    #[error("species {0:?} has zero weight")]
    ZeroSpeciesWeight(String),
    #[error("species {0:?} is not a leaf of the tree")]
    MissingSpecies(String),
    #[error("tree leaf {0:?} is absent from the table")]
    UnusedLeaf(String),

    // ordination
    #[error("requested {requested} dimensions but rank is {rank}")]
    KTooLarge { requested: usize, rank: usize },
    #[error("distances are not Euclidean: MDS eigenvalue {eigenvalue:.3e}")]
    NotEuclideanDistance { eigenvalue: f64 },
    #[error("harmonic weights must be nonnegative (weight {index} is {value})")]
    NegativeWeight { index: usize, value: f64 },

    // diversity
    #[error("vector is not a profile: {0}")]
    NotAProfile(String),
    #[error("table has a zero marginal ({0})")]
    ZeroMarginal(String),
    #[error("table has N = {n} individuals; the incidence oracle is limited to {limit}")]
    TooLargeForOracle { n: usize, limit: usize },
    #[error("permutation test needs integer counts (cell {row}, {col} = {value})")]
    NonIntegerCounts { row: usize, col: usize, value: f64 },
    #[error("permutation test needs at least 99 replicates, got {0}")]
    TooFewReplicates(usize),

    // graph
    #[error("vertex {0} has degree zero")]
    IsolatedVertex(usize),
    #[error("vector is constant; the statistic is undefined")]
    ConstantVector,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::IndefiniteBeyondTolerance { .. }
                | Error::MetricNotPD { .. }
                | Error::Numeric(_)
                | Error::NotEuclideanDistance { .. }
        )
    }
}
