//! Generalized PCA in nonstandard inner-product spaces.
//!
//! The crate centres on the statistical triplet `(X, Q, D)`: a centered data
//! matrix, a metric on its row space and a metric (usually weights) on its
//! column space. Correspondence analysis, non-symmetric correspondence
//! analysis and double principal coordinates analysis are all triplets with
//! particular metrics, and the metrics here can also come from a
//! phylogenetic tree ([`tree`]) or a graph ([`graph`]).
//!
//! Module map:
//!
//! * [`linalg`] dense spectral kernels and the generalized SVD;
//! * [`tree`] Newick parsing, patristic distances and Brownian covariance;
//! * [`contingency`] abundance tables, profiles and weights;
//! * [`ordination`] the triplet engine and its named configurations;
//! * [`diversity`] diversity/dissimilarity algebra and permutation tests;
//! * [`graph`] Laplacians, heat kernels and spatial autocorrelation.

pub mod contingency;
pub mod diversity;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod ordination;
pub mod tree;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};

/// Library version recorded in CLI reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Format a number with 12 significant digits, '.' as the decimal
/// separator and no exponent, independent of locale.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}
