//! Analysis configuration and its validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use metricord::contingency::{Transform, WeightMode};
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Gpca,
    Ca,
    Nsca,
    Dpcoa,
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gpca" => Ok(Method::Gpca),
            "ca" => Ok(Method::Ca),
            "nsca" => Ok(Method::Nsca),
            "dpcoa" => Ok(Method::Dpcoa),
            _ => Err(format!("unknown method {s:?} (expected gpca, ca, nsca or dpcoa)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Gpca => "gpca",
            Method::Ca => "ca",
            Method::Nsca => "nsca",
            Method::Dpcoa => "dpcoa",
        })
    }
}

/// Species metric `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MetricSpec {
    #[default]
    Identity,
    /// Brownian covariance of the tree.
    Tree,
    /// Spectral inverse of the tree covariance.
    InvTree,
    /// Heat kernel of the whole-tree Laplacian, restricted to the leaves.
    TreeLaplacianHeat(f64),
    /// Heat kernel of a species graph.
    GraphHeat(f64),
    /// Matrix read from `--metric-matrix`; squared distances for DPCoA.
    Custom,
}

fn parse_alpha(name: &str, arg: &str) -> std::result::Result<f64, String> {
    let alpha: f64 = arg
        .parse()
        .map_err(|_| format!("{name}: cannot parse alpha {arg:?}"))?;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(format!("{name}: alpha must be positive, got {alpha}"));
    }
    Ok(alpha)
}

impl FromStr for MetricSpec {
    type Err = String;

    /// Accepts `name`, `name:alpha` or `name(alpha)`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, arg) = match s.find([':', '(']) {
            Some(i) => (&s[..i], Some(s[i + 1..].trim_end_matches(')'))),
            None => (s, None),
        };
        match (name, arg) {
            ("identity", None) => Ok(MetricSpec::Identity),
            ("tree", None) => Ok(MetricSpec::Tree),
            ("inv-tree", None) => Ok(MetricSpec::InvTree),
            ("custom" | "custom-matrix", None) => Ok(MetricSpec::Custom),
            ("tree-laplacian-heat", Some(a)) => Ok(MetricSpec::TreeLaplacianHeat(parse_alpha(name, a)?)),
            ("graph-heat", Some(a)) => Ok(MetricSpec::GraphHeat(parse_alpha(name, a)?)),
            ("tree-laplacian-heat" | "graph-heat", None) => {
                Err(format!("{name} needs an alpha, e.g. {name}:0.5"))
            }
            _ => Err(format!(
                "unknown metric {s:?} (expected identity, tree, inv-tree, \
                 tree-laplacian-heat:ALPHA, graph-heat:ALPHA or custom)"
            )),
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Identity => f.write_str("identity"),
            MetricSpec::Tree => f.write_str("tree"),
            MetricSpec::InvTree => f.write_str("inv-tree"),
            MetricSpec::TreeLaplacianHeat(a) => write!(f, "tree-laplacian-heat:{a}"),
            MetricSpec::GraphHeat(a) => write!(f, "graph-heat:{a}"),
            MetricSpec::Custom => f.write_str("custom"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Individuals,
    Groups,
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "individuals" => Ok(Scheme::Individuals),
            "groups" => Ok(Scheme::Groups),
            _ => Err(format!("unknown scheme {s:?} (expected individuals or groups)")),
        }
    }
}

pub fn parse_weight_mode(s: &str) -> std::result::Result<WeightMode, String> {
    match s {
        "abundance" => Ok(WeightMode::Abundance),
        "uniform" => Ok(WeightMode::Uniform),
        _ => Err(format!("unknown weight mode {s:?} (expected abundance or uniform)")),
    }
}

fn weight_mode_name(m: WeightMode) -> &'static str {
    match m {
        WeightMode::Abundance => "abundance",
        WeightMode::Uniform => "uniform",
    }
}

#[derive(Debug, Clone, Default)]
pub struct AnalysisConfig {
    pub table: PathBuf,
    pub tree: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub metric_matrix: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub group_column: Option<String>,
    pub method: Method,
    pub metric: MetricSpec,
    pub dims: Option<usize>,
    pub transform: Transform,
    pub weight_mode: WeightMode,
    pub species_as_rows: bool,
    /// Reject tree leaves that are absent from the table.
    pub strict: bool,
    pub default_branch_length: Option<f64>,
    /// Sum counts within metadata groups before profiling.
    pub pool_groups: bool,
    pub permutations: Option<usize>,
    pub seed: u64,
    pub scheme: Scheme,
    pub f_dims: Option<usize>,
    pub out_dir: PathBuf,
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// The configuration as echoed into reports: input files by name only, so
/// reports do not depend on where the inputs live.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub table: String,
    pub tree: Option<String>,
    pub graph: Option<String>,
    pub metric_matrix: Option<String>,
    pub metadata: Option<String>,
    pub group_column: Option<String>,
    pub method: String,
    pub metric: String,
    pub dims: Option<usize>,
    pub pseudocount: Option<f64>,
    pub log1p: bool,
    pub weight_mode: &'static str,
    pub species_as_rows: bool,
    pub strict: bool,
    pub default_branch_length: Option<f64>,
    pub pool_groups: bool,
    pub permutations: Option<usize>,
    pub seed: u64,
    pub scheme: Scheme,
    pub f_dims: Option<usize>,
}

impl AnalysisConfig {
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            table: file_name(&self.table),
            tree: self.tree.as_deref().map(file_name),
            graph: self.graph.as_deref().map(file_name),
            metric_matrix: self.metric_matrix.as_deref().map(file_name),
            metadata: self.metadata.as_deref().map(file_name),
            group_column: self.group_column.clone(),
            method: self.method.to_string(),
            metric: self.metric.to_string(),
            dims: self.dims,
            pseudocount: self.transform.pseudocount,
            log1p: self.transform.log1p,
            weight_mode: weight_mode_name(self.weight_mode),
            species_as_rows: self.species_as_rows,
            strict: self.strict,
            default_branch_length: self.default_branch_length,
            pool_groups: self.pool_groups,
            permutations: self.permutations,
            seed: self.seed,
            scheme: self.scheme,
            f_dims: self.f_dims,
        }
    }

    /// The metric actually used: CA and NSCA fix their own.
    pub fn effective_metric(&self) -> Option<MetricSpec> {
        match self.method {
            Method::Ca | Method::Nsca => None,
            _ => Some(self.metric),
        }
    }

    /// Check inputs and method/metric compatibility before any computation.
    /// Returns warnings for settings that are accepted but ignored.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |m: String| Err(CliError::Config(m));
        let mut warnings = Vec::new();
        match self.method {
            Method::Ca | Method::Nsca => {
                if self.metric != MetricSpec::Identity {
                    warnings.push(format!(
                        "method {} fixes its own metric; --metric {} ignored",
                        self.method, self.metric
                    ));
                }
            }
            Method::Dpcoa => {
                if !matches!(self.metric, MetricSpec::Tree | MetricSpec::Custom) {
                    return bad(format!(
                        "method dpcoa needs --metric tree or --metric custom (squared distances), got {}",
                        self.metric
                    ));
                }
            }
            Method::Gpca => {}
        }
        if let Some(metric) = self.effective_metric() {
            match metric {
                MetricSpec::Tree | MetricSpec::InvTree | MetricSpec::TreeLaplacianHeat(_) => {
                    if self.tree.is_none() {
                        return bad(format!("metric {metric} needs --tree"));
                    }
                }
                MetricSpec::GraphHeat(_) => {
                    if self.graph.is_none() {
                        return bad(format!("metric {metric} needs --graph"));
                    }
                }
                MetricSpec::Custom => {
                    if self.metric_matrix.is_none() {
                        return bad("metric custom needs --metric-matrix".into());
                    }
                }
                MetricSpec::Identity => {}
            }
        }
        if let Some(e) = self.transform.pseudocount {
            if !e.is_finite() || e < 0.0 {
                return bad(format!("pseudocount must be finite and nonnegative, got {e}"));
            }
        }
        if let Some(b) = self.default_branch_length {
            if !b.is_finite() || b <= 0.0 {
                return bad(format!("default branch length must be positive, got {b}"));
            }
        }
        if self.dims == Some(0) {
            return bad("--dims must be at least 1".into());
        }
        if self.f_dims == Some(0) {
            return bad("--f-dims must be at least 1".into());
        }
        let needs_groups = self.pool_groups || self.scheme == Scheme::Groups;
        if needs_groups && (self.metadata.is_none() || self.group_column.is_none()) {
            return bad("grouping needs --metadata and --group-column".into());
        }
        if self.pool_groups && self.scheme == Scheme::Groups {
            return bad("--pool-groups and --scheme groups cannot be combined".into());
        }
        if let Some(r) = self.permutations {
            if r < metricord::diversity::MIN_REPLICATES {
                return bad(format!(
                    "--permutations must be at least {}, got {r}",
                    metricord::diversity::MIN_REPLICATES
                ));
            }
        }
        Ok(warnings)
    }
}
