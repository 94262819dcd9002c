//! The analyses behind the subcommands. Each `run_*` returns its output
//! files as `(name, contents)` pairs; writing them is left to the caller.

use std::path::Path;

use metricord::contingency::{
    join_species, load_table, profiles, submatrix, AbundanceTable, LoadOptions, ProfileData,
};
use metricord::diversity::{
    self, classical_indices, PermutationOptions, PermutationScheme, PermutationSummary,
};
use metricord::graph::{self, Graph, LaplacianKind};
use metricord::ordination::{self, OrdinationResult, Triplet, TripletKind};
use metricord::tree::{self, ParseOptions, PhyloTree};
use metricord::{linalg, Matrix, Vector, VERSION};
use serde::Serialize;

use crate::config::{AnalysisConfig, ConfigEcho, Method, MetricSpec, Scheme};
use crate::error::{CliError, Context, Result};
use crate::inputs;
use crate::output::{json_string, matrix_csv, round12, round_all, square_csv, Csv};

pub type Files = Vec<(String, String)>;

pub const ORDINATION_SCHEMA: &str = "metricord.ordination/1";
pub const DIVERSITY_SCHEMA: &str = "metricord.diversity/1";
pub const FTEST_SCHEMA: &str = "metricord.ftest/1";

/// Write `files` into `dir`.
pub fn write_files(dir: &Path, files: &Files) -> Result<()> {
    for (name, text) in files {
        crate::output::write_text(&dir.join(name), text)?;
    }
    Ok(())
}

pub fn load_tree(path: &Path, default_branch_length: Option<f64>) -> Result<PhyloTree> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    PhyloTree::parse_with(&text, ParseOptions { default_branch_length })
        .context(|| format!("reading tree {}", path.display()))
}

/// The table as analysed, with the bookkeeping needed by every analysis.
pub struct Prepared {
    /// Pooled (if requested) and transformed.
    pub table: AbundanceTable,
    /// Pooled (if requested) but untransformed; permutation tests use this.
    pub raw: AbundanceTable,
    pub pd: ProfileData,
    /// Group label per location of `raw`, when metadata was given and rows
    /// were not pooled.
    pub groups: Option<Vec<String>>,
    pub warnings: Vec<String>,
}

pub fn prepare(cfg: &AnalysisConfig) -> Result<Prepared> {
    let mut warnings = cfg.validate()?;
    let table = load_table(
        &cfg.table,
        LoadOptions {
            species_as_rows: cfg.species_as_rows,
            delimiter: None,
        },
    )
    .context(|| format!("reading table {}", cfg.table.display()))?;
    warnings.extend(table.warnings.iter().cloned());

    let mut groups = match (&cfg.metadata, &cfg.group_column) {
        (Some(path), Some(column)) => {
            Some(inputs::read_groups(path, column, &table.location_labels)?)
        }
        _ => None,
    };
    let raw = match (&groups, cfg.pool_groups) {
        (Some(g), true) => {
            let pooled = table.pool_rows(g).context(|| "pooling locations by group".into())?;
            warnings.push(format!(
                "pooled {} locations into {} groups by summing counts",
                table.n_locations(),
                pooled.n_locations()
            ));
            groups = None;
            pooled
        }
        _ => table,
    };
    let table = raw.transformed(cfg.transform);
    let pd = profiles(&table, cfg.weight_mode).context(|| "computing profiles".into())?;
    Ok(Prepared {
        table,
        raw,
        pd,
        groups,
        warnings,
    })
}

/// Restrict a leaf- or vertex-indexed matrix to the table species.
fn join_matrix(
    m: &Matrix,
    names: &[String],
    species: &[String],
    strict: bool,
    what: &str,
    warnings: &mut Vec<String>,
) -> Result<Matrix> {
    let join = join_species(species, names, strict)
        .context(|| format!("matching table species to the {what}"))?;
    if !join.pruned.is_empty() {
        warnings.push(format!(
            "pruned {} {what} labels absent from the table: {}",
            join.pruned.len(),
            join.pruned.join(" ")
        ));
    }
    Ok(submatrix(m, &join.leaf_index))
}

/// The species matrix named by `metric`, ordered like `species`. For
/// `Custom` this is the matrix as read.
pub fn species_matrix(
    cfg: &AnalysisConfig,
    metric: MetricSpec,
    species: &[String],
    warnings: &mut Vec<String>,
) -> Result<Matrix> {
    let tree_input = || -> Result<PhyloTree> {
        let path = cfg.tree.as_deref().ok_or_else(|| CliError::Config("no --tree".into()))?;
        load_tree(path, cfg.default_branch_length)
    };
    match metric {
        MetricSpec::Identity => Ok(Matrix::identity(species.len(), species.len())),
        MetricSpec::Tree | MetricSpec::InvTree => {
            let t = tree_input()?;
            let tm = tree::tree_metrics(&t).context(|| "computing tree covariance".into())?;
            let sigma = join_matrix(&tm.sigma, &tm.leaf_order, species, cfg.strict, "tree leaf", warnings)?;
            if metric == MetricSpec::Tree {
                return Ok(sigma);
            }
            linalg::spectral_pinv(&sigma).context(|| "inverting tree covariance".into())
        }
        MetricSpec::TreeLaplacianHeat(alpha) => {
            let t = tree_input()?;
            let l = tree::tree_laplacian(&t).context(|| "building tree Laplacian".into())?;
            let heat = graph::heat_kernel(&l, alpha).context(|| "tree heat kernel".into())?;
            let leaf_block = submatrix(&heat, t.leaves());
            join_matrix(&leaf_block, &t.leaf_labels(), species, cfg.strict, "tree leaf", warnings)
        }
        MetricSpec::GraphHeat(alpha) => {
            let path = cfg.graph.as_deref().ok_or_else(|| CliError::Config("no --graph".into()))?;
            let g = Graph::load_edge_list(path).context(|| format!("reading graph {}", path.display()))?;
            let l = graph::laplacian(&g, LaplacianKind::Raw).context(|| "graph Laplacian".into())?;
            let heat = graph::heat_kernel(&l, alpha).context(|| "graph heat kernel".into())?;
            join_matrix(&heat, g.labels(), species, cfg.strict, "graph vertex", warnings)
        }
        MetricSpec::Custom => {
            let path = cfg
                .metric_matrix
                .as_deref()
                .ok_or_else(|| CliError::Config("no --metric-matrix".into()))?;
            let m = inputs::read_labelled_matrix(path)?;
            join_matrix(&m.values, &m.labels, species, cfg.strict, "metric matrix", warnings)
        }
    }
}

/// The species metric `Q` used by the configured method.
pub fn analysis_metric(cfg: &AnalysisConfig, pd: &ProfileData, warnings: &mut Vec<String>) -> Result<Matrix> {
    match cfg.method {
        Method::Ca => {
            let t = ordination::ca_triplet(pd).context(|| "building the CA metric".into())?;
            Ok(t.q)
        }
        Method::Nsca => Ok(Matrix::identity(pd.n_species(), pd.n_species())),
        Method::Dpcoa if cfg.metric == MetricSpec::Custom => {
            let delta = species_matrix(cfg, MetricSpec::Custom, &pd.species_labels, warnings)?;
            ordination::similarity_from_distances(&delta, &pd.c)
                .context(|| "converting distances to a similarity".into())
        }
        _ => species_matrix(cfg, cfg.metric, &pd.species_labels, warnings),
    }
}

fn ordinate(cfg: &AnalysisConfig, pd: &ProfileData, warnings: &mut Vec<String>) -> Result<(OrdinationResult, usize)> {
    let ctx = || format!("{} ordination", cfg.method);
    match cfg.method {
        Method::Ca => Ok((ordination::ca(pd, cfg.dims).context(ctx)?, 0)),
        Method::Nsca => Ok((ordination::nsca(pd, cfg.dims).context(ctx)?, 0)),
        Method::Dpcoa | Method::Gpca => {
            let q = analysis_metric(cfg, pd, warnings)?;
            let kind = match (cfg.method, cfg.metric) {
                (Method::Dpcoa, _) | (_, MetricSpec::Tree) => TripletKind::Dpcoa,
                (_, MetricSpec::InvTree) => TripletKind::InvSigma,
                _ => TripletKind::GpcaCustom,
            };
            let triplet = Triplet::from_profiles(pd, q, kind)
                .context(ctx)?
                .with_policy(linalg::MetricPolicy::ClipSingular);
            let result = ordination::gpca(&triplet, cfg.dims).context(ctx)?;
            let discarded = result.gsvd.discarded_row_dims;
            if discarded > 0 {
                warnings.push(format!(
                    "metric has {discarded} null direction(s); the ordination is restricted to its positive eigenspace"
                ));
            }
            Ok((result, discarded))
        }
    }
}

#[derive(Debug, Serialize)]
struct OrdinationReport<'a> {
    schema: &'static str,
    version: &'static str,
    command: &'static str,
    config: ConfigEcho,
    triplet: &'static str,
    n_locations: usize,
    n_species: usize,
    total_count: f64,
    rank: usize,
    k: usize,
    total_inertia: f64,
    retained_inertia: f64,
    eigenvalues: Vec<f64>,
    inertia_shares: Vec<f64>,
    metric_discarded_dims: usize,
    warnings: &'a [String],
}

pub fn run_ordination(cfg: &AnalysisConfig) -> Result<Files> {
    let mut prep = prepare(cfg)?;
    let (result, discarded) = ordinate(cfg, &prep.pd, &mut prep.warnings)?;
    let pd = &prep.pd;

    let coords = matrix_csv("location", "axis", &pd.location_labels, &result.location_coords);
    let species = matrix_csv("species", "axis", &pd.species_labels, &result.species_coords);
    let mut eig = Csv::new(&["axis", "eigenvalue", "inertia_share", "cumulative_share"]);
    let mut cumulative = 0.0;
    for j in 0..result.eigenvalues.len() {
        cumulative += result.inertia_shares[j];
        eig.labelled_row(
            &(j + 1).to_string(),
            [result.eigenvalues[j], result.inertia_shares[j], cumulative],
        );
    }
    let report = OrdinationReport {
        schema: ORDINATION_SCHEMA,
        version: VERSION,
        command: "ordinate",
        config: cfg.echo(),
        triplet: result.kind.as_str(),
        n_locations: pd.n_locations(),
        n_species: pd.n_species(),
        total_count: round12(pd.total),
        rank: result.rank(),
        k: result.k,
        total_inertia: round12(result.total_inertia()),
        retained_inertia: round12(result.retained_inertia()),
        eigenvalues: round_all(result.eigenvalues.iter().copied()),
        inertia_shares: round_all(result.inertia_shares.iter().copied()),
        metric_discarded_dims: discarded,
        warnings: &prep.warnings,
    };
    Ok(vec![
        ("coordinates.csv".into(), coords),
        ("species_coordinates.csv".into(), species),
        ("eigenvalues.csv".into(), eig.into_string()),
        ("report.json".into(), json_string(&report)),
    ])
}

#[derive(Debug, Serialize)]
struct LocationDiversity {
    label: String,
    weight: f64,
    h: f64,
    gini_simpson: f64,
    shannon: f64,
}

#[derive(Debug, Serialize)]
struct PairwiseBlock {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct PermutationBlock {
    replicates: usize,
    seed: u64,
    scheme: diversity::SchemeKind,
    p_value: f64,
    exceedances: usize,
    /// F of the untransformed counts, which the permutations are compared to.
    f_observed: Option<f64>,
    f_observed_infinite: bool,
}

#[derive(Debug, Serialize)]
struct DiversityJson<'a> {
    schema: &'static str,
    version: &'static str,
    command: &'static str,
    config: ConfigEcho,
    n_locations: usize,
    n_species: usize,
    total_count: f64,
    i_total: f64,
    i_between: f64,
    i_within: f64,
    identity_gap: f64,
    f: Option<f64>,
    f_infinite: bool,
    chi2: f64,
    chi2_over_n: f64,
    pooled_gini_simpson: f64,
    pooled_shannon: f64,
    locations: Vec<LocationDiversity>,
    pairwise_dissimilarity: PairwiseBlock,
    permutation: Option<PermutationBlock>,
    warnings: &'a [String],
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then(|| round12(x))
}

fn permutation_block(summary: &PermutationSummary, f_observed: f64) -> PermutationBlock {
    PermutationBlock {
        replicates: summary.replicates,
        seed: summary.seed,
        scheme: summary.scheme.clone(),
        p_value: round12(summary.p_value),
        exceedances: summary.exceedances,
        f_observed: finite_or_none(f_observed),
        f_observed_infinite: f_observed.is_infinite(),
    }
}

/// Permutation test on the untransformed counts.
fn permute(cfg: &AnalysisConfig, prep: &Prepared, replicates: usize, warnings: &mut Vec<String>) -> Result<diversity::DiversityReport> {
    let raw_pd = profiles(&prep.raw, cfg.weight_mode).context(|| "computing raw profiles".into())?;
    let mut scratch = Vec::new();
    let q = analysis_metric(cfg, &raw_pd, &mut scratch)?;
    let scheme = match cfg.scheme {
        Scheme::Individuals => PermutationScheme::Individuals,
        Scheme::Groups => PermutationScheme::GroupLabels(
            prep.groups
                .clone()
                .ok_or_else(|| CliError::Config("--scheme groups needs --metadata and --group-column".into()))?,
        ),
    };
    if !cfg.transform.is_identity() {
        warnings.push("permutation test uses the untransformed counts".into());
    }
    let opts = PermutationOptions {
        replicates,
        seed: cfg.seed,
        scheme,
        weight_mode: cfg.weight_mode,
        f_dims: cfg.f_dims,
        threads: None,
    };
    diversity::permutation_test(&prep.raw, &q, &opts).context(|| "permutation test".into())
}

pub fn run_diversity(cfg: &AnalysisConfig) -> Result<Files> {
    let mut prep = prepare(cfg)?;
    let mut warnings = std::mem::take(&mut prep.warnings);
    let pd = &prep.pd;
    let q = analysis_metric(cfg, pd, &mut warnings)?;
    let report = diversity::decompose(pd, &q).context(|| "diversity decomposition".into())?;
    let chi2 = diversity::chi2(&prep.table).context(|| "chi-squared statistic".into())?;
    let pooled = classical_indices(&pd.mean_profile());
    let locations = (0..pd.n_locations())
        .map(|l| {
            let ci = classical_indices(&pd.x.row(l).transpose());
            LocationDiversity {
                label: pd.location_labels[l].clone(),
                weight: round12(pd.w[l]),
                h: round12(report.per_location_h[l]),
                gini_simpson: round12(ci.gini_simpson),
                shannon: round12(ci.shannon),
            }
        })
        .collect();
    let permutation = match cfg.permutations {
        Some(r) => {
            let perm = permute(cfg, &prep, r, &mut warnings)?;
            let summary = perm.permutation.as_ref().expect("permutation summary present");
            Some(permutation_block(summary, perm.f))
        }
        None => None,
    };
    let json = DiversityJson {
        schema: DIVERSITY_SCHEMA,
        version: VERSION,
        command: "diversity",
        config: cfg.echo(),
        n_locations: pd.n_locations(),
        n_species: pd.n_species(),
        total_count: round12(pd.total),
        i_total: round12(report.i_total),
        i_between: round12(report.i_between),
        i_within: round12(report.i_within),
        identity_gap: round12(report.i_total - report.i_between - report.i_within),
        f: finite_or_none(report.f),
        f_infinite: report.f_infinite,
        chi2: round12(chi2),
        chi2_over_n: round12(chi2 / prep.table.total()),
        pooled_gini_simpson: round12(pooled.gini_simpson),
        pooled_shannon: round12(pooled.shannon),
        locations,
        pairwise_dissimilarity: PairwiseBlock {
            labels: pd.location_labels.clone(),
            values: report.pairwise_diss.iter().map(|r| round_all(r.iter().copied())).collect(),
        },
        permutation,
        warnings: &warnings,
    };
    Ok(vec![("report.json".into(), json_string(&json))])
}

#[derive(Debug, Serialize)]
struct FtestJson<'a> {
    schema: &'static str,
    version: &'static str,
    command: &'static str,
    config: ConfigEcho,
    n_units: usize,
    total_count: f64,
    i_between: f64,
    i_within: f64,
    f_dims: Option<usize>,
    permutation: PermutationBlock,
    warnings: &'a [String],
}

/// Summary line printed by the `ftest` subcommand.
pub struct FtestOutcome {
    pub files: Files,
    pub f: f64,
    pub p_value: f64,
    pub replicates: usize,
}

pub fn run_ftest(cfg: &AnalysisConfig) -> Result<FtestOutcome> {
    let replicates = cfg
        .permutations
        .ok_or_else(|| CliError::Config("ftest needs --permutations".into()))?;
    let mut prep = prepare(cfg)?;
    let mut warnings = std::mem::take(&mut prep.warnings);
    let report = permute(cfg, &prep, replicates, &mut warnings)?;
    let summary = report.permutation.clone().expect("permutation summary present");
    let json = FtestJson {
        schema: FTEST_SCHEMA,
        version: VERSION,
        command: "ftest",
        config: cfg.echo(),
        n_units: report.n_locations,
        total_count: round12(report.total_count),
        i_between: round12(report.i_between),
        i_within: round12(report.i_within),
        f_dims: cfg.f_dims,
        permutation: permutation_block(&summary, report.f),
        warnings: &warnings,
    };
    Ok(FtestOutcome {
        files: vec![("report.json".into(), json_string(&json))],
        f: report.f,
        p_value: summary.p_value,
        replicates,
    })
}

/// `tree cov`, `tree distances`: a leaf-labelled square matrix.
pub fn tree_matrix_csv(t: &PhyloTree, distances: bool) -> Result<String> {
    let tm = tree::tree_metrics(t).context(|| "computing tree matrices".into())?;
    let m = if distances { &tm.delta } else { &tm.sigma };
    Ok(square_csv("leaf", &tm.leaf_order, &tm.leaf_order, m))
}

/// `tree eigs`: eigenpairs of the covariance with their root-subtree
/// support, one row per eigenvector.
pub fn tree_eigs_csv(t: &PhyloTree) -> Result<String> {
    let tm = tree::tree_metrics(t).context(|| "computing tree covariance".into())?;
    let report = tree::sigma_eigen_report(t, &tm).context(|| "eigendecomposition".into())?;
    let mut header = vec!["axis".to_string(), "eigenvalue".into(), "root_subtrees".into()];
    header.extend(tm.leaf_order.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);
    let v = &report.spectral.eigenvectors;
    for j in 0..v.ncols() {
        let support: Vec<String> = report.supports[j].iter().map(|g| (g + 1).to_string()).collect();
        let mut fields = vec![
            (j + 1).to_string(),
            metricord::format_number(report.spectral.eigenvalues[j]),
            support.join(";"),
        ];
        fields.extend(v.column(j).iter().map(|&x| metricord::format_number(x)));
        csv.row(fields);
    }
    Ok(csv.into_string())
}

pub fn graph_laplacian_csv(g: &Graph, kind: LaplacianKind) -> Result<String> {
    let l = graph::laplacian(g, kind).context(|| "building Laplacian".into())?;
    Ok(square_csv("vertex", g.labels(), g.labels(), &l))
}

#[derive(Debug, Serialize)]
struct AutocorrelationJson {
    version: &'static str,
    statistic: &'static str,
    value: f64,
    double_sum: f64,
    quadratic: f64,
    n_vertices: usize,
    total_weight: f64,
    variance: graph::VarianceDecomposition,
}

/// Values ordered like the graph's vertices.
pub fn vertex_values(g: &Graph, values: &[(String, f64)]) -> Result<Vector> {
    let mut out = vec![None; g.n_vertices()];
    for (label, v) in values {
        let i = g
            .labels()
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| CliError::Config(format!("value given for unknown vertex {label:?}")))?;
        if out[i].replace(*v).is_some() {
            return Err(CliError::Config(format!("vertex {label:?} has two values")));
        }
    }
    out.iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| CliError::Config(format!("no value for vertex {:?}", g.labels()[i]))))
        .collect::<Result<Vec<f64>>>()
        .map(Vector::from_vec)
}

pub fn autocorrelation_json(g: &Graph, y: &Vector, moran: bool) -> Result<String> {
    let (name, stat) = if moran {
        ("moran_i", graph::moran_i(y, g).context(|| "Moran's I".into())?)
    } else {
        ("geary_c", graph::geary_c(y, g).context(|| "Geary's c".into())?)
    };
    let mut variance = graph::variance_decomposition(y, g).context(|| "variance decomposition".into())?;
    variance.total = round12(variance.total);
    variance.laplacian_part = round12(variance.laplacian_part);
    variance.adjacency_part = round12(variance.adjacency_part);
    Ok(json_string(&AutocorrelationJson {
        version: VERSION,
        statistic: name,
        value: round12(stat.value),
        double_sum: round12(stat.double_sum),
        quadratic: round12(stat.quadratic),
        n_vertices: g.n_vertices(),
        total_weight: round12(g.total_weight()),
        variance,
    }))
}

/// Labels and values of a coordinates CSV written by `ordinate`.
pub fn read_coordinates(path: &Path) -> Result<(Vec<String>, Matrix)> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let width = rdr
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .len()
        .saturating_sub(1);
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        labels.push(record[0].to_string());
        for cell in record.iter().skip(1) {
            values.push(cell.parse::<f64>().map_err(|_| {
                CliError::Config(format!("{}: row {}: cannot parse {cell:?}", path.display(), i + 2))
            })?);
        }
    }
    Ok((labels.clone(), Matrix::from_row_slice(labels.len(), width, &values)))
}

pub struct PlotConfig {
    /// Directory holding `coordinates.csv` and `species_coordinates.csv`.
    pub ordination_dir: std::path::PathBuf,
    /// Table preparation for ellipses and group shapes; must match the
    /// configuration the ordination was run with.
    pub analysis: Option<AnalysisConfig>,
    pub ellipses: bool,
    pub species_layer: bool,
    /// Zero-based axes to draw.
    pub axes: (usize, usize),
}

pub fn run_plot(cfg: &PlotConfig) -> Result<String> {
    use crate::plot::{ellipse_for_location, render_svg, PlotData, PlotPoint};

    let (loc_labels, loc) = read_coordinates(&cfg.ordination_dir.join("coordinates.csv"))?;
    let (sp_labels, sp) = read_coordinates(&cfg.ordination_dir.join("species_coordinates.csv"))?;
    let (a, b) = cfg.axes;
    if loc.ncols() <= a.max(b) || a == b {
        return Err(CliError::Config(format!(
            "cannot draw axes {} and {}: the ordination has {} axes",
            a + 1,
            b + 1,
            loc.ncols()
        )));
    }
    let prep = cfg.analysis.as_ref().map(prepare).transpose()?;
    let groups: Option<Vec<String>> = match (&prep, &cfg.analysis) {
        (Some(p), Some(ac)) if ac.pool_groups => Some(p.pd.location_labels.clone()),
        (Some(p), _) => p.groups.clone(),
        _ => None,
    };
    if let (Some(p), true) = (&prep, groups.is_some() || cfg.ellipses) {
        if p.pd.location_labels != loc_labels {
            return Err(CliError::Config(
                "table locations do not match coordinates.csv; use the ordination's table options".into(),
            ));
        }
    }
    let locations = (0..loc.nrows())
        .map(|i| PlotPoint {
            label: loc_labels[i].clone(),
            x: loc[(i, a)],
            y: loc[(i, b)],
            group: groups.as_ref().map(|g| g[i].clone()),
        })
        .collect();
    let species = if cfg.species_layer {
        (0..sp.nrows())
            .map(|s| PlotPoint {
                label: sp_labels[s].clone(),
                x: sp[(s, a)],
                y: sp[(s, b)],
                group: None,
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut ellipses = Vec::new();
    if cfg.ellipses {
        let p = prep
            .as_ref()
            .ok_or_else(|| CliError::Config("ellipses need --table".into()))?;
        if p.pd.species_labels != sp_labels {
            return Err(CliError::Config(
                "table species do not match species_coordinates.csv".into(),
            ));
        }
        let sp2 = Matrix::from_fn(sp.nrows(), 2, |s, j| sp[(s, if j == 0 { a } else { b })]);
        for i in 0..loc.nrows() {
            let x = p.pd.x.row(i).transpose();
            let e = ellipse_for_location(&sp2, &x, [loc[(i, a)], loc[(i, b)]])
                .context(|| format!("ellipse for {}", loc_labels[i]))?;
            ellipses.push(e);
        }
    }
    Ok(render_svg(&PlotData {
        locations,
        species,
        ellipses,
        x_label: format!("Axis {}", a + 1),
        y_label: format!("Axis {}", b + 1),
    }))
}
