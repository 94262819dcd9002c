use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metricord::contingency::{Transform, WeightMode};
use metricord::graph::{Graph, LaplacianKind};
use metricord_cli::config::parse_weight_mode;
use metricord_cli::error::Context;
use metricord_cli::pipeline::{self, PlotConfig};
use metricord_cli::{AnalysisConfig, CliError, Method, MetricSpec, Result, Scheme};

/// Generalized PCA with tree- and graph-derived metrics.
///
/// Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
/// failure. METRICORD_THREADS caps the permutation thread pool.
#[derive(Debug, Parser)]
#[command(name = "metricord", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ordinate a table; writes coordinates, species coordinates,
    /// eigenvalues and report.json into --out.
    Ordinate {
        #[command(flatten)]
        table: TableArgs,
        #[command(flatten)]
        metric: MetricArgs,
        /// Retained axes (default: min(L - 1, S, rank)).
        #[arg(long)]
        dims: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Diversity decomposition I_T = I_B + I_W, optionally with a
    /// permutation p-value for F; writes report.json into --out.
    Diversity {
        #[command(flatten)]
        table: TableArgs,
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        perm: PermArgs,
        #[arg(long)]
        permutations: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Permutation F test between locations (or metadata groups).
    Ftest {
        #[command(flatten)]
        table: TableArgs,
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        perm: PermArgs,
        #[arg(long, default_value_t = 999)]
        permutations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tree-derived matrices.
    Tree {
        #[command(subcommand)]
        what: TreeCommand,
    },
    /// Graph Laplacians and spatial autocorrelation.
    Graph {
        #[command(subcommand)]
        what: GraphCommand,
    },
    /// Draw an ordination as SVG.
    Plot {
        /// Output directory of `ordinate`.
        #[arg(long)]
        ordination: PathBuf,
        /// Table used for ellipses; pass the ordination's table options too.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        species_as_rows: bool,
        #[arg(long)]
        pseudocount: Option<f64>,
        #[arg(long)]
        log1p: bool,
        #[arg(long, default_value = "abundance", value_parser = parse_weight_mode)]
        weights: WeightMode,
        #[arg(long)]
        metadata: Option<PathBuf>,
        #[arg(long)]
        group_column: Option<String>,
        #[arg(long)]
        pool_groups: bool,
        /// Draw one ellipse per location (needs --table).
        #[arg(long)]
        ellipses: bool,
        /// Leave out the species points.
        #[arg(long)]
        no_species: bool,
        /// One-based axes to draw, e.g. 1,2.
        #[arg(long, default_value = "1,2")]
        axes: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Abundance table (TSV, or CSV by extension); locations as rows.
    #[arg(long)]
    table: PathBuf,
    /// The table has species as rows.
    #[arg(long)]
    species_as_rows: bool,
    /// Add this to every count before analysis.
    #[arg(long)]
    pseudocount: Option<f64>,
    /// Apply log(1 + x) to the counts (after any pseudocount).
    #[arg(long)]
    log1p: bool,
    /// Location weights: abundance (row sums) or uniform.
    #[arg(long, default_value = "abundance", value_parser = parse_weight_mode)]
    weights: WeightMode,
    /// Sample metadata; first column holds location labels.
    #[arg(long)]
    metadata: Option<PathBuf>,
    #[arg(long)]
    group_column: Option<String>,
    /// Sum counts within metadata groups before profiling.
    #[arg(long)]
    pool_groups: bool,
}

#[derive(Debug, Args)]
struct MetricArgs {
    #[arg(long, default_value = "gpca")]
    method: Method,
    /// identity | tree | inv-tree | tree-laplacian-heat:ALPHA |
    /// graph-heat:ALPHA | custom
    #[arg(long, default_value = "identity")]
    metric: MetricSpec,
    /// Newick tree whose leaves are the species.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Species graph as an edge list.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Labelled square matrix (squared distances for dpcoa).
    #[arg(long)]
    metric_matrix: Option<PathBuf>,
    /// Length for tree edges written without one.
    #[arg(long)]
    default_branch_length: Option<f64>,
    /// Reject tree leaves or vertices absent from the table.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct PermArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// individuals: reassign counted units; groups: shuffle metadata groups.
    #[arg(long, default_value = "individuals")]
    scheme: Scheme,
    /// Compute F inside the leading k ordination axes.
    #[arg(long)]
    f_dims: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum TreeCommand {
    /// Brownian covariance of the leaves.
    Cov(TreeArgs),
    /// Patristic distances between leaves.
    Distances(TreeArgs),
    /// Eigenpairs of the covariance with root-subtree supports.
    Eigs(TreeArgs),
}

#[derive(Debug, Args)]
struct TreeArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    default_branch_length: Option<f64>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Raw,
    RowStandardized,
    SymmetricNormalized,
}

#[derive(Debug, Subcommand)]
enum GraphCommand {
    Laplacian {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "raw")]
        kind: KindArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moran's I of per-vertex values.
    Moran(ValueArgs),
    /// Geary's c of per-vertex values.
    Geary(ValueArgs),
}

#[derive(Debug, Args)]
struct ValueArgs {
    #[arg(long)]
    graph: PathBuf,
    /// `vertex,value` rows with a header.
    #[arg(long)]
    values: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn analysis_config(table: &TableArgs, metric: &MetricArgs, out: &Path) -> AnalysisConfig {
    AnalysisConfig {
        table: table.table.clone(),
        tree: metric.tree.clone(),
        graph: metric.graph.clone(),
        metric_matrix: metric.metric_matrix.clone(),
        metadata: table.metadata.clone(),
        group_column: table.group_column.clone(),
        method: metric.method,
        metric: metric.metric,
        transform: Transform {
            pseudocount: table.pseudocount,
            log1p: table.log1p,
        },
        weight_mode: table.weights,
        species_as_rows: table.species_as_rows,
        strict: metric.strict,
        default_branch_length: metric.default_branch_length,
        pool_groups: table.pool_groups,
        out_dir: out.to_path_buf(),
        ..Default::default()
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => metricord_cli::output::write_text(path, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn parse_axes(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split(',').collect();
    let parse = |t: &str| t.trim().parse::<usize>().ok().filter(|&v| v >= 1);
    match parts.as_slice() {
        [a, b] => match (parse(a), parse(b)) {
            (Some(a), Some(b)) => Ok((a - 1, b - 1)),
            _ => Err(CliError::Config(format!("bad --axes {s:?}"))),
        },
        _ => Err(CliError::Config(format!("bad --axes {s:?}"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ordinate { table, metric, dims, out } => {
            let cfg = AnalysisConfig {
                dims,
                ..analysis_config(&table, &metric, &out)
            };
            let files = pipeline::run_ordination(&cfg)?;
            pipeline::write_files(&out, &files)
        }
        Command::Diversity { table, metric, perm, permutations, out } => {
            let cfg = AnalysisConfig {
                permutations,
                seed: perm.seed,
                scheme: perm.scheme,
                f_dims: perm.f_dims,
                ..analysis_config(&table, &metric, &out)
            };
            let files = pipeline::run_diversity(&cfg)?;
            pipeline::write_files(&out, &files)
        }
        Command::Ftest { table, metric, perm, permutations, out } => {
            let cfg = AnalysisConfig {
                permutations: Some(permutations),
                seed: perm.seed,
                scheme: perm.scheme,
                f_dims: perm.f_dims,
                ..analysis_config(&table, &metric, &out)
            };
            let outcome = pipeline::run_ftest(&cfg)?;
            pipeline::write_files(&out, &outcome.files)?;
            println!(
                "F = {}, p = {} ({} permutations)",
                metricord::format_number(outcome.f),
                metricord::format_number(outcome.p_value),
                outcome.replicates
            );
            Ok(())
        }
        Command::Tree { what } => {
            let (args, text) = match what {
                TreeCommand::Cov(a) => {
                    let t = pipeline::load_tree(&a.tree, a.default_branch_length)?;
                    let text = pipeline::tree_matrix_csv(&t, false)?;
                    (a, text)
                }
                TreeCommand::Distances(a) => {
                    let t = pipeline::load_tree(&a.tree, a.default_branch_length)?;
                    let text = pipeline::tree_matrix_csv(&t, true)?;
                    (a, text)
                }
                TreeCommand::Eigs(a) => {
                    let t = pipeline::load_tree(&a.tree, a.default_branch_length)?;
                    let text = pipeline::tree_eigs_csv(&t)?;
                    (a, text)
                }
            };
            emit(args.out.as_deref(), &text)
        }
        Command::Graph { what } => match what {
            GraphCommand::Laplacian { graph, kind, out } => {
                let g = Graph::load_edge_list(&graph).context(|| format!("reading graph {}", graph.display()))?;
                let kind = match kind {
                    KindArg::Raw => LaplacianKind::Raw,
                    KindArg::RowStandardized => LaplacianKind::RowStandardized,
                    KindArg::SymmetricNormalized => LaplacianKind::SymmetricNormalized,
                };
                emit(out.as_deref(), &pipeline::graph_laplacian_csv(&g, kind)?)
            }
            GraphCommand::Moran(a) => autocorrelation(&a, true),
            GraphCommand::Geary(a) => autocorrelation(&a, false),
        },
        Command::Plot {
            ordination,
            table,
            species_as_rows,
            pseudocount,
            log1p,
            weights,
            metadata,
            group_column,
            pool_groups,
            ellipses,
            no_species,
            axes,
            out,
        } => {
            let analysis = table.map(|table| AnalysisConfig {
                table,
                metadata,
                group_column,
                pool_groups,
                species_as_rows,
                transform: Transform { pseudocount, log1p },
                weight_mode: weights,
                ..Default::default()
            });
            let svg = pipeline::run_plot(&PlotConfig {
                ordination_dir: ordination,
                analysis,
                ellipses,
                species_layer: !no_species,
                axes: parse_axes(&axes)?,
            })?;
            metricord_cli::output::write_text(&out, &svg)
        }
    }
}

fn autocorrelation(a: &ValueArgs, moran: bool) -> Result<()> {
    let g = Graph::load_edge_list(&a.graph).context(|| format!("reading graph {}", a.graph.display()))?;
    let values = metricord_cli::inputs::read_values(&a.values)?;
    let y = pipeline::vertex_values(&g, &values)?;
    emit(a.out.as_deref(), &pipeline::autocorrelation_json(&g, &y, moran)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
