//! Golden CLI cases shared by the golden and acceptance targets.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn demo(name: &str) -> String {
    workspace_root().join("data/demo").join(name).display().to_string()
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// One CLI invocation; `{out}` in an argument is replaced by the case's
/// output path, `{root}` by the run's output root.
pub struct Case {
    pub name: &'static str,
    pub args: Vec<String>,
}

fn case(name: &'static str, args: &[&str]) -> Case {
    let args = args
        .iter()
        .map(|a| match a.strip_prefix('@') {
            Some(file) => demo(file),
            None => a.to_string(),
        })
        .collect();
    Case { name, args }
}

/// Cases in run order; `plot` reads the output of `ordinate_dpcoa`.
pub fn cases() -> Vec<Case> {
    vec![
        case("ordinate_mini_invtree", &["ordinate", "--table", "@mini_table.tsv", "--tree", "@mini_tree.nwk", "--metric", "inv-tree", "--dims", "2", "--out", "{out}"]),
        case("ordinate_ca", &["ordinate", "--table", "@table.tsv", "--method", "ca", "--out", "{out}"]),
        case("ordinate_nsca", &["ordinate", "--table", "@table.tsv", "--method", "nsca", "--dims", "3", "--out", "{out}"]),
        case("ordinate_dpcoa", &["ordinate", "--table", "@table.tsv", "--tree", "@tree.nwk", "--method", "dpcoa", "--metric", "tree", "--out", "{out}"]),
        case("ordinate_graph_heat", &["ordinate", "--table", "@table.tsv", "--graph", "@graph.txt", "--metric", "graph-heat:0.5", "--dims", "3", "--out", "{out}"]),
        case("ordinate_pooled", &["ordinate", "--table", "@table.tsv", "--tree", "@tree.nwk", "--metric", "tree", "--metadata", "@metadata.tsv", "--group-column", "patient", "--pool-groups", "--out", "{out}"]),
        case("diversity_dpcoa", &["diversity", "--table", "@table.tsv", "--tree", "@tree.nwk", "--method", "dpcoa", "--metric", "tree", "--permutations", "199", "--seed", "7", "--out", "{out}"]),
        case("diversity_uniform_log", &["diversity", "--table", "@table.tsv", "--weights", "uniform", "--log1p", "--out", "{out}"]),
        case("ftest_groups", &["ftest", "--table", "@table.tsv", "--tree", "@tree.nwk", "--metric", "tree", "--metadata", "@metadata.tsv", "--group-column", "patient", "--scheme", "groups", "--permutations", "199", "--seed", "3", "--out", "{out}"]),
        case("ftest_fdims", &["ftest", "--table", "@table.tsv", "--tree", "@tree.nwk", "--metric", "tree", "--f-dims", "2", "--permutations", "199", "--seed", "11", "--out", "{out}"]),
        case("tree_cov", &["tree", "cov", "--tree", "@mini_tree.nwk", "--out", "{out}/cov.csv"]),
        case("tree_distances", &["tree", "distances", "--tree", "@mini_tree.nwk", "--out", "{out}/distances.csv"]),
        case("tree_eigs", &["tree", "eigs", "--tree", "@tree.nwk", "--out", "{out}/eigs.csv"]),
        case("graph_laplacian", &["graph", "laplacian", "--graph", "@graph.txt", "--kind", "symmetric-normalized", "--out", "{out}/laplacian.csv"]),
        case("graph_moran", &["graph", "moran", "--graph", "@graph.txt", "--values", "@values.csv", "--out", "{out}/moran.json"]),
        case("graph_geary", &["graph", "geary", "--graph", "@graph.txt", "--values", "@values.csv", "--out", "{out}/geary.json"]),
        case("plot_dpcoa", &["plot", "--ordination", "{root}/ordinate_dpcoa", "--table", "@table.tsv", "--metadata", "@metadata.tsv", "--group-column", "patient", "--ellipses", "--out", "{out}/plot.svg"]),
    ]
}

/// Run every case under `root` with the given thread cap.
pub fn run_all(root: &Path, threads: &str) {
    for c in cases() {
        let out = root.join(c.name);
        let args: Vec<String> = c
            .args
            .iter()
            .map(|a| {
                a.replace("{out}", &out.display().to_string())
                    .replace("{root}", &root.display().to_string())
            })
            .collect();
        let status = Command::new(env!("CARGO_BIN_EXE_metricord"))
            .args(&args)
            .env("METRICORD_THREADS", threads)
            .output()
            .expect("run metricord");
        assert!(
            status.status.success(),
            "case {} failed: {}",
            c.name,
            String::from_utf8_lossy(&status.stderr)
        );
    }
}

/// Relative paths of all files below `dir`, sorted.
pub fn files_below(dir: &Path) -> Vec<PathBuf> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
        let Ok(entries) = std::fs::read_dir(dir) else { return };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                out.push(p.strip_prefix(base).unwrap().to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

/// Files that differ between two trees, or exist in only one.
pub fn differing_files(a: &Path, b: &Path) -> Vec<PathBuf> {
    let fa = files_below(a);
    let fb = files_below(b);
    let mut diff: Vec<PathBuf> = fa.iter().filter(|f| !fb.contains(f)).cloned().collect();
    diff.extend(fb.iter().filter(|f| !fa.contains(f)).cloned());
    for f in fa.iter().filter(|f| fb.contains(f)) {
        if std::fs::read(a.join(f)).unwrap() != std::fs::read(b.join(f)).unwrap() {
            diff.push(f.clone());
        }
    }
    diff
}
