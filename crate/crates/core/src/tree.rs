//! Rooted phylogenies: Newick I/O, patristic distances `delta`, root-to-leaf
//! depths `t`, the Brownian covariance `sigma` and the weighted tree
//! Laplacian.
//!
//! Leaves are always ordered as they appear left to right in the Newick
//! text; that order indexes the rows and columns of every leaf matrix.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SpectralDecomposition, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Length of the edge to the parent; `None` only for the root.
    pub branch_length: Option<f64>,
    pub label: Option<String>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Immutable rooted tree. Nodes are stored in preorder, so every parent has
/// a smaller index than its children.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyloTree {
    nodes: Vec<Node>,
    leaves: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Length substituted for edges written without one. Missing lengths
    /// are an error when this is `None`.
    pub default_branch_length: Option<f64>,
}

impl PhyloTree {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, ParseOptions::default())
    }

    pub fn parse_with(text: &str, opts: ParseOptions) -> Result<Self> {
        Parser::new(text).run(opts)
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf node ids in Newick order.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_labels(&self) -> Vec<String> {
        self.leaves
            .iter()
            .map(|&i| self.nodes[i].label.clone().expect("leaves are labelled"))
            .collect()
    }

    fn node_name(&self, id: usize) -> String {
        match &self.nodes[id].label {
            Some(l) => l.clone(),
            None => format!("#{id}"),
        }
    }

    pub fn branch_length(&self, id: usize) -> f64 {
        self.nodes[id].branch_length.unwrap_or(0.0)
    }

    /// Distance from the root, accumulated root-first.
    pub fn depths(&self) -> Vec<f64> {
        let mut depth = vec![0.0; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate().skip(1) {
            let parent = node.parent.expect("non-root has a parent");
            depth[id] = depth[parent] + self.branch_length(id);
        }
        depth
    }

    /// Leaf positions (indices into [`leaves`](Self::leaves)) below each node.
    pub fn leaf_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.nodes.len()];
        for (pos, &leaf) in self.leaves.iter().enumerate() {
            sets[leaf].push(pos);
        }
        for id in (1..self.nodes.len()).rev() {
            let parent = self.nodes[id].parent.expect("non-root has a parent");
            let below = std::mem::take(&mut sets[id]);
            sets[parent].extend(below.iter().copied());
            sets[id] = below;
        }
        for s in &mut sets {
            s.sort_unstable();
        }
        sets
    }

    /// Newick text with branch lengths written to 12 significant digits.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.write_node(self.root(), &mut out);
        out.push(';');
        out
    }

    fn write_node(&self, id: usize, out: &mut String) {
        // Explicit stack: (node, next child index to emit).
        let mut stack: Vec<(usize, usize)> = vec![(id, 0)];
        while let Some((node, next)) = stack.pop() {
            let n = &self.nodes[node];
            if n.is_leaf() {
                self.write_tail(node, out);
                continue;
            }
            if next == 0 {
                out.push('(');
            } else if next < n.children.len() {
                out.push(',');
            }
            if next < n.children.len() {
                stack.push((node, next + 1));
                stack.push((n.children[next], 0));
            } else {
                out.push(')');
                self.write_tail(node, out);
            }
        }
    }

    fn write_tail(&self, id: usize, out: &mut String) {
        let n = &self.nodes[id];
        if let Some(label) = &n.label {
            out.push_str(&quote_label(label));
        }
        if let Some(len) = n.branch_length {
            let _ = write!(out, ":{}", crate::format_number(len));
        }
    }

    /// Generate a random binary tree with leaves labelled `s0, s1, ...` in
    /// Newick order. Ultrametric trees have every leaf at the same depth.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n_leaves: usize, ultrametric: bool) -> Self {
        assert!(n_leaves >= 2, "random trees need at least two leaves");
        let mut text = String::new();
        let mut next_label = 0usize;
        let height = 1.0;
        random_subtree(rng, n_leaves, height, ultrametric, &mut next_label, &mut text);
        text.push(';');
        Self::parse(&text).expect("generated Newick is valid")
    }
}

fn random_subtree<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    height: f64,
    ultrametric: bool,
    next_label: &mut usize,
    out: &mut String,
) {
    // `height` is this node's height above the leaves when ultrametric.
    if n == 1 {
        let _ = write!(out, "s{}", *next_label);
        *next_label += 1;
        return;
    }
    let left = rng.random_range(1..n);
    out.push('(');
    for (i, size) in [left, n - left].into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let (child_height, length) = if ultrametric {
            let h = if size == 1 { 0.0 } else { height * rng.random_range(0.1..0.9) };
            (h, height - h)
        } else {
            (0.0, rng.random_range(0.05..1.0))
        };
        random_subtree(rng, size, child_height, ultrametric, next_label, out);
        let _ = write!(out, ":{}", length);
    }
    out.push(')');
}

fn quote_label(label: &str) -> String {
    let plain = !label.is_empty()
        && label
            .chars()
            .all(|c| !c.is_whitespace() && !"()[]':;,".contains(c));
    if plain {
        label.to_string()
    } else {
        format!("'{}'", label.replace('\'', "''"))
    }
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            text,
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            position: self.pos,
            reason: reason.into(),
        }
    }

    fn skip_blank(&mut self) -> Result<()> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.peek() == Some(b'[') {
                match self.text[self.pos..].find(']') {
                    Some(end) => self.pos += end + 1,
                    None => return Err(self.err("unterminated comment")),
                }
            } else {
                return Ok(());
            }
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn label(&mut self) -> Result<Option<String>> {
        self.skip_blank()?;
        if self.peek() == Some(b'\'') {
            self.pos += 1;
            let mut out = String::new();
            loop {
                let rest = &self.text[self.pos..];
                match rest.find('\'') {
                    None => return Err(self.err("unterminated quoted label")),
                    Some(i) => {
                        out.push_str(&rest[..i]);
                        self.pos += i + 1;
                        if self.peek() == Some(b'\'') {
                            out.push('\'');
                            self.pos += 1;
                        } else {
                            return Ok(Some(out));
                        }
                    }
                }
            }
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() || b"()[]':;,".contains(&c) {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            Ok(None)
        } else {
            Ok(Some(self.text[start..self.pos].to_string()))
        }
    }

    fn length(&mut self) -> Result<Option<f64>> {
        self.skip_blank()?;
        if self.peek() != Some(b':') {
            return Ok(None);
        }
        self.pos += 1;
        self.skip_blank()?;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || b"+-.eE".contains(&c) {
                self.pos += 1;
            } else {
                break;
            }
        }
        let token = &self.text[start..self.pos];
        let value: f64 = token.parse().map_err(|_| Error::Parse {
            position: start,
            reason: format!("invalid branch length {token:?}"),
        })?;
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Parse {
                position: start,
                reason: format!("branch length must be finite and nonnegative, got {token}"),
            });
        }
        Ok(Some(value))
    }

    fn run(mut self, opts: ParseOptions) -> Result<PhyloTree> {
        let mut nodes: Vec<Node> = Vec::new();
        let mut open: Vec<usize> = Vec::new();
        let mut finished_root = false;

        let new_node = |nodes: &mut Vec<Node>, parent: Option<usize>| -> usize {
            let id = nodes.len();
            nodes.push(Node {
                parent,
                children: Vec::new(),
                branch_length: None,
                label: None,
            });
            if let Some(p) = parent {
                nodes[p].children.push(id);
            }
            id
        };

        // Expecting the start of a node (after '(' or ',' or at the start).
        let mut expect_node = true;
        loop {
            self.skip_blank()?;
            let Some(c) = self.peek() else {
                return Err(self.err("unexpected end of input"));
            };
            if expect_node {
                if finished_root {
                    return Err(self.err("text after the tree"));
                }
                if c == b'(' {
                    self.pos += 1;
                    let id = new_node(&mut nodes, open.last().copied());
                    open.push(id);
                    continue;
                }
                let id = new_node(&mut nodes, open.last().copied());
                let at = self.pos;
                let label = self.label()?;
                if label.is_none() {
                    return Err(Error::Parse {
                        position: at,
                        reason: "leaf without a label".into(),
                    });
                }
                nodes[id].label = label;
                nodes[id].branch_length = self.length()?;
                if open.is_empty() {
                    finished_root = true;
                }
                expect_node = false;
                continue;
            }
            match c {
                b',' => {
                    if open.is_empty() {
                        return Err(self.err("',' outside parentheses"));
                    }
                    self.pos += 1;
                    expect_node = true;
                }
                b')' => {
                    let Some(id) = open.pop() else {
                        return Err(self.err("unbalanced ')'"));
                    };
                    self.pos += 1;
                    nodes[id].label = self.label()?;
                    nodes[id].branch_length = self.length()?;
                    if open.is_empty() {
                        finished_root = true;
                    }
                }
                b';' => {
                    if !open.is_empty() {
                        return Err(self.err("';' before all parentheses were closed"));
                    }
                    self.pos += 1;
                    self.skip_blank()?;
                    if self.pos != self.bytes.len() {
                        return Err(self.err("text after ';'"));
                    }
                    break;
                }
                _ => return Err(self.err(format!("unexpected character {:?}", c as char))),
            }
        }
        if nodes.is_empty() {
            return Err(self.err("empty tree"));
        }
        finalize(nodes, opts)
    }
}

fn finalize(mut nodes: Vec<Node>, opts: ParseOptions) -> Result<PhyloTree> {
    // The root edge length, if written, carries no information here.
    nodes[0].branch_length = None;
    let mut leaves = Vec::new();
    let mut seen = HashSet::new();
    for id in 0..nodes.len() {
        if id > 0 && nodes[id].branch_length.is_none() {
            match opts.default_branch_length {
                Some(len) => nodes[id].branch_length = Some(len),
                None => {
                    let name = nodes[id]
                        .label
                        .clone()
                        .unwrap_or_else(|| format!("internal #{id}"));
                    return Err(Error::MissingBranchLength { node: name });
                }
            }
        }
        if nodes[id].is_leaf() {
            let label = nodes[id].label.clone().expect("parser requires leaf labels");
            if !seen.insert(label.clone()) {
                return Err(Error::DuplicateLeafLabel(label));
            }
            leaves.push(id);
        }
    }
    Ok(PhyloTree { nodes, leaves })
}

/// Leaf-level quantities derived from a tree.
#[derive(Debug, Clone)]
pub struct TreeMetrics {
    /// Patristic distances between leaves.
    pub delta: Matrix,
    /// Root-to-leaf distances.
    pub t: Vector,
    /// Brownian covariance: shared root-path length of each leaf pair.
    pub sigma: Matrix,
    pub leaf_order: Vec<String>,
}

/// Largest `|2 sigma - (1 t^T + t 1^T - delta)|` entry.
pub fn covariance_identity_gap(delta: &Matrix, t: &Vector, sigma: &Matrix) -> f64 {
    let s = t.len();
    let mut worst = 0.0_f64;
    for i in 0..s {
        for j in 0..s {
            let rhs = t[i] + t[j] - delta[(i, j)];
            worst = worst.max((2.0 * sigma[(i, j)] - rhs).abs());
        }
    }
    worst
}

pub fn tree_metrics(tree: &PhyloTree) -> Result<TreeMetrics> {
    let s = tree.n_leaves();
    let depth = tree.depths();
    let sets = tree.leaf_sets();
    let leaves = tree.leaves();

    // Distance from each leaf up to each of its ancestors, summed leaf-first.
    let mut up: Vec<Vec<(usize, f64)>> = Vec::with_capacity(s);
    for &leaf in leaves {
        let mut chain = vec![(leaf, 0.0)];
        let mut acc = 0.0;
        let mut cur = leaf;
        while let Some(p) = tree.node(cur).parent {
            acc += tree.branch_length(cur);
            chain.push((p, acc));
            cur = p;
        }
        up.push(chain);
    }
    let up_to = |leaf_pos: usize, ancestor: usize| -> f64 {
        up[leaf_pos]
            .iter()
            .find(|(n, _)| *n == ancestor)
            .map(|(_, d)| *d)
            .expect("ancestor on the leaf's root path")
    };

    let mut sigma = Matrix::zeros(s, s);
    let mut delta = Matrix::zeros(s, s);
    let t = Vector::from_iterator(s, leaves.iter().map(|&l| depth[l]));
    for i in 0..s {
        sigma[(i, i)] = t[i];
    }
    for (u, node) in tree.nodes().iter().enumerate() {
        for (ci, &a) in node.children.iter().enumerate() {
            for &b in &node.children[ci + 1..] {
                for &x in &sets[a] {
                    for &y in &sets[b] {
                        sigma[(x, y)] = depth[u];
                        sigma[(y, x)] = depth[u];
                        let d = up_to(x, u) + up_to(y, u);
                        delta[(x, y)] = d;
                        delta[(y, x)] = d;
                    }
                }
            }
        }
    }

    let gap = covariance_identity_gap(&delta, &t, &sigma);
    let scale = t.iter().fold(1.0_f64, |a, &b| a.max(b));
    if gap > 1e-12 * scale {
        return Err(Error::Numeric(format!(
            "2*sigma deviates from 1t' + t1' - delta by {gap:.3e}"
        )));
    }
    Ok(TreeMetrics {
        delta,
        t,
        sigma,
        leaf_order: tree.leaf_labels(),
    })
}

/// A terminal bifurcation and the eigenvector that contrasts its two leaves.
#[derive(Debug, Clone)]
pub struct CherryContrast {
    /// Leaf positions of the two siblings.
    pub leaves: (usize, usize),
    /// Index of an eigenvector that is `+/-` on the cherry and ~0 elsewhere.
    pub eigenvector: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SigmaEigenReport {
    pub spectral: SpectralDecomposition,
    /// Leaf positions under each child of the root.
    pub root_subtrees: Vec<Vec<usize>>,
    /// For each eigenvector, the root subtrees carrying entries above
    /// `1e-8 * ||v||_inf`.
    pub supports: Vec<Vec<usize>>,
    pub cherries: Vec<CherryContrast>,
}

impl SigmaEigenReport {
    /// Every eigenvector is supported on exactly one root subtree.
    pub fn block_structure_holds(&self) -> bool {
        self.supports.iter().all(|s| s.len() == 1)
    }
}

/// Magnitude below which an eigenvector entry counts as zero, relative to
/// the vector's largest entry.
pub const SUPPORT_TOL: f64 = 1e-8;

pub fn sigma_eigen_report(tree: &PhyloTree, metrics: &TreeMetrics) -> Result<SigmaEigenReport> {
    let spectral = linalg::symmetric_eigen(&metrics.sigma)?;
    let sets = tree.leaf_sets();
    let root_subtrees: Vec<Vec<usize>> = tree
        .node(tree.root())
        .children
        .iter()
        .map(|&c| sets[c].clone())
        .collect();
    let s = tree.n_leaves();
    let mut owner = vec![usize::MAX; s];
    for (g, members) in root_subtrees.iter().enumerate() {
        for &m in members {
            owner[m] = g;
        }
    }

    let v = &spectral.eigenvectors;
    let supports = (0..v.ncols())
        .map(|j| {
            let col = v.column(j);
            let peak = col.amax();
            let mut groups: Vec<usize> = (0..s)
                .filter(|&i| col[i].abs() > SUPPORT_TOL * peak)
                .map(|i| owner[i])
                .collect();
            groups.sort_unstable();
            groups.dedup();
            groups
        })
        .collect();

    let mut cherries = Vec::new();
    for node in tree.nodes() {
        if node.children.len() == 2 && node.children.iter().all(|&c| tree.node(c).is_leaf()) {
            let a = sets[node.children[0]][0];
            let b = sets[node.children[1]][0];
            let hit = (0..v.ncols()).find(|&j| {
                let col = v.column(j);
                let peak = col.amax();
                let opposite = col[a] * col[b] < 0.0
                    && col[a].abs() > 0.5 * peak
                    && col[b].abs() > 0.5 * peak;
                opposite
                    && (0..s)
                        .filter(|&i| i != a && i != b)
                        .all(|i| col[i].abs() <= SUPPORT_TOL * peak)
            });
            cherries.push(CherryContrast {
                leaves: (a, b),
                eigenvector: hit,
            });
        }
    }

    Ok(SigmaEigenReport {
        spectral,
        root_subtrees,
        supports,
        cherries,
    })
}

/// Laplacian over all nodes (preorder) with edge weight `1 / length`.
pub fn tree_laplacian(tree: &PhyloTree) -> Result<Matrix> {
    let n = tree.len();
    let mut l = Matrix::zeros(n, n);
    for id in 1..n {
        let len = tree.branch_length(id);
        if len <= 0.0 {
            return Err(Error::ZeroBranchLength {
                node: tree.node_name(id),
            });
        }
        let p = tree.node(id).parent.expect("non-root has a parent");
        let w = 1.0 / len;
        l[(id, p)] -= w;
        l[(p, id)] -= w;
        l[(id, id)] += w;
        l[(p, p)] += w;
    }
    Ok(l)
}

/// Patristic distances between all nodes (preorder indexing).
pub fn all_node_distances(tree: &PhyloTree) -> Matrix {
    let n = tree.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for id in 1..n {
        let p = tree.node(id).parent.expect("non-root has a parent");
        let len = tree.branch_length(id);
        adj[id].push((p, len));
        adj[p].push((id, len));
    }
    let mut dist = Matrix::zeros(n, n);
    for src in 0..n {
        let mut stack = vec![(src, usize::MAX, 0.0)];
        while let Some((node, from, d)) = stack.pop() {
            dist[(src, node)] = d;
            for &(next, len) in &adj[node] {
                if next != from {
                    stack.push((next, node, d + len));
                }
            }
        }
    }
    dist
}

/// Candidates for the inverse of the leaf-restricted tree Laplacian.
///
/// The closed form is `c * gamma gamma^T - delta_S / 2` with
/// `c = 1 / (8 * 1^T delta_{S x I} 1)`, `gamma` the leaf rows of
/// `delta_T v` and `v = -1` on leaves, `+1` on internal nodes. The numeric
/// candidates are the leaf block of the pseudoinverse of `L` and the inverse
/// of the leaf-by-leaf principal submatrix of `L`. None of these is asserted
/// to equal another; the discrepancies are reported.
#[derive(Debug, Clone)]
pub struct LeafInverseDiagnostic {
    pub pinv_leaf_block: Matrix,
    pub submatrix_inverse: Matrix,
    pub closed_form: Matrix,
    pub delta_leaves: Matrix,
    pub closed_vs_pinv: f64,
    pub closed_vs_submatrix: f64,
    /// `max |delta_T^{-1} - (-L/2 + tau tau^T / (2 W))|` with
    /// `tau_i = 2 - deg(i)` and `W` the total branch length.
    pub distance_inverse_gap: f64,
}

pub fn leaf_laplacian_inverse_diagnostic(tree: &PhyloTree) -> Result<LeafInverseDiagnostic> {
    let l = tree_laplacian(tree)?;
    let n = tree.len();
    let leaves = tree.leaves();
    let s = leaves.len();
    let internal: Vec<usize> = (0..n).filter(|&i| !tree.node(i).is_leaf()).collect();

    let pinv = linalg::spectral_pinv(&l)?;
    let pinv_leaf_block = Matrix::from_fn(s, s, |i, j| pinv[(leaves[i], leaves[j])]);

    let l_ss = Matrix::from_fn(s, s, |i, j| l[(leaves[i], leaves[j])]);
    let submatrix_inverse = l_ss
        .try_inverse()
        .ok_or_else(|| Error::Numeric("leaf block of the Laplacian is singular".into()))?;

    let dist = all_node_distances(tree);
    let delta_leaves = Matrix::from_fn(s, s, |i, j| dist[(leaves[i], leaves[j])]);
    let v = Vector::from_iterator(
        n,
        (0..n).map(|i| if tree.node(i).is_leaf() { -1.0 } else { 1.0 }),
    );
    let gamma_all = &dist * &v;
    let gamma = Vector::from_iterator(s, leaves.iter().map(|&i| gamma_all[i]));
    let cross: f64 = leaves
        .iter()
        .flat_map(|&a| internal.iter().map(move |&b| (a, b)))
        .map(|(a, b)| dist[(a, b)])
        .sum();
    let c = 1.0 / (8.0 * cross);
    let closed_form = &gamma * gamma.transpose() * c - &delta_leaves * 0.5;

    let closed_vs_pinv = (&closed_form - &pinv_leaf_block).amax();
    let closed_vs_submatrix = (&closed_form - &submatrix_inverse).amax();

    let total: f64 = (1..n).map(|i| tree.branch_length(i)).sum();
    let tau = Vector::from_iterator(
        n,
        (0..n).map(|i| {
            let deg = tree.node(i).children.len() + usize::from(tree.node(i).parent.is_some());
            2.0 - deg as f64
        }),
    );
    let distance_inverse_gap = match dist.clone().try_inverse() {
        Some(inv) => {
            let bapat = &l * (-0.5) + &tau * tau.transpose() / (2.0 * total);
            (inv - bapat).amax()
        }
        None => f64::NAN,
    };

    Ok(LeafInverseDiagnostic {
        pinv_leaf_block,
        submatrix_inverse,
        closed_form,
        delta_leaves,
        closed_vs_pinv,
        closed_vs_submatrix,
        distance_inverse_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_smallest_tree() {
        let t = PhyloTree::parse("(a:1,b:1);").unwrap();
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.leaf_labels(), vec!["a", "b"]);
        assert_eq!(t.branch_length(t.leaves()[0]), 1.0);
        assert_eq!(t.branch_length(t.leaves()[1]), 1.0);
    }

    #[test]
    fn parses_internal_edge() {
        let t = PhyloTree::parse("((a:1,b:2):0.5,c:3);").unwrap();
        assert_eq!(t.leaf_labels(), vec!["a", "b", "c"]);
        let internal = t.node(0).children[0];
        assert_eq!(t.branch_length(internal), 0.5);
    }

    #[test]
    fn unbalanced_input_reports_end() {
        let text = "(a:1,b:1";
        match PhyloTree::parse(text) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, text.len()),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_length_and_duplicates() {
        assert!(matches!(
            PhyloTree::parse("(a:1,b);"),
            Err(Error::MissingBranchLength { .. })
        ));
        let t = PhyloTree::parse_with(
            "(a:1,b);",
            ParseOptions {
                default_branch_length: Some(0.25),
            },
        )
        .unwrap();
        assert_eq!(t.branch_length(t.leaves()[1]), 0.25);
        assert!(matches!(
            PhyloTree::parse("(a:1,a:1);"),
            Err(Error::DuplicateLeafLabel(_))
        ));
        assert!(matches!(PhyloTree::parse("(a:1,:1);"), Err(Error::Parse { .. })));
        assert!(matches!(PhyloTree::parse("(a:1,b:-1);"), Err(Error::Parse { .. })));
        assert!(matches!(PhyloTree::parse("(a:1,b:1);x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn quoted_labels_comments_and_internal_names() {
        let t = PhyloTree::parse("[c] ( 'x y':1 , 'it''s':2 )root:0.3 ;").unwrap();
        assert_eq!(t.leaf_labels(), vec!["x y", "it's"]);
        let again = PhyloTree::parse(&t.to_newick()).unwrap();
        assert_eq!(again.leaf_labels(), t.leaf_labels());
    }

    #[test]
    fn two_leaf_metrics() {
        let t = PhyloTree::parse("(a:1,b:1);").unwrap();
        let m = tree_metrics(&t).unwrap();
        assert_eq!(m.sigma, Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        assert_eq!(m.delta, Matrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]));
        assert_eq!(m.t.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn three_leaf_sigma() {
        let t = PhyloTree::parse("((a:1,b:1):1,c:2);").unwrap();
        let m = tree_metrics(&t).unwrap();
        let expected =
            Matrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(m.sigma, expected);
        assert!(covariance_identity_gap(&m.delta, &m.t, &m.sigma) == 0.0);
    }

    #[test]
    fn multifurcation_and_unary_nodes() {
        let t = PhyloTree::parse("((a:1,b:1,c:2):0.5,(d:1):1);").unwrap();
        let m = tree_metrics(&t).unwrap();
        assert_eq!(m.sigma[(0, 2)], 0.5);
        assert_eq!(m.delta[(0, 3)], 1.5 + 2.0);
    }

    #[test]
    fn block_report_on_three_leaves() {
        let t = PhyloTree::parse("((a:1,b:1):1,c:2);").unwrap();
        let m = tree_metrics(&t).unwrap();
        let r = sigma_eigen_report(&t, &m).unwrap();
        assert!(r.block_structure_holds());
        assert_eq!(r.root_subtrees, vec![vec![0, 1], vec![2]]);
        assert_eq!(r.cherries.len(), 1);
        assert!(r.cherries[0].eigenvector.is_some());
    }

    #[test]
    fn two_leaf_report_is_diagonal() {
        let t = PhyloTree::parse("(a:1,b:3);").unwrap();
        let m = tree_metrics(&t).unwrap();
        let r = sigma_eigen_report(&t, &m).unwrap();
        assert_eq!(r.supports, vec![vec![1], vec![0]]);
    }

    #[test]
    fn laplacian_weights() {
        let l = tree_laplacian(&PhyloTree::parse("(a:1,b:1);").unwrap()).unwrap();
        let expected =
            Matrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 1.0, 0.0, -1.0, 0.0, 1.0]);
        assert_eq!(l, expected);
        let l2 = tree_laplacian(&PhyloTree::parse("(a:2,b:2);").unwrap()).unwrap();
        assert_eq!(l2[(0, 1)], -0.5);
        assert!(matches!(
            tree_laplacian(&PhyloTree::parse("(a:0,b:2);").unwrap()),
            Err(Error::ZeroBranchLength { .. })
        ));
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = PhyloTree::random(&mut rng, 9, false);
        let l = tree_laplacian(&t).unwrap();
        let ones = Vector::from_element(t.len(), 1.0);
        assert!((&l * ones).amax() < 1e-12);
    }

    #[test]
    fn diagnostic_runs_and_uses_patristic_delta() {
        for text in ["(a:1,b:1);", "(a:1,b:1,c:1);", "((a:1,b:2):0.5,c:3);"] {
            let t = PhyloTree::parse(text).unwrap();
            let d = leaf_laplacian_inverse_diagnostic(&t).unwrap();
            let m = tree_metrics(&t).unwrap();
            assert!((&d.delta_leaves - &m.delta).amax() < 1e-14);
            assert!(d.closed_vs_pinv.is_finite());
            assert!(d.closed_vs_submatrix.is_finite());
        }
    }

    #[test]
    fn distance_matrix_inverse_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let t = PhyloTree::random(&mut rng, 7, false);
            let d = leaf_laplacian_inverse_diagnostic(&t).unwrap();
            assert!(d.distance_inverse_gap < 1e-8, "gap {}", d.distance_inverse_gap);
        }
    }

    #[test]
    fn random_ultrametric_has_equal_depths() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = PhyloTree::random(&mut rng, 12, true);
        let m = tree_metrics(&t).unwrap();
        assert!(m.t.iter().all(|d| (d - 1.0).abs() < 1e-12));
    }
}
