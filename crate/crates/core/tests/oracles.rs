//! Worked examples and independent oracles for the public API.

use metricord::contingency::{profiles, AbundanceTable, ProfileData, WeightMode};
use metricord::diversity;
use metricord::graph::{self, Graph, LaplacianKind};
use metricord::linalg::{self, Matrix, Vector};
use metricord::ordination::{self, coordinate_deviation, Triplet};
use metricord::tree::{self, PhyloTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn seeded_table(seed: u64, l: usize, s: usize) -> AbundanceTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AbundanceTable::from_counts(Matrix::from_fn(l, s, |_, _| rng.random_range(1..25) as f64)).unwrap()
}

fn abundance(t: &AbundanceTable) -> ProfileData {
    profiles(t, WeightMode::Abundance).unwrap()
}

fn pairwise_sq(m: &Matrix) -> Matrix {
    let n = m.nrows();
    Matrix::from_fn(n, n, |i, j| (m.row(i) - m.row(j)).norm_squared())
}

/// Textbook CA: SVD of `D_r^{-1/2} (P - r c^T) D_c^{-1/2}`.
struct CaOracle {
    rows: Matrix,
    cols_standard: Matrix,
    sv: Vec<f64>,
}

fn ca_oracle(t: &AbundanceTable) -> CaOracle {
    let p = &t.counts / t.total();
    let r = p.column_sum();
    let c = p.row_sum().transpose();
    let s = Matrix::from_fn(p.nrows(), p.ncols(), |i, j| {
        (p[(i, j)] - r[i] * c[j]) / (r[i] * c[j]).sqrt()
    });
    let svd = s.svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let k = 2;
    let rows = Matrix::from_fn(p.nrows(), k, |i, j| {
        u[(i, order[j])] * svd.singular_values[order[j]] / r[i].sqrt()
    });
    let cols_standard = Matrix::from_fn(p.ncols(), k, |i, j| vt[(order[j], i)] / c[i].sqrt());
    CaOracle {
        rows,
        cols_standard,
        sv: order.iter().take(k).map(|&o| svd.singular_values[o]).collect(),
    }
}

#[test]
fn ca_matches_textbook_svd() {
    let t = seeded_table(31, 3, 4);
    let pd = abundance(&t);
    let res = ordination::ca(&pd, Some(2)).unwrap();
    let oracle = ca_oracle(&t);
    for j in 0..2 {
        assert!((res.eigenvalues[j] - oracle.sv[j].powi(2)).abs() < 1e-12);
    }
    let ev = res.eigenvalues.rows(0, 2).into_owned();
    assert!(coordinate_deviation(&res.location_coords, &oracle.rows, &ev) < 1e-10);
    assert!(coordinate_deviation(&res.species_coords, &oracle.cols_standard, &ev) < 1e-10);
}

#[test]
fn ca_total_inertia_is_chi2_over_n() {
    for seed in 0..5 {
        let t = seeded_table(seed, 4 + seed as usize, 6);
        let res = ordination::ca(&abundance(&t), None).unwrap();
        let chi2 = diversity::chi2(&t).unwrap();
        assert!((res.total_inertia() - chi2 / t.total()).abs() < 1e-10);
    }
}

#[test]
fn nsca_is_weighted_pca_and_gini_simpson_between() {
    let t = seeded_table(41, 6, 5);
    let pd = abundance(&t);
    let res = ordination::nsca(&pd, None).unwrap();
    let cov = pd.xc.transpose() * pd.location_metric() * &pd.xc;
    let eig = linalg::symmetric_eigen(&cov).unwrap();
    let scores = (&pd.xc * &eig.eigenvectors).columns(0, res.k).into_owned();
    let ev = res.eigenvalues.rows(0, res.k).into_owned();
    assert!(coordinate_deviation(&res.location_coords, &scores, &ev) < 1e-10);
    let between = diversity::decompose(&pd, &Matrix::identity(5, 5)).unwrap().i_between;
    assert!((res.total_inertia() - between).abs() < 1e-12);
}

#[test]
fn equidistant_dpcoa_reduces_to_nsca() {
    let t = seeded_table(51, 5, 6);
    let pd = abundance(&t);
    let delta = (Matrix::from_element(6, 6, 1.0) - Matrix::identity(6, 6)) * 2.0;
    let rank = ordination::nsca(&pd, None).unwrap().rank();
    let d = ordination::dpcoa_from_distances(&pd, &delta, Some(rank)).unwrap();
    let n = ordination::nsca(&pd, Some(rank)).unwrap();
    let gap = (pairwise_sq(&d.location_coords) - pairwise_sq(&n.location_coords)).amax();
    assert!(gap < 1e-8, "{gap}");
}

#[test]
fn dpcoa_distances_are_rao_dissimilarities() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let t = seeded_table(61, 5, 7);
    let pd = abundance(&t);
    let m = tree::tree_metrics(&PhyloTree::random(&mut rng, 7, false)).unwrap();
    let probe = ordination::dpcoa_from_distances(&pd, &m.delta, Some(0)).unwrap();
    let r = ordination::dpcoa_from_distances(&pd, &m.delta, Some(probe.rank())).unwrap();
    let d2 = pairwise_sq(&r.location_coords);
    for i in 0..5 {
        for j in 0..5 {
            let diff = (pd.x.row(i) - pd.x.row(j)).transpose();
            let rao = (diff.transpose() * &m.delta * &diff)[0] * -0.5;
            assert!((d2[(i, j)] - rao).abs() < 1e-8);
        }
    }
}

#[test]
fn dpcoa_routes_agree_and_locations_are_barycenters() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let t = seeded_table(71, 8, 10);
    let pd = abundance(&t);
    let m = tree::tree_metrics(&PhyloTree::random(&mut rng, 10, false)).unwrap();
    let direct = ordination::dpcoa_gpca(&pd, &m.sigma, None).unwrap();
    let steps = ordination::dpcoa_steps(&pd, &m.delta, Some(direct.k)).unwrap();
    let ev = direct.eigenvalues.rows(0, direct.k).into_owned();
    assert!(coordinate_deviation(&direct.location_coords, &steps.location_coords, &ev) < 1e-8);
    // With abundance weights the barycenters need no recentering.
    let bary = &pd.x * &steps.species_coords;
    assert!((bary - &steps.location_coords).amax() < 1e-10);
}

#[test]
fn inertia_trace_equals_eigenvalue_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let t = seeded_table(81, 8, 12);
    let pd = abundance(&t);
    let sigma = tree::tree_metrics(&PhyloTree::random(&mut rng, 12, false)).unwrap().sigma;
    let res = ordination::gpca(
        &Triplet::from_profiles(&pd, sigma.clone(), ordination::TripletKind::GpcaCustom).unwrap(),
        None,
    )
    .unwrap();
    let trace = diversity::inertia(&pd.xc, &sigma, &pd.location_metric()).unwrap();
    assert!((trace - res.total_inertia()).abs() < 1e-12 * trace.max(1.0));
}

#[test]
fn column_side_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let x = Matrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
    let mean = x.row_mean();
    let xc = Matrix::from_fn(6, 4, |i, j| x[(i, j)] - mean[j]);
    let g = Matrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
    let q = g.transpose() * g + Matrix::identity(4, 4);
    let t = Triplet::new(xc.clone(), q.clone(), Matrix::identity(6, 6) / 6.0).unwrap();
    let rows = ordination::gpca(&t, Some(3)).unwrap();
    let cols = ordination::column_side(&t, Some(3)).unwrap();
    for i in 0..6 {
        let via = ordination::row_coords_from_columns(&cols, &q, &xc.row(i).transpose()).unwrap();
        for j in 0..3 {
            let a = rows.location_coords[(i, j)].abs();
            assert!((a - via[j].abs()).abs() < 1e-10);
        }
    }
}

#[test]
fn diversity_hand_values() {
    let sigma = tree::tree_metrics(&PhyloTree::parse("(a:1,b:1);").unwrap()).unwrap();
    let x = Vector::from_vec(vec![0.5, 0.5]);
    assert!((diversity::diversity_h(&x, &sigma.sigma).unwrap() - 0.5).abs() < 1e-15);
    assert!((diversity::rao_form(&x, &sigma.delta).unwrap() - 0.5).abs() < 1e-15);
    let x3 = Vector::from_vec(vec![0.5, 0.25, 0.25]);
    assert!((diversity::classical_indices(&x3).gini_simpson - 0.625).abs() < 1e-15);
    // Equidistant species: Rao's form is the Gini-Simpson index.
    let delta = (Matrix::from_element(3, 3, 1.0) - Matrix::identity(3, 3)) * 2.0;
    let rao = diversity::rao_form(&x3, &delta).unwrap();
    let gs = diversity::diversity_h(&x3, &Matrix::identity(3, 3)).unwrap();
    assert!((rao - gs).abs() < 1e-15);
}

#[test]
fn chi2_hand_value_and_ca_link() {
    let t = AbundanceTable::from_counts(Matrix::from_row_slice(2, 2, &[10.0, 0.0, 0.0, 10.0])).unwrap();
    assert!((diversity::chi2(&t).unwrap() - 20.0).abs() < 1e-12);
    let t = seeded_table(3, 5, 4);
    let pd = abundance(&t);
    let q = Matrix::from_diagonal(&pd.c.map(|v| 1.0 / v));
    let ib = diversity::decompose(&pd, &q).unwrap().i_between;
    assert!((diversity::chi2(&t).unwrap() - t.total() * ib).abs() < 1e-8);
}

#[test]
fn oracle_three_way_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut counts = Matrix::from_fn(3, 5, |_, _| rng.random_range(1..6) as f64);
    // Top up the first row so that N = 60.
    let short = 60.0 - counts.sum();
    counts[(0, 0)] += short;
    let t = AbundanceTable::from_counts(counts).unwrap();
    assert_eq!(t.total(), 60.0);
    let g = Matrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
    let q = g.transpose() * g + Matrix::identity(5, 5) * 0.2;
    let pd = abundance(&t);
    let r = diversity::decompose(&pd, &q).unwrap();
    let o = diversity::incidence_oracle(&t, &q).unwrap();
    let direct = diversity::inertia(&pd.xc, &q, &pd.location_metric()).unwrap();
    assert!((r.i_between - o.i_between).abs() < 1e-8);
    assert!((r.i_between - direct).abs() < 1e-8);
    assert!((r.i_total - o.i_total).abs() < 1e-8);
    assert!((r.i_within - o.i_within).abs() < 1e-8);

    let diag = AbundanceTable::from_counts(Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0])).unwrap();
    let pd = abundance(&diag);
    let q = Matrix::identity(2, 2);
    let r = diversity::decompose(&pd, &q).unwrap();
    assert_eq!(diversity::incidence_oracle(&diag, &q).unwrap().i_between, r.i_between);
}

#[test]
fn geary_on_fiedler_vector() {
    // Path on 5 vertices with unit weights.
    let mut a = Matrix::zeros(5, 5);
    for i in 0..4 {
        a[(i, i + 1)] = 1.0;
        a[(i + 1, i)] = 1.0;
    }
    let g = Graph::from_adjacency(a).unwrap();
    let l = graph::laplacian(&g, LaplacianKind::Raw).unwrap();
    let eig = linalg::symmetric_eigen(&l).unwrap();
    let n = eig.eigenvalues.len();
    // Eigenvalues are sorted descending; the Fiedler pair is second to last.
    let lambda2 = eig.eigenvalues[n - 2];
    let y = eig.eigenvectors.column(n - 2).into_owned();
    let c = graph::geary_c(&y, &g).unwrap();
    let expected = (5.0 - 1.0) / g.total_weight() * lambda2;
    assert!((c.value - expected).abs() < 1e-12);
}

#[test]
fn complete_triangle_forms_agree() {
    let a = Matrix::from_element(3, 3, 1.0) - Matrix::identity(3, 3);
    let g = Graph::from_adjacency(a).unwrap();
    let y = Vector::from_vec(vec![1.0, 0.0, -1.0]);
    for r in [graph::geary_c(&y, &g).unwrap(), graph::moran_i(&y, &g).unwrap()] {
        assert!((r.double_sum - r.quadratic).abs() < 1e-12);
    }
}

#[test]
fn tree_sigma_three_leaves() {
    let m = tree::tree_metrics(&PhyloTree::parse("((a:1,b:1):1,c:2);").unwrap()).unwrap();
    let expected = Matrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 2.0]);
    assert_eq!(m.sigma, expected);
}
