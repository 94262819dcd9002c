use metricord::contingency::{profiles, AbundanceTable, WeightMode};
use metricord::diversity;
use metricord::graph::{self, Graph};
use metricord::linalg::{self, Matrix, Vector};
use metricord::ordination::{self, Triplet};
use metricord::tree::{self, PhyloTree};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Counts with every row and column nonempty (a diagonal of ones is added).
fn table() -> impl Strategy<Value = AbundanceTable> {
    (2usize..7, 2usize..9).prop_flat_map(|(l, s)| {
        proptest::collection::vec(0u32..30, l * s).prop_map(move |v| {
            let mut m = Matrix::from_fn(l, s, |i, j| v[i * s + j] as f64);
            for k in 0..l.max(s) {
                m[(k % l, k % s)] += 1.0;
            }
            AbundanceTable::from_counts(m).unwrap()
        })
    })
}

fn spd(p: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-1.0f64..1.0, p * p).prop_map(move |v| {
        let g = Matrix::from_row_slice(p, p, &v);
        g.transpose() * g + Matrix::identity(p, p) * 0.05
    })
}

fn table_and_metric() -> impl Strategy<Value = (AbundanceTable, Matrix)> {
    table().prop_flat_map(|t| {
        let s = t.n_species();
        (Just(t), spd(s))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_identity((t, q) in table_and_metric()) {
        let pd = profiles(&t, WeightMode::Abundance).unwrap();
        let r = diversity::decompose(&pd, &q).unwrap();
        let gap = (r.i_total - r.i_between - r.i_within).abs();
        prop_assert!(gap <= 1e-9 * r.i_total.abs().max(1e-12));
        prop_assert!(r.i_between >= -1e-12 && r.i_within >= -1e-12);
    }

    #[test]
    fn uniform_weights_keep_between_nonnegative((t, q) in table_and_metric()) {
        let pd = profiles(&t, WeightMode::Uniform).unwrap();
        let r = diversity::decompose(&pd, &q).unwrap();
        prop_assert!(r.i_between >= -1e-12);
    }

    #[test]
    fn full_rank_gpca_is_mds((t, q) in table_and_metric()) {
        let pd = profiles(&t, WeightMode::Abundance).unwrap();
        let tr = Triplet::from_profiles(&pd, q.clone(), ordination::TripletKind::GpcaCustom).unwrap();
        let rank = ordination::gpca(&tr, Some(0)).unwrap().rank();
        let f = ordination::gpca(&tr, Some(rank)).unwrap().location_coords;
        for i in 0..pd.n_locations() {
            for j in 0..i {
                let d = (pd.x.row(i) - pd.x.row(j)).transpose();
                let qd = (d.transpose() * &q * &d)[0];
                prop_assert!((qd - (f.row(i) - f.row(j)).norm_squared()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gsvd_reconstructs_rank_deficient(
        (n, p, r) in (3usize..8, 3usize..8, 1usize..3),
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0));
        let b = Matrix::from_fn(r, p, |_, _| rng.random_range(-1.0..1.0));
        let x = a * b;
        let g = Matrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
        let q = g.transpose() * g + Matrix::identity(p, p) * 0.5;
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let d = linalg::diag(&w);
        let res = linalg::gsvd(&x, &q, &d).unwrap();
        prop_assert!(res.rank <= r);
        prop_assert!(linalg::rel_frobenius(&res.reconstruct(), &x) < 1e-9);
        let ata = res.a.transpose() * &q * &res.a;
        prop_assert!((ata - Matrix::identity(res.rank, res.rank)).amax() < 1e-9);
    }

    #[test]
    fn tree_covariance_identity(n in 2usize..40, seed in any::<u64>(), ultra in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tr = PhyloTree::random(&mut rng, n, ultra);
        let m = tree::tree_metrics(&tr).unwrap();
        prop_assert!(tree::covariance_identity_gap(&m.delta, &m.t, &m.sigma) <= 1e-12);
        // Newick round trip preserves the metrics.
        let back = tree::tree_metrics(&PhyloTree::parse(&tr.to_newick()).unwrap()).unwrap();
        prop_assert!((back.delta - &m.delta).amax() < 1e-9);
    }

    #[test]
    fn shuffled_tables_keep_margins(t in table(), seed in any::<u64>()) {
        let counts = t.integer_counts().unwrap();
        let mut rng = diversity::replicate_rng(seed, 0);
        let out = diversity::shuffle_units(&counts, &mut rng);
        let rows = |c: &Vec<Vec<u64>>| c.iter().map(|r| r.iter().sum::<u64>()).collect::<Vec<_>>();
        let cols = |c: &Vec<Vec<u64>>| (0..c[0].len()).map(|j| c.iter().map(|r| r[j]).sum::<u64>()).collect::<Vec<_>>();
        prop_assert_eq!(rows(&out), rows(&counts));
        prop_assert_eq!(cols(&out), cols(&counts));
    }

    #[test]
    fn autocorrelation_forms_agree(
        n in 3usize..15,
        weights in proptest::collection::vec(0.1f64..3.0, 14),
        ys in proptest::collection::vec(-5.0f64..5.0, 15),
    ) {
        // A cycle, so every vertex has positive degree.
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            let j = (i + 1) % n;
            a[(i, j)] = weights[i % weights.len()];
            a[(j, i)] = a[(i, j)];
        }
        let g = Graph::from_adjacency(a).unwrap();
        let y = Vector::from_iterator(n, ys.iter().copied().take(n));
        prop_assume!(y.iter().any(|&v| (v - y[0]).abs() > 1e-6));
        for r in [graph::geary_c(&y, &g).unwrap(), graph::moran_i(&y, &g).unwrap()] {
            prop_assert!((r.double_sum - r.quadratic).abs() <= 1e-10 * r.quadratic.abs().max(1.0));
        }
        let v = graph::variance_decomposition(&y, &g).unwrap();
        prop_assert!((v.total - v.laplacian_part - v.adjacency_part).abs() <= 1e-12 * v.total.max(1.0));
    }

    #[test]
    fn symmetric_eigen_reconstructs_low_rank(
        (n, r) in (2usize..12, 1usize..4),
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Matrix::from_fn(n, r.min(n), |_, _| rng.random_range(-1.0..1.0));
        let m = &g * g.transpose();
        let eig = linalg::symmetric_eigen(&m).unwrap();
        let v = &eig.eigenvectors;
        let rec = v * Matrix::from_diagonal(&eig.eigenvalues) * v.transpose();
        prop_assert!((rec - &m).amax() < 1e-12 * m.amax().max(1.0));
        prop_assert!(eig.rank <= r);
    }
}
