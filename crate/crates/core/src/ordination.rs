//! The triplet engine.
//!
//! A [`Triplet`] `(Xc, Q, D)` is ordinated by the generalized SVD
//! `Xc = B diag(sqrt(lambda)) A^T`; location coordinates are `Xc Q A_k`.
//! Correspondence analysis, non-symmetric correspondence analysis and double
//! principal coordinates analysis are triplets with particular metrics, and
//! DPCoA is also available in its classical three-step form so the two
//! routes can be checked against each other.

use crate::contingency::ProfileData;
use crate::error::{Error, Result};
use crate::linalg::{
    self, GsvdOptions, GsvdResult, Matrix, MetricPolicy, Vector, RANK_TOL,
};

/// Which named analysis produced a triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TripletKind {
    GpcaCustom,
    Ca,
    Nsca,
    Dpcoa,
    InvSigma,
}

impl TripletKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TripletKind::GpcaCustom => "gpca-custom",
            TripletKind::Ca => "ca",
            TripletKind::Nsca => "nsca",
            TripletKind::Dpcoa => "dpcoa",
            TripletKind::InvSigma => "inv-sigma",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Triplet {
    /// Centered `n x p` data.
    pub xc: Matrix,
    /// `p x p` row-space metric.
    pub q: Matrix,
    /// `n x n` column-space metric.
    pub d: Matrix,
    pub kind: TripletKind,
    /// Species weights `c` when the rows of `xc` are centered profiles; used
    /// to place centered unit axes `e_s - c` in the ordination.
    pub column_weights: Option<Vector>,
    pub policy: MetricPolicy,
    /// Norm of the data before centering, for rank decisions.
    pub reference_norm: Option<f64>,
}

impl Triplet {
    pub fn new(xc: Matrix, q: Matrix, d: Matrix) -> Result<Self> {
        let (n, p) = xc.shape();
        if q.shape() != (p, p) || d.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "Xc is {n}x{p}, Q is {}x{}, D is {}x{}",
                q.nrows(),
                q.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        linalg::ensure_finite(&xc)?;
        linalg::ensure_symmetric(&q)?;
        linalg::ensure_symmetric(&d)?;
        if linalg::is_diagonal(&d) {
            if let Some(i) = (0..n).find(|&i| d[(i, i)] <= 0.0) {
                return Err(Error::MetricNotPD {
                    min_eigenvalue: d[(i, i)],
                    condition: f64::INFINITY,
                });
            }
        }
        Ok(Self {
            xc,
            q,
            d,
            kind: TripletKind::GpcaCustom,
            column_weights: None,
            policy: MetricPolicy::Strict,
            reference_norm: None,
        })
    }

    /// Triplet `(P_w X, Q, D_w)` over profile data.
    pub fn from_profiles(pd: &ProfileData, q: Matrix, kind: TripletKind) -> Result<Self> {
        let mut t = Self::new(pd.xc.clone(), q, pd.location_metric())?;
        t.kind = kind;
        t.column_weights = Some(pd.c.clone());
        t.reference_norm = Some(pd.x.norm());
        Ok(t)
    }

    pub fn with_policy(mut self, policy: MetricPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.xc.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.xc.ncols()
    }

    /// The transposed triplet `(Xc^T, D, Q)`, whose rows are the variables.
    pub fn transposed(&self) -> Result<Self> {
        let mut t = Self::new(self.xc.transpose(), self.d.clone(), self.q.clone())?;
        t.kind = self.kind;
        t.reference_norm = self.reference_norm;
        Ok(t)
    }

    fn gsvd(&self) -> Result<GsvdResult> {
        linalg::gsvd_with(
            &self.xc,
            &self.q,
            &self.d,
            GsvdOptions {
                row_policy: self.policy,
                reference_norm: self.reference_norm,
            },
        )
    }
}

#[derive(Debug, Clone)]
pub struct OrdinationResult {
    pub kind: TripletKind,
    pub gsvd: GsvdResult,
    /// `n x k`, equal to `Xc Q A_k`.
    pub location_coords: Matrix,
    /// `p x k` coordinates of the variables.
    pub species_coords: Matrix,
    /// All `rank` nonzero eigenvalues, descending.
    pub eigenvalues: Vector,
    /// `lambda_j / sum(lambda)`.
    pub inertia_shares: Vector,
    pub k: usize,
}

impl OrdinationResult {
    pub fn total_inertia(&self) -> f64 {
        self.eigenvalues.sum()
    }

    pub fn retained_inertia(&self) -> f64 {
        self.eigenvalues.rows(0, self.k).sum()
    }

    pub fn rank(&self) -> usize {
        self.gsvd.rank
    }

    /// First `k` columns of `A`.
    pub fn axes(&self) -> Matrix {
        self.gsvd.a.columns(0, self.k).into_owned()
    }
}

/// Default number of retained axes: `min(n - 1, p, rank)`.
pub fn default_dims(n: usize, p: usize, rank: usize) -> usize {
    n.saturating_sub(1).min(p).min(rank)
}

fn shares(lambda: &Vector) -> Vector {
    let total = lambda.sum();
    if total > 0.0 {
        lambda / total
    } else {
        lambda.clone()
    }
}

/// Generalized PCA of a triplet, keeping `k` axes (default
/// [`default_dims`]).
pub fn gpca(triplet: &Triplet, k: Option<usize>) -> Result<OrdinationResult> {
    let g = triplet.gsvd()?;
    let (n, p) = triplet.xc.shape();
    let rank = g.rank;
    let k = match k {
        Some(k) if k > rank => return Err(Error::KTooLarge { requested: k, rank }),
        Some(k) => k,
        None => default_dims(n, p, rank),
    };
    let a_k = g.a.columns(0, k).into_owned();
    let location_coords = &triplet.xc * &triplet.q * &a_k;
    let species_coords = match &triplet.column_weights {
        Some(c) => centered_axes(&triplet.q, &a_k, c),
        None => {
            let mut yc = a_k.clone();
            for j in 0..k {
                yc.column_mut(j).scale_mut(g.lambda[j].sqrt());
            }
            yc
        }
    };
    let eigenvalues = g.lambda.clone();
    Ok(OrdinationResult {
        kind: triplet.kind,
        inertia_shares: shares(&eigenvalues),
        eigenvalues,
        location_coords,
        species_coords,
        gsvd: g,
        k,
    })
}

/// Rows `(e_s - c)^T Q A_k`, i.e. `P_c Q A_k`.
fn centered_axes(q: &Matrix, a_k: &Matrix, c: &Vector) -> Matrix {
    let qa = q * a_k;
    let mean = c.transpose() * &qa;
    let mut out = qa;
    for mut row in out.row_iter_mut() {
        row -= &mean;
    }
    out
}

/// Coordinates of the centered unit axes `e_s - c` under the ordination.
/// Without column weights the uncentered axes `Q A_k` are returned.
pub fn species_axis_projection(result: &OrdinationResult, triplet: &Triplet) -> Matrix {
    let a_k = result.axes();
    match &triplet.column_weights {
        Some(c) => centered_axes(&triplet.q, &a_k, c),
        None => &triplet.q * a_k,
    }
}

/// Correspondence analysis: `(Xc, D_c^{-1}, D_w)`.
pub fn ca(pd: &ProfileData, k: Option<usize>) -> Result<OrdinationResult> {
    gpca(&ca_triplet(pd)?, k)
}

pub fn ca_triplet(pd: &ProfileData) -> Result<Triplet> {
    if let Some(s) = (0..pd.n_species()).find(|&s| pd.c[s] <= 0.0) {
        return Err(Error::ZeroSpeciesWeight(pd.species_labels[s].clone()));
    }
    let q = Matrix::from_diagonal(&pd.c.map(|c| 1.0 / c));
    Triplet::from_profiles(pd, q, TripletKind::Ca)
}

/// Non-symmetric correspondence analysis: `(Xc, I, D_w)`.
pub fn nsca(pd: &ProfileData, k: Option<usize>) -> Result<OrdinationResult> {
    gpca(&nsca_triplet(pd)?, k)
}

pub fn nsca_triplet(pd: &ProfileData) -> Result<Triplet> {
    let s = pd.n_species();
    Triplet::from_profiles(pd, Matrix::identity(s, s), TripletKind::Nsca)
}

/// DPCoA as a single gPCA: `(Xc, sigma, D_w)`. Null directions of `sigma`
/// are clipped.
pub fn dpcoa_gpca(pd: &ProfileData, sigma: &Matrix, k: Option<usize>) -> Result<OrdinationResult> {
    gpca(&dpcoa_triplet(pd, sigma)?, k)
}

pub fn dpcoa_triplet(pd: &ProfileData, sigma: &Matrix) -> Result<Triplet> {
    Ok(Triplet::from_profiles(pd, sigma.clone(), TripletKind::Dpcoa)?
        .with_policy(MetricPolicy::ClipSingular))
}

/// `-1/2 P_c delta P_c^T`: the similarity matrix that DPCoA effectively
/// uses for squared distances `delta` and species weights `c`.
pub fn similarity_from_distances(delta: &Matrix, c: &Vector) -> Result<Matrix> {
    linalg::ensure_symmetric(delta)?;
    let s = delta.nrows();
    if c.len() != s {
        return Err(Error::DimensionMismatch(format!(
            "{s} species in delta, {} weights",
            c.len()
        )));
    }
    let p = Matrix::identity(s, s) - Vector::from_element(s, 1.0) * c.transpose();
    let m = &p * delta * p.transpose() * (-0.5);
    Ok((&m + m.transpose()) * 0.5)
}

/// DPCoA from squared species distances, via the single-gPCA route.
pub fn dpcoa_from_distances(
    pd: &ProfileData,
    delta: &Matrix,
    k: Option<usize>,
) -> Result<OrdinationResult> {
    let sigma = similarity_from_distances(delta, &pd.c)?;
    dpcoa_gpca(pd, &sigma, k)
}

/// The first two DPCoA steps: species embedding `Z` by weighted MDS and
/// location barycenters `Y = X Z`.
#[derive(Debug, Clone)]
pub struct DpcoaEmbedding {
    /// `S x s*` Euclidean species coordinates.
    pub species: Matrix,
    /// `L x s*` location barycenters.
    pub locations: Matrix,
}

pub fn dpcoa_embedding(pd: &ProfileData, delta: &Matrix) -> Result<DpcoaEmbedding> {
    linalg::ensure_symmetric(delta)?;
    let s = pd.n_species();
    if delta.nrows() != s {
        return Err(Error::DimensionMismatch(format!(
            "delta is {}x{}, table has {s} species",
            delta.nrows(),
            delta.ncols()
        )));
    }
    if let Some(j) = (0..s).find(|&j| pd.c[j] <= 0.0) {
        return Err(Error::ZeroSpeciesWeight(pd.species_labels[j].clone()));
    }
    let root_c = pd.c.map(f64::sqrt);
    let centered = similarity_from_distances(delta, &pd.c)?;
    let m = Matrix::from_fn(s, s, |i, j| root_c[i] * centered[(i, j)] * root_c[j]);
    let eig = linalg::symmetric_eigen(&m)?;
    let lmax = eig.lambda_max();
    let lmin = eig.min_eigenvalue();
    if lmin < -1e-8 * lmax {
        return Err(Error::NotEuclideanDistance { eigenvalue: lmin });
    }
    let keep: Vec<usize> = (0..s)
        .filter(|&j| eig.eigenvalues[j] > RANK_TOL * lmax)
        .collect();
    let species = Matrix::from_fn(s, keep.len(), |i, j| {
        eig.eigenvectors[(i, keep[j])] * eig.eigenvalues[keep[j]].sqrt() / root_c[i]
    });
    let locations = &pd.x * &species;
    Ok(DpcoaEmbedding { species, locations })
}

/// DPCoA in its classical form: weighted MDS of the species, barycentric
/// placement of the locations, then gPCA of `(Y, I, D_w)`.
pub fn dpcoa_steps(pd: &ProfileData, delta: &Matrix, k: Option<usize>) -> Result<OrdinationResult> {
    let emb = dpcoa_embedding(pd, delta)?;
    let dims = emb.locations.ncols();
    // Barycenters centered by the location weights; with abundance weights
    // they are already centered since the pooled profile equals c.
    let mut triplet = Triplet::new(
        &pd.xc * &emb.species,
        Matrix::identity(dims, dims),
        pd.location_metric(),
    )?;
    triplet.kind = TripletKind::Dpcoa;
    triplet.reference_norm = Some(pd.x.norm() * emb.species.norm());
    let mut result = gpca(&triplet, k)?;
    result.species_coords = &emb.species * result.axes();
    Ok(result)
}

/// Column-side gPCA: the ordination of the transposed triplet, whose
/// location coordinates are `Y_hat = Xc^T D B_k`.
pub fn column_side(triplet: &Triplet, k: Option<usize>) -> Result<OrdinationResult> {
    gpca(&triplet.transposed()?, k)
}

/// Row coordinates recovered from a column-side ordination:
/// `x_hat^T = x^T Q Y_hat Lambda_k^{-1/2}`.
pub fn row_coords_from_columns(columns: &OrdinationResult, q: &Matrix, x: &Vector) -> Result<Vector> {
    let y_hat = &columns.location_coords;
    if q.nrows() != x.len() || q.ncols() != y_hat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "x has {} entries, Q is {}x{}, column coordinates have {} rows",
            x.len(),
            q.nrows(),
            q.ncols(),
            y_hat.nrows()
        )));
    }
    let mut out = (x.transpose() * q * y_hat).transpose();
    for j in 0..columns.k {
        out[j] /= columns.eigenvalues[j].sqrt();
    }
    Ok(out)
}

/// Weighting applied to an eigenbasis `V` of a covariance `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightRule {
    /// `w_j = sqrt(lambda_j)`; the induced metric is `sigma` itself.
    SqrtLambda,
    /// `w_j = 1 / sqrt(lambda_j)` on the positive eigenspace, 0 elsewhere.
    InvSqrtLambda,
    /// `w_j = 1` for the leading `r` eigenvectors, 0 otherwise.
    Indicator(usize),
    Custom(Vec<f64>),
}

/// An eigenbasis with per-direction weights.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub v: Matrix,
    pub lambda: Vector,
    pub weights: Vector,
}

impl HarmonicBasis {
    pub fn new(sigma: &Matrix, rule: WeightRule) -> Result<Self> {
        let eig = linalg::symmetric_eigen(sigma)?;
        let n = eig.eigenvalues.len();
        let lmax = eig.lambda_max();
        let positive = |l: f64| l > RANK_TOL * lmax;
        let weights: Vec<f64> = match &rule {
            WeightRule::SqrtLambda => eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect(),
            WeightRule::InvSqrtLambda => eig
                .eigenvalues
                .iter()
                .map(|&l| if positive(l) { 1.0 / l.sqrt() } else { 0.0 })
                .collect(),
            WeightRule::Indicator(r) => (0..n).map(|j| if j < *r { 1.0 } else { 0.0 }).collect(),
            WeightRule::Custom(w) => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{} weights for {n} eigenvectors",
                        w.len()
                    )));
                }
                w.clone()
            }
        };
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
            return Err(Error::NegativeWeight { index, value });
        }
        Ok(Self {
            v: eig.eigenvectors,
            lambda: eig.eigenvalues,
            weights: Vector::from_vec(weights),
        })
    }

    /// `V diag(w^2) V^T`.
    pub fn metric(&self) -> Matrix {
        let mut scaled = self.v.clone();
        for (j, w) in self.weights.iter().enumerate() {
            scaled.column_mut(j).scale_mut(w * w);
        }
        let m = scaled * self.v.transpose();
        (&m + m.transpose()) * 0.5
    }
}

/// `f_w(x) = V diag(w) V^T x`.
pub fn harmonic_transform(x: &Vector, basis: &HarmonicBasis) -> Result<Vector> {
    if x.len() != basis.v.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for a basis of size {}",
            x.len(),
            basis.v.nrows()
        )));
    }
    let coeffs = basis.v.transpose() * x;
    let weighted = coeffs.component_mul(&basis.weights);
    Ok(&basis.v * weighted)
}

/// Per-column sign-insensitive max deviation between coordinate matrices.
/// Columns whose eigenvalues are tied within `1e-9 * lambda_max` are
/// compared as a block through `Y Y^T`, which is invariant to rotations
/// inside the tied eigenspace.
pub fn coordinate_deviation(a: &Matrix, b: &Matrix, eigenvalues: &Vector) -> f64 {
    assert_eq!(a.shape(), b.shape(), "coordinate matrices differ in shape");
    let k = a.ncols();
    let lmax = eigenvalues.iter().fold(0.0_f64, |m, &l| m.max(l.abs()));
    let mut worst = 0.0_f64;
    let mut j = 0;
    while j < k {
        let mut end = j + 1;
        while end < k && (eigenvalues[end - 1] - eigenvalues[end]).abs() <= 1e-9 * lmax {
            end += 1;
        }
        if end - j == 1 {
            let ca = a.column(j);
            let cb = b.column(j);
            let same = (ca - cb).amax();
            let flipped = (ca + cb).amax();
            worst = worst.max(same.min(flipped));
        } else {
            let ba = a.columns(j, end - j);
            let bb = b.columns(j, end - j);
            let ga = ba * ba.transpose();
            let gb = bb * bb.transpose();
            let scale = ga.amax().max(gb.amax()).max(f64::MIN_POSITIVE).sqrt();
            worst = worst.max((ga - gb).amax() / scale);
        }
        j = end;
    }
    worst
}

/// Solve the kernel eigenproblem with `K1 = D`, `K2 = Xc Q Xc^T` at full
/// regularization and unit normalization, and compare the resulting
/// coordinates `K2 U2` with the gPCA location coordinates.
pub fn kernel_equivalence_check(triplet: &Triplet) -> Result<f64> {
    let rank = gpca(triplet, Some(0))?.rank();
    let full = gpca(triplet, Some(rank))?;
    let k1 = &triplet.d;
    let k2 = &triplet.xc * &triplet.q * triplet.xc.transpose();
    let k2 = (&k2 + k2.transpose()) * 0.5;
    // Eigenvectors of K2 K1, chosen K1-orthonormal.
    let eig = linalg::metric_eigen(&k2, k1)?;
    let r = full.k;
    let u1 = eig.eigenvectors.columns(0, r).into_owned();
    let mut u2 = k1 * u1;
    for j in 0..r {
        let l = eig.eigenvalues[j];
        if !(l > 0.0) {
            return Err(Error::Numeric(format!("kernel eigenvalue {j} is {l:.3e}")));
        }
        u2.column_mut(j).scale_mut(1.0 / l.sqrt());
    }
    let kernel_coords = &k2 * u2;
    Ok(coordinate_deviation(
        &kernel_coords,
        &full.location_coords,
        &full.eigenvalues.rows(0, r).into_owned(),
    ))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::contingency::{profiles, AbundanceTable, WeightMode};
    use crate::tree::{tree_metrics, PhyloTree};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(rng: &mut ChaCha8Rng, l: usize, s: usize) -> AbundanceTable {
        let m = Matrix::from_fn(l, s, |_, _| rng.random_range(1..30) as f64);
        AbundanceTable::from_counts(m).unwrap()
    }

    #[test]
    fn identity_metrics_give_classical_pca() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 8;
        let x = Matrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0));
        let mean = x.row_mean();
        let mut xc = x.clone();
        for mut row in xc.row_iter_mut() {
            row -= &mean;
        }
        let t = Triplet::new(xc.clone(), Matrix::identity(3, 3), Matrix::identity(n, n) / n as f64)
            .unwrap();
        let r = gpca(&t, Some(3)).unwrap();
        // Classical PC scores: Xc V from the covariance eigenvectors.
        let cov = xc.transpose() * &xc / n as f64;
        let eig = linalg::symmetric_eigen(&cov).unwrap();
        let scores = &xc * &eig.eigenvectors;
        assert!(coordinate_deviation(&r.location_coords, &scores, &r.eigenvalues) < 1e-10);
    }

    #[test]
    fn k_too_large_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pd = profiles(&random_table(&mut rng, 3, 5), WeightMode::Abundance).unwrap();
        assert!(matches!(nsca(&pd, Some(3)), Err(Error::KTooLarge { rank: 2, .. })));
        assert_eq!(nsca(&pd, None).unwrap().k, 2);
    }

    #[test]
    fn independence_table_has_no_inertia() {
        let r = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        let c = Vector::from_vec(vec![2.0, 5.0, 1.0, 4.0]);
        let t = AbundanceTable::from_counts(&r * c.transpose()).unwrap();
        let pd = profiles(&t, WeightMode::Abundance).unwrap();
        let res = ca(&pd, None).unwrap();
        assert_eq!(res.rank(), 0);
        assert_eq!(res.k, 0);
        assert_eq!(res.total_inertia(), 0.0);
    }

    #[test]
    fn two_species_dpcoa_is_one_dimensional() {
        let t = AbundanceTable::from_counts(Matrix::from_row_slice(
            3,
            2,
            &[3.0, 1.0, 1.0, 1.0, 1.0, 4.0],
        ))
        .unwrap();
        let pd = profiles(&t, WeightMode::Abundance).unwrap();
        let m = tree_metrics(&PhyloTree::parse("(a:1,b:1);").unwrap()).unwrap();
        let r = dpcoa_gpca(&pd, &m.sigma, None).unwrap();
        assert_eq!(r.rank(), 1);
        // With sigma = I the coordinate is proportional to x_1 - x_2 after
        // centering, i.e. to the centered first profile entry.
        let coords = r.location_coords.column(0);
        let ratio = coords[0] / pd.xc[(0, 0)];
        for i in 0..3 {
            assert!((coords[i] - ratio * pd.xc[(i, 0)]).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_invariance_of_dpcoa() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pd = profiles(&random_table(&mut rng, 6, 7), WeightMode::Abundance).unwrap();
        let tree = PhyloTree::random(&mut rng, 7, false);
        let sigma = tree_metrics(&tree).unwrap().sigma;
        let base = dpcoa_gpca(&pd, &sigma, None).unwrap();
        let v = Vector::from_fn(7, |_, _| rng.random_range(0.0..0.5));
        let ones = Vector::from_element(7, 1.0);
        let shifted = &sigma + &ones * v.transpose() + &v * ones.transpose();
        let moved = dpcoa_gpca(&pd, &shifted, Some(base.k)).unwrap();
        assert!(
            coordinate_deviation(&base.location_coords, &moved.location_coords, &base.eigenvalues)
                < 1e-8
        );
    }

    #[test]
    fn harmonic_unit_weights_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let tree = PhyloTree::random(&mut rng, 5, false);
        let sigma = tree_metrics(&tree).unwrap().sigma;
        let basis = HarmonicBasis::new(&sigma, WeightRule::Custom(vec![1.0; 5])).unwrap();
        let x = Vector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
        assert!((harmonic_transform(&x, &basis).unwrap() - &x).amax() < 1e-12);
    }

    #[test]
    fn harmonic_sqrt_lambda_reproduces_sigma_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tree = PhyloTree::random(&mut rng, 6, false);
        let sigma = tree_metrics(&tree).unwrap().sigma;
        let basis = HarmonicBasis::new(&sigma, WeightRule::SqrtLambda).unwrap();
        let x = Vector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let y = Vector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let fx = harmonic_transform(&x, &basis).unwrap();
        let fy = harmonic_transform(&y, &basis).unwrap();
        let expected = (x.transpose() * &sigma * &y)[0];
        assert!((fx.dot(&fy) - expected).abs() < 1e-10);
        assert!((basis.metric() - &sigma).amax() < 1e-10);
    }

    #[test]
    fn harmonic_indicator_is_a_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tree = PhyloTree::random(&mut rng, 6, false);
        let sigma = tree_metrics(&tree).unwrap().sigma;
        let basis = HarmonicBasis::new(&sigma, WeightRule::Indicator(2)).unwrap();
        let x = Vector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let once = harmonic_transform(&x, &basis).unwrap();
        let twice = harmonic_transform(&once, &basis).unwrap();
        assert!((once - twice).amax() < 1e-10);
        assert!(matches!(
            HarmonicBasis::new(&sigma, WeightRule::Custom(vec![1.0, -1.0, 0.0, 0.0, 0.0, 0.0])),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
    }

    #[test]
    fn kernel_check_identity_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xc = Matrix::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0));
        let t = Triplet::new(xc, Matrix::identity(3, 3), Matrix::identity(5, 5)).unwrap();
        assert!(kernel_equivalence_check(&t).unwrap() < 1e-8);
    }

    #[test]
    fn kernel_check_rank_one() {
        let u = Vector::from_vec(vec![1.0, -2.0, 0.5, 0.5]);
        let v = Vector::from_vec(vec![0.3, 1.0, -0.7]);
        let xc = &u * v.transpose();
        let t = Triplet::new(xc, Matrix::identity(3, 3), linalg::diag(&[0.1, 0.2, 0.3, 0.4])).unwrap();
        let full = gpca(&t, None).unwrap();
        assert_eq!(full.rank(), 1);
        assert!(kernel_equivalence_check(&t).unwrap() < 1e-8);
    }

    #[test]
    fn duality_for_a_data_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let pd = profiles(&random_table(&mut rng, 5, 6), WeightMode::Abundance).unwrap();
        let t = ca_triplet(&pd).unwrap();
        let rows = gpca(&t, None).unwrap();
        let cols = column_side(&t, Some(rows.k)).unwrap();
        for i in 0..5 {
            let x = pd.xc.row(i).transpose();
            let via_cols = row_coords_from_columns(&cols, &t.q, &x).unwrap();
            for j in 0..rows.k {
                let a = rows.location_coords[(i, j)];
                assert!((a.abs() - via_cols[j].abs()).abs() < 1e-8);
            }
        }
        assert!(matches!(
            row_coords_from_columns(&cols, &t.q, &Vector::zeros(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
