//! Dense spectral kernels: symmetric square roots, metric-orthogonal
//! eigendecompositions and the generalized SVD of a triplet `(X, Q, D)`.
//!
//! The symmetric eigensolver and the plain SVD come from `nalgebra`; every
//! metric-aware routine in this module is built on top of those two.
//!
//! Conventions shared by every routine here:
//!
//! * eigenvalues and singular values are sorted in descending order;
//! * an eigenvalue is counted in the rank iff `lambda > RANK_TOL * lambda_max`;
//! * each returned vector has its largest-magnitude entry positive, with near
//!   ties (within `1e-9` relative) broken by the lowest index.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative eigenvalue threshold below which a direction is treated as null.
pub const RANK_TOL: f64 = 1e-12;
/// Largest condition number accepted for a metric on the strict path.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative tolerance for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Relative amount of negative curvature tolerated in a PSD input.
pub const PSD_TOL: f64 = 1e-10;

const SIGN_TIE_TOL: f64 = 1e-9;

pub fn ensure_finite(m: &Matrix) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest `|m_ij - m_ji|`.
pub fn asymmetry(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn ensure_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn ensure_symmetric(m: &Matrix) -> Result<()> {
    ensure_square(m, "symmetric input")?;
    ensure_finite(m)?;
    let dev = asymmetry(m);
    if dev > SYMMETRY_TOL * max_abs(m).max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric { deviation: dev });
    }
    Ok(())
}

/// True when every off-diagonal entry is exactly zero.
pub fn is_diagonal(m: &Matrix) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Flip `v` so its largest-magnitude entry is positive.
pub fn canonical_sign(v: &mut [f64]) -> bool {
    let peak = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if peak == 0.0 {
        return false;
    }
    let lead = v
        .iter()
        .position(|x| x.abs() >= peak * (1.0 - SIGN_TIE_TOL))
        .expect("peak entry exists");
    if v[lead] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

fn canonicalize_columns(m: &mut Matrix) -> Vec<bool> {
    (0..m.ncols())
        .map(|j| {
            let mut col: Vec<f64> = m.column(j).iter().copied().collect();
            let flipped = canonical_sign(&mut col);
            if flipped {
                m.column_mut(j).neg_mut();
            }
            flipped
        })
        .collect()
}

/// Eigendecomposition with eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vector,
    /// Eigenvectors stored as columns, in the order of `eigenvalues`.
    pub eigenvectors: Matrix,
    pub rank: usize,
    pub tolerance_used: f64,
}

impl SpectralDecomposition {
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

fn rank_threshold(lambda_max: f64) -> f64 {
    RANK_TOL * lambda_max.max(0.0)
}

/// Symmetric eigendecomposition in the Euclidean metric.
///
/// The input is symmetrized as `(M + M^T) / 2` after the symmetry check.
pub fn symmetric_eigen(m: &Matrix) -> Result<SpectralDecomposition> {
    ensure_symmetric(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: Vector::zeros(0),
            eigenvectors: Matrix::zeros(0, 0),
            rank: 0,
            tolerance_used: 0.0,
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let eigenvalues = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    canonicalize_columns(&mut eigenvectors);

    let lambda_max = eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b));
    let tol = rank_threshold(lambda_max);
    let rank = eigenvalues.iter().filter(|&&l| l > tol).count();
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        rank,
        tolerance_used: tol,
    })
}

/// Apply `f` to the eigenvalues of a symmetric matrix: `V f(Lambda) V^T`.
pub fn spectral_map(m: &Matrix, f: impl Fn(f64) -> f64) -> Result<Matrix> {
    let eig = symmetric_eigen(m)?;
    Ok(rebuild(&eig.eigenvectors, eig.eigenvalues.iter().map(|&l| f(l))))
}

fn rebuild(v: &Matrix, weights: impl Iterator<Item = f64>) -> Matrix {
    let w: Vec<f64> = weights.collect();
    let mut scaled = v.clone();
    for (j, wj) in w.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*wj);
    }
    let out = scaled * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Symmetric square root of a PSD matrix.
///
/// Eigenvalues below `tol * lambda_max` are clipped to zero; an eigenvalue
/// below `-tol * lambda_max` is an error.
pub fn sym_sqrt(m: &Matrix, tol: f64) -> Result<Matrix> {
    let eig = symmetric_eigen(m)?;
    let lmax = eig.lambda_max();
    let lmin = eig.min_eigenvalue();
    if lmin < -tol * lmax {
        return Err(Error::IndefiniteBeyondTolerance { eigenvalue: lmin });
    }
    let cut = tol * lmax;
    Ok(rebuild(
        &eig.eigenvectors,
        eig.eigenvalues
            .iter()
            .map(|&l| if l > cut { l.sqrt() } else { 0.0 }),
    ))
}

/// Moore–Penrose inverse of a symmetric PSD matrix, discarding eigenvalues
/// at or below `RANK_TOL * lambda_max`.
pub fn spectral_pinv(m: &Matrix) -> Result<Matrix> {
    let eig = symmetric_eigen(m)?;
    let lmax = eig.lambda_max();
    if eig.min_eigenvalue() < -PSD_TOL * lmax {
        return Err(Error::IndefiniteBeyondTolerance {
            eigenvalue: eig.min_eigenvalue(),
        });
    }
    let cut = rank_threshold(lmax);
    Ok(rebuild(
        &eig.eigenvectors,
        eig.eigenvalues
            .iter()
            .map(|&l| if l > cut { 1.0 / l } else { 0.0 }),
    ))
}

/// How a row or column metric is admitted into a factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricPolicy {
    /// Positive definite with condition number at most `MAX_CONDITION`.
    #[default]
    Strict,
    /// PSD allowed: null directions are clipped and the metric is restricted
    /// to its positive eigenspace.
    ClipSingular,
}

/// `M^{1/2}` and `M^{-1/2}` of a metric, restricted to its retained eigenspace.
#[derive(Debug, Clone)]
pub struct MetricFactor {
    pub sqrt: Matrix,
    pub inv_sqrt: Matrix,
    /// Number of null directions removed (zero on the strict path).
    pub discarded: usize,
    /// Largest eigenvalue, used for scale-aware tolerances.
    pub lambda_max: f64,
}

impl MetricFactor {
    pub fn new(m: &Matrix, policy: MetricPolicy) -> Result<Self> {
        ensure_symmetric(m)?;
        let n = m.nrows();
        if is_diagonal(m) {
            let diag: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
            return Self::from_eigen(
                diag.clone(),
                None,
                policy,
            );
        }
        let eig = symmetric_eigen(m)?;
        Self::from_eigen(
            eig.eigenvalues.iter().copied().collect(),
            Some(eig.eigenvectors),
            policy,
        )
    }

    fn from_eigen(values: Vec<f64>, vectors: Option<Matrix>, policy: MetricPolicy) -> Result<Self> {
        let n = values.len();
        let lmax = values.iter().fold(0.0_f64, |a, &b| a.max(b));
        let lmin = values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if n == 0 {
            return Ok(Self {
                sqrt: Matrix::zeros(0, 0),
                inv_sqrt: Matrix::zeros(0, 0),
                discarded: 0,
                lambda_max: 0.0,
            });
        }
        let keep: Vec<bool> = match policy {
            MetricPolicy::Strict => {
                if lmax <= 0.0 || lmin <= 0.0 || lmax / lmin > MAX_CONDITION {
                    return Err(Error::MetricNotPD {
                        min_eigenvalue: lmin,
                        condition: if lmin > 0.0 { lmax / lmin } else { f64::INFINITY },
                    });
                }
                vec![true; n]
            }
            MetricPolicy::ClipSingular => {
                if lmax <= 0.0 {
                    return Err(Error::MetricNotPD {
                        min_eigenvalue: lmin,
                        condition: f64::INFINITY,
                    });
                }
                if lmin < -PSD_TOL * lmax {
                    return Err(Error::IndefiniteBeyondTolerance { eigenvalue: lmin });
                }
                let cut = rank_threshold(lmax);
                values.iter().map(|&l| l > cut).collect()
            }
        };
        let discarded = keep.iter().filter(|k| !**k).count();
        let root: Vec<f64> = values
            .iter()
            .zip(&keep)
            .map(|(&l, &k)| if k { l.sqrt() } else { 0.0 })
            .collect();
        let inv_root: Vec<f64> = root
            .iter()
            .map(|&r| if r > 0.0 { 1.0 / r } else { 0.0 })
            .collect();
        let (sqrt, inv_sqrt) = match vectors {
            None => (
                Matrix::from_diagonal(&Vector::from_vec(root)),
                Matrix::from_diagonal(&Vector::from_vec(inv_root)),
            ),
            Some(v) => (
                rebuild(&v, root.into_iter()),
                rebuild(&v, inv_root.into_iter()),
            ),
        };
        Ok(Self {
            sqrt,
            inv_sqrt,
            discarded,
            lambda_max: lmax,
        })
    }
}

/// Eigenpairs of `S Q` with eigenvectors chosen `Q`-orthonormal.
///
/// Solved through the symmetric problem `Q^{1/2} S Q^{1/2} w = lambda w`,
/// with `a = Q^{-1/2} w`.
pub fn metric_eigen(s: &Matrix, q: &Matrix) -> Result<SpectralDecomposition> {
    ensure_symmetric(s)?;
    if s.nrows() != q.nrows() || q.nrows() != q.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "S is {}x{}, Q is {}x{}",
            s.nrows(),
            s.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let factor = MetricFactor::new(q, MetricPolicy::Strict)?;
    let inner = &factor.sqrt * s * &factor.sqrt;
    let inner = (&inner + inner.transpose()) * 0.5;
    let eig = symmetric_eigen(&inner)?;
    let mut vectors = &factor.inv_sqrt * &eig.eigenvectors;
    canonicalize_columns(&mut vectors);
    Ok(SpectralDecomposition {
        eigenvectors: vectors,
        ..eig
    })
}

/// Generalized SVD `X = B diag(sqrt(lambda)) A^T` with `A^T Q A = I` and
/// `B^T D B = I`.
#[derive(Debug, Clone)]
pub struct GsvdResult {
    /// `p x r`, columns `Q`-orthonormal.
    pub a: Matrix,
    /// `n x r`, columns `D`-orthonormal.
    pub b: Matrix,
    /// Eigenvalues of `X^T D X Q`, descending and positive.
    pub lambda: Vector,
    pub rank: usize,
    /// Null directions clipped from `Q` (pseudo-metric path only).
    pub discarded_row_dims: usize,
}

impl GsvdResult {
    pub fn singular_values(&self) -> Vector {
        self.lambda.map(f64::sqrt)
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut scaled = self.b.clone();
        for j in 0..self.rank {
            scaled.column_mut(j).scale_mut(self.lambda[j].sqrt());
        }
        scaled * self.a.transpose()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GsvdOptions {
    pub row_policy: MetricPolicy,
    /// Magnitude of the data before any centering. Directions whose singular
    /// value is below roundoff relative to this norm count as null even when
    /// the centered matrix itself is tiny.
    pub reference_norm: Option<f64>,
}

/// Generalized SVD of the triplet `(X, Q, D)`: `X` is `n x p`, `Q` is the
/// `p x p` row-space metric and `D` the `n x n` column-space metric.
pub fn gsvd(x: &Matrix, q: &Matrix, d: &Matrix) -> Result<GsvdResult> {
    gsvd_with(x, q, d, GsvdOptions::default())
}

pub fn gsvd_with(x: &Matrix, q: &Matrix, d: &Matrix, opts: GsvdOptions) -> Result<GsvdResult> {
    ensure_finite(x)?;
    let (n, p) = x.shape();
    if q.shape() != (p, p) || d.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "X is {n}x{p}, Q is {}x{}, D is {}x{}",
            q.nrows(),
            q.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    let qf = MetricFactor::new(q, opts.row_policy)?;
    let df = MetricFactor::new(d, MetricPolicy::Strict)?;

    let m = &df.sqrt * x * &qf.sqrt;
    let width = n.min(p);
    if width == 0 {
        return Ok(GsvdResult {
            a: Matrix::zeros(p, 0),
            b: Matrix::zeros(n, 0),
            lambda: Vector::zeros(0),
            rank: 0,
            discarded_row_dims: qf.discarded,
        });
    }
    let (u, sv, v) = thin_svd(&m)?;
    let v_t = v.transpose();
    let sv = &sv;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).expect("finite").then(a.cmp(&b)));
    let s_max = sv[order[0]];
    let mut floor = RANK_TOL.sqrt() * s_max;
    if let Some(reference) = opts.reference_norm {
        let scale = reference * df.lambda_max.sqrt() * qf.lambda_max.sqrt();
        floor = floor.max(1e-13 * scale);
    }
    let kept: Vec<usize> = order.into_iter().filter(|&i| sv[i] > floor && sv[i] > 0.0).collect();
    let r = kept.len();

    let mut a = Matrix::zeros(p, r);
    let mut b = Matrix::zeros(n, r);
    let mut lambda = Vector::zeros(r);
    for (j, &i) in kept.iter().enumerate() {
        let v_col = v_t.row(i).transpose();
        let mut a_col = &qf.inv_sqrt * v_col;
        let mut b_col = &df.inv_sqrt * u.column(i);
        let mut a_vec: Vec<f64> = a_col.iter().copied().collect();
        if canonical_sign(&mut a_vec) {
            a_col.neg_mut();
            b_col.neg_mut();
        }
        a.set_column(j, &a_col);
        b.set_column(j, &b_col);
        lambda[j] = sv[i] * sv[i];
    }

    // B_k = X Q A_k Lambda_k^{-1/2} must agree with the back-transformed U.
    let xqa = x * q * &a;
    let mut worst = 0.0_f64;
    for j in 0..r {
        let s = lambda[j].sqrt();
        for i in 0..n {
            worst = worst.max((xqa[(i, j)] / s - b[(i, j)]).abs());
        }
    }
    let b_scale = max_abs(&b).max(1.0);
    if worst > 1e-6 * b_scale {
        return Err(Error::Numeric(format!(
            "gSVD factors inconsistent: |XQA/sqrt(lambda) - B| = {worst:.3e}"
        )));
    }

    Ok(GsvdResult {
        a,
        b,
        lambda,
        rank: r,
        discarded_row_dims: qf.discarded,
    })
}

/// Thin SVD `M = U diag(s) V^T`, in no particular order.
///
/// nalgebra's bidiagonal SVD occasionally returns orthonormal but wrong
/// factors on exactly rank-deficient input, so the reconstruction is checked
/// and, on failure, the factors are taken from the symmetric eigenproblem of
/// `[[0, M], [M^T, 0]]`, whose eigenpairs are `(+-s, [u; +-v] / sqrt(2))`.
fn thin_svd(m: &Matrix) -> Result<(Matrix, Vector, Matrix)> {
    let (n, p) = m.shape();
    let tol = 64.0 * f64::EPSILON * (n + p) as f64 * m.amax().max(f64::MIN_POSITIVE);
    if let Some(svd) = SVD::try_new(m.clone(), true, true, 5.0 * f64::EPSILON, 0) {
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^T");
        let rec = &u * Matrix::from_diagonal(&svd.singular_values) * &v_t;
        if (rec - m).amax() <= tol {
            return Ok((u, svd.singular_values, v_t.transpose()));
        }
    }
    let w = n.min(p);
    let mut h = Matrix::zeros(n + p, n + p);
    h.view_mut((0, n), (n, p)).copy_from(m);
    h.view_mut((n, 0), (p, n)).copy_from(&m.transpose());
    let eig = symmetric_eigen(&h)?;
    let root2 = std::f64::consts::SQRT_2;
    let u = Matrix::from_fn(n, w, |i, j| eig.eigenvectors[(i, j)] * root2);
    let v = Matrix::from_fn(p, w, |i, j| eig.eigenvectors[(n + i, j)] * root2);
    let s = Vector::from_iterator(w, eig.eigenvalues.iter().take(w).map(|&l| l.max(0.0)));
    let rec = &u * Matrix::from_diagonal(&s) * v.transpose();
    if (rec - m).amax() > tol {
        return Err(Error::Numeric("SVD did not reproduce its input".into()));
    }
    Ok((u, s, v))
}

/// `diag(v)` as a dense matrix.
pub fn diag(v: &[f64]) -> Matrix {
    Matrix::from_diagonal(&Vector::from_column_slice(v))
}

/// Relative Frobenius distance `||a - b|| / ||b||` (absolute when `b = 0`).
pub fn rel_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    let num = (a - b).norm();
    let den = b.norm();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        let g = random_matrix(rng, n, n);
        &g * g.transpose() + Matrix::identity(n, n) * 0.5
    }

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let i3 = Matrix::identity(3, 3);
        assert!(rel_frobenius(&sym_sqrt(&i3, PSD_TOL).unwrap(), &i3) < 1e-15);
        let s = sym_sqrt(&diag(&[4.0, 9.0]), PSD_TOL).unwrap();
        assert!(rel_frobenius(&s, &diag(&[2.0, 3.0])) < 1e-15);
    }

    #[test]
    fn sqrt_of_random_psd_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_matrix(&mut rng, 5, 5);
        let m = &g * g.transpose();
        let s = sym_sqrt(&m, PSD_TOL).unwrap();
        assert!(rel_frobenius(&(&s * &s), &m) <= 1e-10);
        assert!((&s * &m - &m * &s).norm() <= 1e-10 * m.norm());
    }

    #[test]
    fn sqrt_rejects_indefinite_and_asymmetric() {
        let m = diag(&[1.0, -0.5]);
        assert!(matches!(
            sym_sqrt(&m, PSD_TOL),
            Err(Error::IndefiniteBeyondTolerance { .. })
        ));
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(sym_sqrt(&a, PSD_TOL), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn metric_eigen_identity_metric_is_plain_eigen() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_matrix(&mut rng, 4, 4);
        let s = &g * g.transpose();
        let plain = symmetric_eigen(&s).unwrap();
        let metric = metric_eigen(&s, &Matrix::identity(4, 4)).unwrap();
        assert!((&plain.eigenvalues - &metric.eigenvalues).amax() < 1e-12);
        assert!((&plain.eigenvectors - &metric.eigenvectors).amax() < 1e-10);
    }

    #[test]
    fn metric_eigen_of_inverse_metric_is_all_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_spd(&mut rng, 4);
        let s = q.clone().try_inverse().unwrap();
        let s = (&s + s.transpose()) * 0.5;
        let eig = metric_eigen(&s, &q).unwrap();
        assert!(eig.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-10));
        let gram = eig.eigenvectors.transpose() * &q * &eig.eigenvectors;
        assert!((gram - Matrix::identity(4, 4)).amax() < 1e-10);
    }

    #[test]
    fn metric_eigen_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = random_matrix(&mut rng, 4, 4);
        let s = &g * g.transpose();
        let q = random_spd(&mut rng, 4);
        let eig = metric_eigen(&s, &q).unwrap();
        for j in 0..4 {
            let a = eig.eigenvectors.column(j);
            let res = &s * &q * a - a * eig.eigenvalues[j];
            assert!(res.norm() <= 1e-9, "residual {}", res.norm());
        }
    }

    #[test]
    fn metric_eigen_rejects_bad_metric() {
        let s = Matrix::identity(2, 2);
        assert!(matches!(
            metric_eigen(&s, &diag(&[1.0, 0.0])),
            Err(Error::MetricNotPD { .. })
        ));
        assert!(matches!(
            metric_eigen(&s, &Matrix::identity(3, 3)),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            metric_eigen(&s, &diag(&[1.0, 1e-13])),
            Err(Error::MetricNotPD { .. })
        ));
    }

    #[test]
    fn gsvd_identity_case() {
        let i3 = Matrix::identity(3, 3);
        let g = gsvd(&i3, &i3, &i3).unwrap();
        assert_eq!(g.rank, 3);
        assert!(g.lambda.iter().all(|l| (l - 1.0).abs() < 1e-14));
        assert!((g.a.transpose() * &g.a - &i3).amax() < 1e-14);
        assert!((g.b.transpose() * &g.b - &i3).amax() < 1e-14);
    }

    #[test]
    fn gsvd_reduces_to_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x = random_matrix(&mut rng, 6, 4);
        let g = gsvd(&x, &Matrix::identity(4, 4), &Matrix::identity(6, 6)).unwrap();
        let mut sv: Vec<f64> = x.clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (j, s) in sv.iter().enumerate() {
            assert!((g.lambda[j].sqrt() - s).abs() < 1e-10);
        }
    }

    #[test]
    fn gsvd_reconstructs_with_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let x = random_matrix(&mut rng, 6, 4);
        let q = random_spd(&mut rng, 4);
        let d = diag(&(0..6).map(|_| rng.random_range(0.1..1.0)).collect::<Vec<_>>());
        let g = gsvd(&x, &q, &d).unwrap();
        assert!(rel_frobenius(&g.reconstruct(), &x) <= 1e-9);
        let r = g.rank;
        assert!((g.a.transpose() * &q * &g.a - Matrix::identity(r, r)).amax() < 1e-8);
        assert!((g.b.transpose() * &d * &g.b - Matrix::identity(r, r)).amax() < 1e-8);
        for w in g.lambda.as_slice().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn gsvd_a_factor_matches_metric_eigen() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x = random_matrix(&mut rng, 7, 4);
        let q = random_spd(&mut rng, 4);
        let d = diag(&(0..7).map(|_| rng.random_range(0.1..1.0)).collect::<Vec<_>>());
        let g = gsvd(&x, &q, &d).unwrap();
        let s = x.transpose() * &d * &x;
        let e = metric_eigen(&((&s + s.transpose()) * 0.5), &q).unwrap();
        for j in 0..g.rank {
            assert!((g.lambda[j] - e.eigenvalues[j]).abs() < 1e-9 * g.lambda[0]);
            assert!((g.a.column(j) - e.eigenvectors.column(j)).amax() < 1e-7);
        }
    }

    #[test]
    fn clip_path_accepts_singular_metric() {
        let q = Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!(MetricFactor::new(&q, MetricPolicy::Strict).is_err());
        let f = MetricFactor::new(&q, MetricPolicy::ClipSingular).unwrap();
        assert_eq!(f.discarded, 1);
        assert!((&f.sqrt * &f.sqrt - &q).amax() < 1e-14);
    }

    #[test]
    fn sign_convention_prefers_lowest_index_on_ties() {
        let mut v = vec![-0.5, 0.5, 0.1];
        assert!(canonical_sign(&mut v));
        assert_eq!(v, vec![0.5, -0.5, -0.1]);
    }

    #[test]
    fn nonfinite_rejected() {
        let mut m = Matrix::identity(2, 2);
        m[(1, 0)] = f64::NAN;
        assert!(matches!(ensure_finite(&m), Err(Error::NonFinite { row: 1, col: 0 })));
    }
}
