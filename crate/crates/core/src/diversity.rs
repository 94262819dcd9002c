//! Diversity and dissimilarity under a species metric `Q`.
//!
//! `H_Q(x) = x^T diag(Q) - x^T Q x` is the diversity of a profile and
//! `Diss_Q(a, b) = (a - b)^T Q (a - b)` the dissimilarity of two. Total
//! diversity of the pooled profile splits into a between-location part
//! (weighted pairwise dissimilarities) and a within-location part (weighted
//! individual diversities); their ratio gives an F statistic whose null
//! distribution is obtained by permutation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Hypergeometric};
use rayon::prelude::*;

use crate::contingency::{profiles, AbundanceTable, ProfileData, WeightMode};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, MetricPolicy, Vector};
use crate::ordination::{self, Triplet};

/// Tolerance on `sum(x) = 1` and `x >= 0` for profile inputs.
pub const PROFILE_TOL: f64 = 1e-9;
/// Relative tolerance of the `I_T = I_B + I_W` identity check.
pub const DECOMPOSITION_TOL: f64 = 1e-9;
/// Replicates below this are refused.
pub const MIN_REPLICATES: usize = 99;
/// Relative slack when counting permuted statistics that tie the observed.
pub const TIE_TOL: f64 = 1e-12;
/// Largest `N` accepted by [`incidence_oracle`].
pub const ORACLE_LIMIT: usize = 100_000;
/// Environment variable capping the permutation thread pool.
pub const THREADS_ENV: &str = "METRICORD_THREADS";

fn check_dims(x: &Vector, q: &Matrix) -> Result<()> {
    if q.nrows() != x.len() || q.ncols() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against a {}x{} matrix",
            x.len(),
            q.nrows(),
            q.ncols()
        )));
    }
    Ok(())
}

pub fn check_profile(x: &Vector) -> Result<()> {
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::NotAProfile(format!("entry {v} is not finite")));
    }
    if let Some(v) = x.iter().find(|&&v| v < -PROFILE_TOL) {
        return Err(Error::NotAProfile(format!("negative entry {v}")));
    }
    let sum = x.sum();
    if (sum - 1.0).abs() > PROFILE_TOL {
        return Err(Error::NotAProfile(format!("entries sum to {sum}")));
    }
    Ok(())
}

fn h_unchecked(x: &Vector, q: &Matrix) -> f64 {
    let diag_term: f64 = (0..x.len()).map(|s| x[s] * q[(s, s)]).sum();
    diag_term - (x.transpose() * q * x)[0]
}

/// `H_Q(x)`; Gini–Simpson `1 - sum x^2` when `Q = I`.
pub fn diversity_h(x: &Vector, q: &Matrix) -> Result<f64> {
    check_dims(x, q)?;
    check_profile(x)?;
    Ok(h_unchecked(x, q))
}

/// Rao quadratic entropy `1/2 sum_rs delta_rs x_r x_s`.
///
/// The half makes this equal to `diversity_h(x, sigma)` whenever
/// `2 sigma = 1 t^T + t 1^T - delta`; with `delta = 2 (11^T - I)` it is the
/// Gini–Simpson index.
pub fn rao_form(x: &Vector, delta: &Matrix) -> Result<f64> {
    check_dims(x, delta)?;
    Ok(0.5 * (x.transpose() * delta * x)[0])
}

/// `(a - b)^T Q (a - b)`.
pub fn dissimilarity(a: &Vector, b: &Vector, q: &Matrix) -> Result<f64> {
    check_dims(a, q)?;
    check_dims(b, q)?;
    let d = a - b;
    Ok((d.transpose() * q * &d)[0])
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Inertias {
    pub i_total: f64,
    pub i_between: f64,
    pub i_within: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Individuals,
    GroupLabels,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PermutationSummary {
    pub replicates: usize,
    pub p_value: f64,
    pub seed: u64,
    pub scheme: SchemeKind,
    /// Replicates whose statistic reached the observed one.
    pub exceedances: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DiversityReport {
    pub i_total: f64,
    pub i_between: f64,
    pub i_within: f64,
    pub per_location_h: Vec<f64>,
    /// `L x L`, row-major.
    pub pairwise_diss: Vec<Vec<f64>>,
    pub f: f64,
    /// Set when `I_W = 0 < I_B`, in which case `f` is `+inf`.
    pub f_infinite: bool,
    pub n_locations: usize,
    pub total_count: f64,
    pub permutation: Option<PermutationSummary>,
}

impl DiversityReport {
    pub fn inertias(&self) -> Inertias {
        Inertias {
            i_total: self.i_total,
            i_between: self.i_between,
            i_within: self.i_within,
        }
    }
}

/// The three inertias for profiles `x` (rows) with location weights `w`.
fn inertias_of(x: &Matrix, w: &Vector, q: &Matrix) -> Inertias {
    let xbar = x.transpose() * w;
    let xq = x * q;
    let mut i_within = 0.0;
    let mut i_between = 0.0;
    for l in 0..x.nrows() {
        let mut diag_term = 0.0;
        let mut quad = 0.0;
        for s in 0..x.ncols() {
            diag_term += x[(l, s)] * q[(s, s)];
            quad += xq[(l, s)] * x[(l, s)];
        }
        i_within += w[l] * (diag_term - quad);
        let d = x.row(l).transpose() - &xbar;
        i_between += w[l] * (d.transpose() * q * &d)[0];
    }
    Inertias {
        i_total: h_unchecked(&xbar, q),
        i_between,
        i_within,
    }
}

fn f_from(inertias: &Inertias, total_count: f64, n_locations: usize) -> (f64, bool) {
    let scale = inertias.i_total.abs().max(inertias.i_between.abs()).max(f64::MIN_POSITIVE);
    let within_zero = inertias.i_within.abs() <= 1e-14 * scale;
    let between_zero = inertias.i_between.abs() <= 1e-14 * scale;
    if between_zero {
        (0.0, false)
    } else if within_zero {
        (f64::INFINITY, true)
    } else {
        let f = (total_count - 1.0) * inertias.i_between / (n_locations as f64 * inertias.i_within);
        (f, false)
    }
}

fn ensure_metric(pd: &ProfileData, q: &Matrix) -> Result<()> {
    let s = pd.n_species();
    if q.shape() != (s, s) {
        return Err(Error::DimensionMismatch(format!(
            "table has {s} species, metric is {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    linalg::ensure_finite(q)?;
    linalg::ensure_symmetric(q)
}

/// The full decomposition for profile data under `Q`.
pub fn decompose(pd: &ProfileData, q: &Matrix) -> Result<DiversityReport> {
    ensure_metric(pd, q)?;
    let inertias = inertias_of(&pd.x, &pd.w, q);
    let gap = inertias.i_total - inertias.i_between - inertias.i_within;
    let scale = inertias
        .i_total
        .abs()
        .max(inertias.i_between.abs() + inertias.i_within.abs())
        .max(f64::MIN_POSITIVE);
    if gap.abs() > DECOMPOSITION_TOL * scale {
        return Err(Error::Numeric(format!(
            "I_T - I_B - I_W = {gap:.3e} exceeds tolerance"
        )));
    }
    let l = pd.n_locations();
    let per_location_h = (0..l)
        .map(|i| h_unchecked(&pd.x.row(i).transpose(), q))
        .collect();
    let mut pairwise = vec![vec![0.0; l]; l];
    for a in 0..l {
        for b in (a + 1)..l {
            let d = (pd.x.row(a) - pd.x.row(b)).transpose();
            let v = (d.transpose() * q * &d)[0];
            pairwise[a][b] = v;
            pairwise[b][a] = v;
        }
    }
    let (f, f_infinite) = f_from(&inertias, pd.total, l);
    Ok(DiversityReport {
        i_total: inertias.i_total,
        i_between: inertias.i_between,
        i_within: inertias.i_within,
        per_location_h,
        pairwise_diss: pairwise,
        f,
        f_infinite,
        n_locations: l,
        total_count: pd.total,
        permutation: None,
    })
}

/// F computed inside the first `k` axes of the between-location gPCA
/// `(P_w X, Q, D_w)`; `None` uses the entire space and equals the F of
/// [`decompose`].
pub fn f_statistic(pd: &ProfileData, q: &Matrix, dims: Option<usize>) -> Result<f64> {
    ensure_metric(pd, q)?;
    let Some(k) = dims else {
        let inertias = inertias_of(&pd.x, &pd.w, q);
        return Ok(f_from(&inertias, pd.total, pd.n_locations()).0);
    };
    let triplet = Triplet::from_profiles(pd, q.clone(), ordination::TripletKind::GpcaCustom)?
        .with_policy(MetricPolicy::ClipSingular);
    let ord = ordination::gpca(&triplet, Some(k))?;
    let i_between = ord.retained_inertia();
    // Within inertia of the individuals e_s around their location profile,
    // measured in the retained axes: sum_s x_ls |g_s|^2 - |x_l^T G|^2.
    let g = q * ord.axes();
    let g_norms: Vector = Vector::from_fn(g.nrows(), |s, _| g.row(s).norm_squared());
    let mut i_within = 0.0;
    for l in 0..pd.n_locations() {
        let x_l = pd.x.row(l);
        let m = x_l * &g;
        i_within += pd.w[l] * ((x_l * &g_norms)[0] - m.norm_squared());
    }
    let inertias = Inertias {
        i_total: i_between + i_within,
        i_between,
        i_within,
    };
    Ok(f_from(&inertias, pd.total, pd.n_locations()).0)
}

/// Pearson's chi-squared statistic for independence.
pub fn chi2(table: &AbundanceTable) -> Result<f64> {
    let rows = table.row_sums();
    let cols = table.col_sums();
    if let Some(i) = (0..rows.len()).find(|&i| rows[i] <= 0.0) {
        return Err(Error::ZeroMarginal(format!("location {}", table.location_labels[i])));
    }
    if let Some(j) = (0..cols.len()).find(|&j| cols[j] <= 0.0) {
        return Err(Error::ZeroMarginal(format!("species {}", table.species_labels[j])));
    }
    let n = table.total();
    let mut stat = 0.0;
    for i in 0..rows.len() {
        for j in 0..cols.len() {
            let expected = rows[i] * cols[j] / n;
            let diff = table.counts[(i, j)] - expected;
            stat += diff * diff / expected;
        }
    }
    Ok(stat)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ClassicalIndices {
    pub gini_simpson: f64,
    /// `sum x log x`, which is nonpositive; the conventional Shannon entropy
    /// is its negation.
    pub shannon: f64,
}

pub fn classical_indices(x: &Vector) -> ClassicalIndices {
    ClassicalIndices {
        gini_simpson: 1.0 - x.norm_squared(),
        shannon: x.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum(),
    }
}

/// `tr(D X Q X^T)`.
pub fn inertia(x: &Matrix, q: &Matrix, d: &Matrix) -> Result<f64> {
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
    Ok((d * x * q * x.transpose()).trace())
}

/// Inertias recomputed from the individual-level incidence matrices.
///
/// Each counted unit becomes a row of the species incidence `Y`; `Y` is
/// centered by its unweighted mean, regressed on the location incidence `Z`
/// by least squares, and the inertias of the centered data, the fitted
/// values and the residuals are taken under `(Q, I/N)`. This matches
/// [`decompose`] with abundance weights.
pub fn incidence_oracle(table: &AbundanceTable, q: &Matrix) -> Result<Inertias> {
    let counts = table.integer_counts()?;
    let n: u64 = counts.iter().flatten().sum();
    let n = n as usize;
    if n > ORACLE_LIMIT {
        return Err(Error::TooLargeForOracle { n, limit: ORACLE_LIMIT });
    }
    let (l, s) = (table.n_locations(), table.n_species());
    if q.shape() != (s, s) {
        return Err(Error::DimensionMismatch(format!(
            "table has {s} species, metric is {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    let mut y = Matrix::zeros(n, s);
    let mut z = Matrix::zeros(n, l);
    let mut row = 0;
    for (loc, species_counts) in counts.iter().enumerate() {
        for (sp, &c) in species_counts.iter().enumerate() {
            for _ in 0..c {
                y[(row, sp)] = 1.0;
                z[(row, loc)] = 1.0;
                row += 1;
            }
        }
    }
    let mean = y.row_mean();
    let mut yc = y;
    for mut r in yc.row_iter_mut() {
        r -= &mean;
    }
    // Z^T Z is the diagonal of location totals, so the least-squares fit is
    // a division and introduces no rounding beyond the sums themselves.
    let ztz = z.row_sum();
    if let Some(i) = (0..l).find(|&i| ztz[i] == 0.0) {
        return Err(Error::ZeroRowSum(table.location_labels[i].clone()));
    }
    let mut coef = z.transpose() * &yc;
    for (i, mut r) in coef.row_iter_mut().enumerate() {
        r /= ztz[i];
    }
    let fitted = &z * coef;
    let residual = &yc - &fitted;
    let inertia_n = |m: &Matrix| -> f64 {
        let mq = m * q;
        mq.component_mul(m).sum() / n as f64
    };
    Ok(Inertias {
        i_total: inertia_n(&yc),
        i_between: inertia_n(&fitted),
        i_within: inertia_n(&residual),
    })
}

/// How null tables are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum PermutationScheme {
    /// Reassign individual count units to locations, preserving location
    /// totals and species totals.
    Individuals,
    /// Shuffle group labels among locations; the statistic is computed on the
    /// table pooled by group.
    GroupLabels(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct PermutationOptions {
    pub replicates: usize,
    pub seed: u64,
    pub scheme: PermutationScheme,
    pub weight_mode: WeightMode,
    /// Compute F inside the leading `k` axes (see [`f_statistic`]).
    pub f_dims: Option<usize>,
    /// Thread cap; falls back to `METRICORD_THREADS`, then rayon's default.
    pub threads: Option<usize>,
}

impl PermutationOptions {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            scheme: PermutationScheme::Individuals,
            weight_mode: WeightMode::Abundance,
            f_dims: None,
            threads: None,
        }
    }
}

/// Resolve the thread cap from an explicit value or the environment.
pub fn thread_cap(explicit: Option<usize>) -> Option<usize> {
    explicit
        .or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok())
        .filter(|&n| n > 0)
}

/// Generator for replicate `index`: the seed selects the key, the index the
/// stream, so each replicate's draws are independent of scheduling.
pub fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// One hypergeometric draw. rand_distr rejects some valid parameter sets
/// whose initial inversion probability underflows; those are drawn unit by
/// unit, which is exact and cheap at the sizes where it happens.
fn hypergeometric(population: u64, marked: u64, draws: u64, rng: &mut ChaCha8Rng) -> u64 {
    match Hypergeometric::new(population, marked, draws) {
        Ok(h) => h.sample(rng),
        Err(_) => {
            let (mut pop, mut marked_left, mut hits) = (population, marked, 0);
            for _ in 0..draws {
                if rng.random_range(0..pop) < marked_left {
                    marked_left -= 1;
                    hits += 1;
                }
                pop -= 1;
            }
            hits
        }
    }
}

/// A random table with the same row and column totals as `counts`, obtained
/// by dealing the pooled units to locations without replacement.
pub fn shuffle_units(counts: &[Vec<u64>], rng: &mut ChaCha8Rng) -> Vec<Vec<u64>> {
    let s = counts.first().map_or(0, Vec::len);
    let mut pool: Vec<u64> = (0..s).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
    let mut remaining: u64 = pool.iter().sum();
    let mut out = Vec::with_capacity(counts.len());
    for (i, row) in counts.iter().enumerate() {
        let n_row: u64 = row.iter().sum();
        if i + 1 == counts.len() {
            out.push(pool.clone());
            break;
        }
        let mut drawn = vec![0u64; s];
        let mut left = n_row;
        let mut population = remaining;
        for j in 0..s {
            if left == 0 {
                break;
            }
            if pool[j] == 0 {
                continue;
            }
            let k = if pool[j] == population {
                left
            } else {
                hypergeometric(population, pool[j], left, rng)
            };
            drawn[j] = k;
            population -= pool[j];
            pool[j] -= k;
            left -= k;
        }
        remaining -= n_row;
        out.push(drawn);
    }
    out
}

fn counts_matrix(counts: &[Vec<u64>]) -> Matrix {
    let s = counts.first().map_or(0, Vec::len);
    Matrix::from_fn(counts.len(), s, |i, j| counts[i][j] as f64)
}

/// Profiles of an integer table whose row totals are known to be positive.
fn quick_profiles(counts: &Matrix, mode: WeightMode) -> (Matrix, Vector, f64) {
    let rows = counts.column_sum();
    let total = rows.sum();
    let mut x = counts.clone();
    for (i, mut r) in x.row_iter_mut().enumerate() {
        r /= rows[i];
    }
    let l = counts.nrows();
    let w = match mode {
        WeightMode::Abundance => &rows / total,
        WeightMode::Uniform => Vector::from_element(l, 1.0 / l as f64),
    };
    (x, w, total)
}

/// Observed decomposition plus a permutation p-value for its F statistic.
pub fn permutation_test(
    table: &AbundanceTable,
    q: &Matrix,
    opts: &PermutationOptions,
) -> Result<DiversityReport> {
    if opts.replicates < MIN_REPLICATES {
        return Err(Error::TooFewReplicates(opts.replicates));
    }
    let counts = table.integer_counts()?;
    let (observed_table, groups) = match &opts.scheme {
        PermutationScheme::Individuals => (table.clone(), None),
        PermutationScheme::GroupLabels(labels) => {
            if labels.len() != table.n_locations() {
                return Err(Error::DimensionMismatch(format!(
                    "{} group labels for {} locations",
                    labels.len(),
                    table.n_locations()
                )));
            }
            (table.pool_rows(labels)?, Some(labels.clone()))
        }
    };
    let pd = profiles(&observed_table, opts.weight_mode)?;
    let mut report = decompose(&pd, q)?;
    let f_obs = match opts.f_dims {
        None => report.f,
        Some(_) => f_statistic(&pd, q, opts.f_dims)?,
    };
    report.f = f_obs;
    report.f_infinite = f_obs.is_infinite();

    let replicate = |index: usize| -> Result<f64> {
        let mut rng = replicate_rng(opts.seed, index);
        match &groups {
            None => {
                let shuffled = counts_matrix(&shuffle_units(&counts, &mut rng));
                if opts.f_dims.is_none() {
                    let (x, w, total) = quick_profiles(&shuffled, opts.weight_mode);
                    let inertias = inertias_of(&x, &w, q);
                    return Ok(f_from(&inertias, total, x.nrows()).0);
                }
                let t = AbundanceTable::new(
                    shuffled,
                    table.location_labels.clone(),
                    table.species_labels.clone(),
                )?;
                f_statistic(&profiles(&t, opts.weight_mode)?, q, opts.f_dims)
            }
            Some(labels) => {
                let mut shuffled = labels.clone();
                shuffled.shuffle(&mut rng);
                let pooled = table.pool_rows(&shuffled)?;
                f_statistic(&profiles(&pooled, opts.weight_mode)?, q, opts.f_dims)
            }
        }
    };

    let run = || -> Result<Vec<f64>> {
        (0..opts.replicates).into_par_iter().map(replicate).collect()
    };
    let stats = match thread_cap(opts.threads) {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let exceedances = stats
        .iter()
        .filter(|&&f| {
            if f_obs.is_infinite() {
                f.is_infinite()
            } else {
                f >= f_obs - TIE_TOL * f_obs.abs()
            }
        })
        .count();
    report.permutation = Some(PermutationSummary {
        replicates: opts.replicates,
        p_value: (1 + exceedances) as f64 / (1 + opts.replicates) as f64,
        seed: opts.seed,
        scheme: match opts.scheme {
            PermutationScheme::Individuals => SchemeKind::Individuals,
            PermutationScheme::GroupLabels(_) => SchemeKind::GroupLabels,
        },
        exceedances,
    });
    Ok(report)
}
