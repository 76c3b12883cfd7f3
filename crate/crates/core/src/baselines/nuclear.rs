//! Nuclear-norm matrix completion by iterative singular-value soft-thresholding.
//!
//! Minimizes `0.5 * |P_obs(Z + 1 mu^T - M)|^2 + lambda * |Z|_*` over the
//! low-rank part `Z` and unpenalized column offsets `mu`, alternating
//! `Z <- S_lambda(P_obs(M - 1 mu^T) + P_miss(Z))` with the exact `mu` update.
//! With `Z = 0` the offsets are the observed column means.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;

use crate::datamodel::PerformanceTable;
use crate::error::{Error, Result};
use crate::{par, seed};

#[derive(Clone, Debug)]
pub struct SoftImputeConfig {
    /// Relative change between successive iterates that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    pub cv_folds: usize,
    pub cv_grid: usize,
    /// Smallest grid value as a fraction of the largest singular value.
    pub cv_grid_floor: f64,
    pub seed: u64,
}

impl Default for SoftImputeConfig {
    fn default() -> Self {
        SoftImputeConfig { tol: 1e-6, max_iter: 2000, cv_folds: 5, cv_grid: 12, cv_grid_floor: 1e-4, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct SoftImputeResult {
    pub table: PerformanceTable,
    pub lambda: f64,
    /// Objective at the starting point and after every iteration.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Number of singular values surviving the threshold in the returned iterate.
    pub rank: usize,
}

struct Centered {
    n: usize,
    p: usize,
    /// Observed column means, the starting offsets.
    means: Vec<f64>,
    /// Observed values; NaN where missing.
    m: Vec<f64>,
    /// Observed count per column.
    counts: Vec<f64>,
}

fn center(table: &PerformanceTable) -> Result<Centered> {
    let (n, p) = (table.n_athletes(), table.n_events());
    let means = (0..p)
        .map(|j| {
            table.column_mean_excluding(j, None).ok_or_else(|| {
                Error::invalid(format!("column {} has no observed entries", table.catalog().label(j)))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let counts = (0..p).map(|j| table.column_present(j).len() as f64).collect();
    Ok(Centered { n, p, means, m: table.raw().to_vec(), counts })
}

/// Offsets minimizing the fit term for a fixed low-rank part.
fn offsets(c: &Centered, z: &DMatrix<f64>) -> Vec<f64> {
    let mut sums = vec![0.0; c.p];
    for i in 0..c.n {
        for j in 0..c.p {
            let m = c.m[i * c.p + j];
            if !m.is_nan() {
                sums[j] += m - z[(i, j)];
            }
        }
    }
    sums.iter().zip(&c.counts).map(|(s, k)| s / k).collect()
}

/// Soft-thresholds the singular values of `x`, via the eigendecomposition of
/// the small `p x p` Gram matrix. Returns the shrunk matrix, its nuclear norm
/// and rank.
fn shrink(x: &DMatrix<f64>, lambda: f64) -> (DMatrix<f64>, f64, usize) {
    let gram = x.transpose() * x;
    let eig = SymmetricEigen::new(gram);
    let p = x.ncols();
    let mut factors = vec![0.0; p];
    let (mut nuc, mut rank) = (0.0, 0);
    for k in 0..p {
        let s = eig.eigenvalues[k].max(0.0).sqrt();
        let kept = (s - lambda).max(0.0);
        if s > 0.0 && kept > 0.0 {
            factors[k] = kept / s;
            nuc += kept;
            rank += 1;
        }
    }
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(p, p, |a, b| v[(a, b)] * factors[b]);
    let proj = scaled * v.transpose();
    (x * proj, nuc, rank)
}

fn objective(c: &Centered, z: &DMatrix<f64>, mu: &[f64], nuc: f64, lambda: f64) -> f64 {
    let mut fit = 0.0;
    for i in 0..c.n {
        for j in 0..c.p {
            let m = c.m[i * c.p + j];
            if !m.is_nan() {
                fit += (z[(i, j)] + mu[j] - m).powi(2);
            }
        }
    }
    0.5 * fit + lambda * nuc
}

struct Fit {
    z: DMatrix<f64>,
    mu: Vec<f64>,
    objective: Vec<f64>,
    iterations: usize,
    converged: bool,
    rank: usize,
}

fn run(c: &Centered, lambda: f64, cfg: &SoftImputeConfig, warm: Option<(DMatrix<f64>, Vec<f64>)>) -> Fit {
    let (mut z, mut mu) = warm.unwrap_or_else(|| (DMatrix::zeros(c.n, c.p), c.means.clone()));
    let warm_nuc = if z.iter().all(|v| *v == 0.0) { 0.0 } else { nuclear_norm(&z) };
    let mut obj = vec![objective(c, &z, &mu, warm_nuc, lambda)];
    let (mut best, mut best_mu, mut best_obj, mut best_rank) = (z.clone(), mu.clone(), obj[0], 0);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let x = DMatrix::from_fn(c.n, c.p, |i, j| {
            let m = c.m[i * c.p + j];
            if m.is_nan() { z[(i, j)] } else { m - mu[j] }
        });
        let (next, nuc, rank) = shrink(&x, lambda);
        let next_mu = offsets(c, &next);
        iterations += 1;
        let f = objective(c, &next, &next_mu, nuc, lambda);
        obj.push(f);
        let diff = ((&next - &z).norm_squared()
            + c.counts.iter().zip(next_mu.iter().zip(&mu)).map(|(k, (a, b))| k * (a - b).powi(2)).sum::<f64>())
        .sqrt();
        let scale = (z.norm_squared() + c.counts.iter().zip(&mu).map(|(k, a)| k * a * a).sum::<f64>()).sqrt();
        z = next;
        mu = next_mu;
        if f <= best_obj {
            best_obj = f;
            best = z.clone();
            best_mu = mu.clone();
            best_rank = rank;
        }
        if diff == 0.0 || diff <= cfg.tol * scale {
            converged = true;
            best = z.clone();
            best_mu = mu.clone();
            best_rank = rank;
            break;
        }
    }
    Fit { z: best, mu: best_mu, objective: obj, iterations, converged, rank: best_rank }
}

fn nuclear_norm(z: &DMatrix<f64>) -> f64 {
    z.singular_values().iter().sum()
}

fn finish(table: &PerformanceTable, fit: &Fit) -> Result<PerformanceTable> {
    let mut out = table.clone();
    for (i, j) in table.missing_entries() {
        out.set(i, j, Some(fit.z[(i, j)] + fit.mu[j]))?;
    }
    Ok(out)
}

/// Starting point from a complete table: offsets at the observed means and
/// the remainder as the low-rank part.
fn warm_start(c: &Centered, warm: Option<&PerformanceTable>) -> Result<Option<(DMatrix<f64>, Vec<f64>)>> {
    let Some(w) = warm else { return Ok(None) };
    if w.n_athletes() != c.n || w.n_events() != c.p || !w.is_complete() {
        return Err(Error::invalid("warm start must be a complete table of the same shape"));
    }
    Ok(Some((DMatrix::from_fn(c.n, c.p, |i, j| w.get(i, j).unwrap() - c.means[j]), c.means.clone())))
}

/// Completes the table at regularization `lambda`. Values are used in the
/// table's own parameterization. Observed entries are returned unchanged.
pub fn nuclear_norm_impute(table: &PerformanceTable, lambda: f64, cfg: &SoftImputeConfig) -> Result<SoftImputeResult> {
    soft_impute_from(table, lambda, cfg, None)
}

/// As [`nuclear_norm_impute`], starting the iteration from a complete table.
pub fn soft_impute_from(
    table: &PerformanceTable,
    lambda: f64,
    cfg: &SoftImputeConfig,
    warm: Option<&PerformanceTable>,
) -> Result<SoftImputeResult> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda must be finite and non-negative"));
    }
    if table.n_present_total() == 0 {
        return Err(Error::invalid("soft-impute needs at least one observed entry"));
    }
    let c = center(table)?;
    let w = warm_start(&c, warm)?;
    let fit = run(&c, lambda, cfg, w);
    Ok(SoftImputeResult {
        table: finish(table, &fit)?,
        lambda,
        iterations: fit.iterations,
        converged: fit.converged,
        rank: fit.rank,
        objective: fit.objective,
    })
}

/// Largest singular value of the centered, zero-filled table.
pub fn top_singular_value(table: &PerformanceTable) -> Result<f64> {
    let c = center(table)?;
    let x = DMatrix::from_fn(c.n, c.p, |i, j| {
        let v = c.m[i * c.p + j];
        if v.is_nan() { 0.0 } else { v - c.means[j] }
    });
    Ok(x.singular_values().max())
}

/// Picks lambda by k-fold cross-validation over observed entries on a
/// log-spaced grid below the top singular value. Ties go to the larger lambda.
pub fn select_lambda_cv(table: &PerformanceTable, cfg: &SoftImputeConfig) -> Result<f64> {
    let folds = cfg.cv_folds.max(2);
    let mut entries = table.present_entries();
    if entries.len() < folds {
        return Err(Error::invalid("too few observed entries for cross-validation"));
    }
    entries.shuffle(&mut seed::rng_for(cfg.seed, seed::stream::CV, &[0]));
    let top = top_singular_value(table)?;
    let k = cfg.cv_grid.max(2);
    let grid: Vec<f64> =
        (0..k).map(|g| top * cfg.cv_grid_floor.powf(g as f64 / (k - 1) as f64)).collect();
    let per_fold: Vec<Result<Vec<f64>>> = par::map_range(folds, |f| {
        let held: Vec<(usize, usize)> = entries.iter().copied().skip(f).step_by(folds).collect();
        let mut train = table.clone();
        for &(i, j) in &held {
            train.set(i, j, None)?;
        }
        let c = center(&train)?;
        let mut warm = None;
        let mut errs = Vec::with_capacity(grid.len());
        for &lambda in &grid {
            let fit = run(&c, lambda, cfg, warm.take());
            let sse: f64 =
                held.iter().map(|&(i, j)| (fit.z[(i, j)] + fit.mu[j] - table.get(i, j).unwrap()).powi(2)).sum();
            errs.push(sse);
            warm = Some((fit.z, fit.mu));
        }
        Ok(errs)
    });
    let mut total = vec![0.0; grid.len()];
    for errs in per_fold {
        for (t, e) in total.iter_mut().zip(errs?) {
            *t += e;
        }
    }
    let best = (0..grid.len()).fold(0, |b, g| if total[g] < total[b] { g } else { b });
    Ok(grid[best])
}
