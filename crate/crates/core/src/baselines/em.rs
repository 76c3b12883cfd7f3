//! Multivariate Gaussian imputation by expectation maximization.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::datamodel::{Parameterization, PerformanceTable};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct EmConfig {
    /// Stop once the log-likelihood grows by less than this fraction.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Diagonal ridge, as a multiple of trace/dim, applied once the covariance
    /// stops being positive definite.
    pub ridge: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig { rel_tol: 1e-3, max_iter: 500, ridge: 1e-8 }
    }
}

#[derive(Clone, Debug)]
pub struct EmResult {
    pub table: PerformanceTable,
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Observed-data log-likelihood before each update and after the last one.
    pub loglik: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub ridged: bool,
}

/// Rows grouped by their observed-column pattern.
struct Patterns {
    groups: Vec<(Vec<usize>, Vec<usize>, Vec<usize>)>,
}

impl Patterns {
    fn new(table: &PerformanceTable) -> Self {
        let p = table.n_events();
        let mut map: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
        for i in 0..table.n_athletes() {
            let key: Vec<bool> = (0..p).map(|j| table.is_present(i, j)).collect();
            map.entry(key).or_default().push(i);
        }
        let groups = map
            .into_iter()
            .map(|(key, rows)| {
                let obs = (0..p).filter(|&j| key[j]).collect();
                let mis = (0..p).filter(|&j| !key[j]).collect();
                (obs, mis, rows)
            })
            .collect();
        Patterns { groups }
    }
}

fn sub(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl Gaussian {
    fn chol(&self, obs: &[usize]) -> Option<Cholesky<f64, Dyn>> {
        Cholesky::new(sub(&self.cov, obs, obs))
    }

    fn loglik(&self, table: &PerformanceTable, pats: &Patterns) -> Option<f64> {
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        let mut total = 0.0;
        for (obs, _, rows) in &pats.groups {
            if obs.is_empty() {
                continue;
            }
            let ch = self.chol(obs)?;
            let logdet = 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            for &i in rows {
                let r = DVector::from_fn(obs.len(), |a, _| table.get(i, obs[a]).unwrap() - self.mean[obs[a]]);
                let q = r.dot(&ch.solve(&r));
                total -= 0.5 * (obs.len() as f64 * ln2pi + logdet + q);
            }
        }
        Some(total)
    }

    /// E-step followed by M-step; returns the conditional-mean completion.
    fn update(&self, table: &PerformanceTable, pats: &Patterns) -> Option<(Gaussian, Vec<f64>)> {
        let (n, p) = (table.n_athletes(), table.n_events());
        let mut filled = table.raw().to_vec();
        let mut extra = DMatrix::<f64>::zeros(p, p);
        for (obs, mis, rows) in &pats.groups {
            if mis.is_empty() {
                continue;
            }
            let s_mm = sub(&self.cov, mis, mis);
            if obs.is_empty() {
                for &i in rows {
                    for &j in mis {
                        filled[i * p + j] = self.mean[j];
                    }
                }
                add_block(&mut extra, mis, &s_mm, rows.len() as f64);
                continue;
            }
            let ch = self.chol(obs)?;
            let s_om = sub(&self.cov, obs, mis);
            // B = S_oo^-1 S_om, so the regression of missing on observed is B^T.
            let b = ch.solve(&s_om);
            let cond = &s_mm - s_om.transpose() * &b;
            for &i in rows {
                let r = DVector::from_fn(obs.len(), |a, _| table.get(i, obs[a]).unwrap() - self.mean[obs[a]]);
                let shift = b.transpose() * r;
                for (a, &j) in mis.iter().enumerate() {
                    filled[i * p + j] = self.mean[j] + shift[a];
                }
            }
            add_block(&mut extra, mis, &cond, rows.len() as f64);
        }
        let x = DMatrix::from_row_slice(n, p, &filled);
        let g = moments(&x, &extra);
        Some((g, filled))
    }
}

fn add_block(acc: &mut DMatrix<f64>, idx: &[usize], block: &DMatrix<f64>, times: f64) {
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            acc[(i, j)] += times * block[(a, b)];
        }
    }
}

fn moments(x: &DMatrix<f64>, extra: &DMatrix<f64>) -> Gaussian {
    let n = x.nrows() as f64;
    let mean = DVector::from_fn(x.ncols(), |j, _| x.column(j).sum() / n);
    let mut c = x.clone();
    for j in 0..x.ncols() {
        c.column_mut(j).add_scalar_mut(-mean[j]);
    }
    let cov = (c.transpose() * &c + extra) / n;
    Gaussian { mean, cov }
}

fn add_ridge(g: &mut Gaussian, ridge: f64) {
    let p = g.cov.nrows();
    let eps = ridge * g.cov.trace().max(f64::MIN_POSITIVE) / p as f64;
    for j in 0..p {
        g.cov[(j, j)] += eps;
    }
}

/// Fits a Gaussian to a log-time table by EM, starting from column-mean
/// filling, and returns the conditional-mean completion.
pub fn em_impute(table: &PerformanceTable, cfg: &EmConfig) -> Result<EmResult> {
    if table.parameterization() != Parameterization::LogTime {
        return Err(Error::invalid("EM imputation expects a log-time table"));
    }
    let (n, p) = (table.n_athletes(), table.n_events());
    if n < 2 {
        return Err(Error::invalid("EM imputation needs at least two rows"));
    }
    let mut init = table.raw().to_vec();
    for j in 0..p {
        let m = table.column_mean_excluding(j, None).ok_or_else(|| {
            Error::invalid(format!("column {} has no observed entries", table.catalog().label(j)))
        })?;
        for i in 0..n {
            if init[i * p + j].is_nan() {
                init[i * p + j] = m;
            }
        }
    }
    let pats = Patterns::new(table);
    let mut g = moments(&DMatrix::from_row_slice(n, p, &init), &DMatrix::zeros(p, p));
    let mut filled = init;
    let mut ridged = false;

    let mut loglik = Vec::new();
    let mut ll = loop {
        match g.loglik(table, &pats) {
            Some(ll) => break ll,
            None if !ridged => {
                ridged = true;
                add_ridge(&mut g, cfg.ridge);
            }
            None => return Err(Error::Numerical("covariance not positive definite after ridge".into())),
        }
    };
    loglik.push(ll);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        if pats.groups.iter().all(|(_, mis, _)| mis.is_empty()) {
            converged = true;
            break;
        }
        let step = g.update(table, &pats).and_then(|(mut next, f)| {
            if ridged {
                add_ridge(&mut next, cfg.ridge);
            }
            next.loglik(table, &pats).map(|l| (next, f, l))
        });
        let (next, f, next_ll) = match step {
            Some(s) => s,
            None if !ridged => {
                ridged = true;
                add_ridge(&mut g, cfg.ridge);
                ll = g.loglik(table, &pats).ok_or_else(|| Error::Numerical("covariance not positive definite after ridge".into()))?;
                *loglik.last_mut().unwrap() = ll;
                continue;
            }
            None => return Err(Error::Numerical("covariance not positive definite after ridge".into())),
        };
        iterations += 1;
        g = next;
        filled = f;
        loglik.push(next_ll);
        let gain = next_ll - ll;
        ll = next_ll;
        if gain <= cfg.rel_tol * ll.abs() {
            converged = true;
            break;
        }
    }
    let mut out = table.clone();
    for (i, j) in table.missing_entries() {
        out.set(i, j, Some(filled[i * p + j]))?;
    }
    Ok(EmResult {
        table: out,
        mean: g.mean.iter().copied().collect(),
        covariance: g.cov,
        loglik,
        iterations,
        converged,
        ridged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::EventCatalog;

    #[test]
    fn complete_table_is_unchanged() {
        let rows: Vec<Vec<Option<f64>>> =
            (0..6).map(|i| (0..10).map(|j| Some(((i * 7 + j * 3) % 11) as f64 * 0.1 + j as f64)).collect()).collect();
        let t = PerformanceTable::from_rows(EventCatalog::standard(), &rows, Parameterization::LogTime).unwrap();
        let r = em_impute(&t, &EmConfig::default()).unwrap();
        assert_eq!(r.table.raw(), t.raw());
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn rejects_non_log_time() {
        let t = PerformanceTable::from_rows(EventCatalog::standard(), &vec![vec![Some(1.0); 10]; 2], Parameterization::Time)
            .unwrap();
        assert!(em_impute(&t, &EmConfig::default()).is_err());
    }
}
