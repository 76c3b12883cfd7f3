//! Local matrix completion in rank r.
//!
//! A single missing entry `(a, s*)` is estimated from many `(r+1) x (r+1)`
//! sub-patterns ("circuits") made of the query athlete plus `r` donor
//! athletes, restricted to the target event and the `r` events log-closest to
//! it. Under a rank-r model every such sub-matrix is singular, so each circuit
//! yields one estimate by solving `det = 0` for the unknown entry. Each
//! estimate gets the first-order variance proxy
//!
//! ```text
//! v = 1 / |det A0 + det A1| + |det A0| / (det A0 - det A1)^2
//! ```
//!
//! where `A0`/`A1` are the circuit with the unknown set to 0 and 1, and the
//! estimates are averaged with weights `1 / v`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::PerformanceTable;
use crate::error::{Error, Result};
use crate::par;
use crate::seed::{self, stream};

/// Largest supported rank; circuits are at most 5 x 5.
pub const MAX_RANK: usize = 4;
const MAX_DIM: usize = MAX_RANK + 1;
/// Resampling budget for degenerate circuits, as a multiple of `n_circuits`.
const ATTEMPT_FACTOR: usize = 10;
const CV_FOLDS: usize = 5;
/// Validation rows per event subset when weighting the bagged variant.
const CV_MAX_ROWS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSelection {
    LogClosest,
    Bagged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmcConfig {
    pub rank: usize,
    pub n_circuits: usize,
    /// Relative tolerance below which a circuit's cofactor counts as zero.
    pub degeneracy_tol: f64,
    pub seed: u64,
    pub event_selection: EventSelection,
}

impl Default for LmcConfig {
    fn default() -> Self {
        LmcConfig { rank: 2, n_circuits: 400, degeneracy_tol: 1e-12, seed: 0, event_selection: EventSelection::LogClosest }
    }
}

impl LmcConfig {
    pub fn with_rank(rank: usize) -> Self {
        LmcConfig { rank, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_RANK).contains(&self.rank) {
            return Err(Error::invalid(format!("rank must be in 1..={MAX_RANK}, got {}", self.rank)));
        }
        if self.n_circuits == 0 {
            return Err(Error::invalid("n_circuits must be at least 1"));
        }
        if !(self.degeneracy_tol >= 0.0) {
            return Err(Error::invalid("degeneracy_tol must be non-negative"));
        }
        Ok(())
    }
}

/// Outcome of solving one circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircuitSolution {
    pub estimate: f64,
    /// First-order error variance proxy of the estimate.
    pub variance: f64,
    /// Averaging weight, the inverse of `variance`.
    pub weight: f64,
    pub det0: f64,
    pub det1: f64,
}

/// One accepted circuit of a prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSample {
    /// Query athlete first, then the donors.
    pub athlete_rows: Vec<usize>,
    /// Target event first, then the source events.
    pub event_cols: Vec<usize>,
    pub estimate: f64,
    pub variance: f64,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    None,
    LowerRank,
    ColumnMean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmcEstimate {
    pub value: f64,
    /// Rank actually used; 0 for the column-mean fallback.
    pub rank_used: usize,
    pub source_cols: Vec<usize>,
    pub n_circuits: usize,
    pub fallback: Fallback,
}

/// Determinant by Gaussian elimination with partial pivoting; `m` is row-major `n x n`.
fn det_in_place(m: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        let mut piv = k;
        let mut best = m[k * n + k].abs();
        for i in k + 1..n {
            let v = m[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = m[k * n + k];
        det *= d;
        for i in k + 1..n {
            let f = m[i * n + k] / d;
            if f != 0.0 {
                for j in k + 1..n {
                    m[i * n + j] -= f * m[k * n + j];
                }
            }
        }
    }
    det
}

pub fn determinant(m: &[f64], n: usize) -> f64 {
    let mut buf = m.to_vec();
    det_in_place(&mut buf, n)
}

/// Product of the Euclidean norms of the rows other than `mrow`, each taken
/// without column `mcol`. Bounds the cofactor of the unknown (Hadamard).
fn cofactor_scale(m: &[f64], n: usize, mrow: usize, mcol: usize) -> f64 {
    (0..n)
        .filter(|&i| i != mrow)
        .map(|i| (0..n).filter(|&j| j != mcol).map(|j| m[i * n + j] * m[i * n + j]).sum::<f64>().sqrt())
        .product()
}

fn solve_flat(m: &[f64], n: usize, mrow: usize, mcol: usize, tol: f64) -> Result<CircuitSolution> {
    let mut a0 = [0.0; MAX_DIM * MAX_DIM];
    let mut a1 = [0.0; MAX_DIM * MAX_DIM];
    a0[..n * n].copy_from_slice(&m[..n * n]);
    a0[mrow * n + mcol] = 0.0;
    a1[..n * n].copy_from_slice(&a0[..n * n]);
    a1[mrow * n + mcol] = 1.0;
    let scale = cofactor_scale(&a0[..n * n], n, mrow, mcol);
    let d0 = det_in_place(&mut a0[..n * n], n);
    let d1 = det_in_place(&mut a1[..n * n], n);
    let denom = d0 - d1;
    if !(denom.abs() > tol * scale) || !denom.is_finite() {
        return Err(Error::DegenerateCircuit { denominator: denom.abs() });
    }
    let estimate = d0 / denom;
    let variance = 1.0 / (d0 + d1).abs() + d0.abs() / (denom * denom);
    let weight = 1.0 / variance;
    if !(weight.is_finite() && weight > 0.0 && estimate.is_finite()) {
        return Err(Error::DegenerateCircuit { denominator: denom.abs() });
    }
    Ok(CircuitSolution { estimate, variance, weight, det0: d0, det1: d1 })
}

/// Solves `det A = 0` for the single unknown entry of a square grid.
///
/// The value stored at `missing` is ignored. Fails with
/// [`Error::DegenerateCircuit`] when the unknown's cofactor vanishes relative
/// to the Hadamard bound of the remaining rows.
pub fn solve_circuit(grid: &[Vec<f64>], missing: (usize, usize), degeneracy_tol: f64) -> Result<CircuitSolution> {
    let n = grid.len();
    if n == 0 || n > MAX_DIM {
        return Err(Error::invalid(format!("circuit size must be in 1..={MAX_DIM}, got {n}")));
    }
    if grid.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("circuit must be square"));
    }
    let (mr, mc) = missing;
    if mr >= n || mc >= n {
        return Err(Error::invalid("missing position out of range"));
    }
    let mut flat = [0.0; MAX_DIM * MAX_DIM];
    for (i, row) in grid.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if (i, j) != missing && !v.is_finite() {
                return Err(Error::invalid("circuit entries must be finite"));
            }
            flat[i * n + j] = v;
        }
    }
    solve_flat(&flat, n, mr, mc, degeneracy_tol)
}

/// Rows other than `row` with every column in `cols` present and not excluded.
fn donor_rows(table: &PerformanceTable, row: usize, cols: &[usize], excluded: Option<&[bool]>) -> Vec<usize> {
    (0..table.n_athletes())
        .filter(|&i| i != row && !excluded.is_some_and(|e| e[i]))
        .filter(|&i| {
            let r = table.row_raw(i);
            cols.iter().all(|&j| !r[j].is_nan())
        })
        .collect()
}

/// Draws `k` distinct indices below `n` by rejection; `k` is tiny.
fn sample_distinct<R: Rng>(rng: &mut R, n: usize, k: usize, out: &mut [usize]) {
    let mut filled = 0;
    while filled < k {
        let c = rng.random_range(0..n);
        if !out[..filled].contains(&c) {
            out[filled] = c;
            filled += 1;
        }
    }
}

fn subset_code(cols: &[usize]) -> u64 {
    cols.iter().fold(0u64, |acc, &c| acc | (1u64 << c))
}

/// Samples and solves circuits for a fixed choice of source events.
///
/// Returns accepted circuits only; degenerate draws are resampled until
/// `n_circuits` are accepted or the attempt budget is spent.
fn circuits_for_sources(
    table: &PerformanceTable,
    row: usize,
    target: usize,
    sources: &[usize],
    cfg: &LmcConfig,
    excluded: Option<&[bool]>,
    stream_coord: u64,
) -> Vec<CircuitSample> {
    let r = sources.len();
    let n = r + 1;
    let mut cols = Vec::with_capacity(n);
    cols.push(target);
    cols.extend_from_slice(sources);
    let donors = donor_rows(table, row, &cols, excluded);
    if donors.len() < r {
        return Vec::new();
    }
    let query = table.row_raw(row);
    let mut rng = seed::rng_for(
        cfg.seed,
        stream::LMC,
        &[row as u64, target as u64, r as u64, subset_code(sources), stream_coord],
    );
    let mut picks = [0usize; MAX_RANK];
    let mut m = [0.0; MAX_DIM * MAX_DIM];
    let mut out = Vec::with_capacity(cfg.n_circuits);
    let budget = cfg.n_circuits * ATTEMPT_FACTOR;
    let mut attempts = 0;
    while out.len() < cfg.n_circuits && attempts < budget {
        attempts += 1;
        sample_distinct(&mut rng, donors.len(), r, &mut picks);
        m[0] = 0.0;
        for (j, &c) in sources.iter().enumerate() {
            m[j + 1] = query[c];
        }
        for (k, &p) in picks[..r].iter().enumerate() {
            let d = table.row_raw(donors[p]);
            for (j, &c) in cols.iter().enumerate() {
                m[(k + 1) * n + j] = d[c];
            }
        }
        if let Ok(sol) = solve_flat(&m, n, 0, 0, cfg.degeneracy_tol) {
            let mut rows = Vec::with_capacity(n);
            rows.push(row);
            rows.extend(picks[..r].iter().map(|&p| donors[p]));
            out.push(CircuitSample { athlete_rows: rows, event_cols: cols.clone(), estimate: sol.estimate, variance: sol.variance, weight: sol.weight });
        }
    }
    out
}

/// Weighted mean of circuit estimates with Neumaier-compensated sums.
/// Falls back to the median when the total weight underflows.
pub fn combine_circuits(samples: &[CircuitSample]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let (mut sw, mut cw) = (0.0f64, 0.0f64);
    let (mut swm, mut cwm) = (0.0f64, 0.0f64);
    for s in samples {
        neumaier_add(&mut sw, &mut cw, s.weight);
        neumaier_add(&mut swm, &mut cwm, s.weight * s.estimate);
    }
    let total = sw + cw;
    if total < 1e-300 {
        let mut m: Vec<f64> = samples.iter().map(|s| s.estimate).collect();
        return Some(median(&mut m));
    }
    Some((swm + cwm) / total)
}

fn neumaier_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// The `r` present events of `row` log-closest to `target`.
pub fn select_sources(table: &PerformanceTable, row: usize, target: usize, rank: usize) -> Result<Vec<usize>> {
    let present: Vec<usize> = table.present_cols(row).into_iter().filter(|&j| j != target).collect();
    if present.len() < rank {
        return Err(Error::InsufficientAttempts { needed: rank, have: present.len() });
    }
    let mut s = table.catalog().log_closest(target, &present);
    s.truncate(rank);
    Ok(s)
}

/// The accepted circuits that `lmc_predict` would average, at exactly
/// `cfg.rank` with log-closest sources (no fallback).
pub fn sample_circuits(table: &PerformanceTable, row: usize, col: usize, cfg: &LmcConfig) -> Result<Vec<CircuitSample>> {
    cfg.validate()?;
    let sources = select_sources(table, row, col, cfg.rank)?;
    Ok(circuits_for_sources(table, row, col, &sources, cfg, None, 0))
}

fn check_position(table: &PerformanceTable, row: usize, col: usize) -> Result<()> {
    if row >= table.n_athletes() || col >= table.n_events() {
        return Err(Error::invalid(format!("position ({row}, {col}) outside the table")));
    }
    Ok(())
}

/// Estimates entry `(row, col)` by local matrix completion in rank `cfg.rank`.
///
/// The entry's own value, if present, is never read. When fewer than `rank`
/// donor athletes share the selected events, or every sampled circuit is
/// degenerate, the rank is lowered one step at a time; if no rank works the
/// column mean of the other athletes is returned. Both cases are flagged in
/// [`LmcEstimate::fallback`].
pub fn lmc_predict(table: &PerformanceTable, row: usize, col: usize, cfg: &LmcConfig) -> Result<LmcEstimate> {
    cfg.validate()?;
    check_position(table, row, col)?;
    if cfg.event_selection == EventSelection::Bagged {
        return lmc_predict_bagged(table, row, col, cfg).map(|b| b.estimate);
    }
    let sources = select_sources(table, row, col, cfg.rank)?;
    predict_with_fallback(table, row, col, &sources, cfg)
}

fn predict_with_fallback(
    table: &PerformanceTable,
    row: usize,
    col: usize,
    sources: &[usize],
    cfg: &LmcConfig,
) -> Result<LmcEstimate> {
    for r in (1..=sources.len()).rev() {
        let samples = circuits_for_sources(table, row, col, &sources[..r], cfg, None, 0);
        if let Some(value) = combine_circuits(&samples) {
            return Ok(LmcEstimate {
                value,
                rank_used: r,
                source_cols: sources[..r].to_vec(),
                n_circuits: samples.len(),
                fallback: if r == cfg.rank { Fallback::None } else { Fallback::LowerRank },
            });
        }
    }
    column_mean_estimate(table, row, col)
}

fn column_mean_estimate(table: &PerformanceTable, row: usize, col: usize) -> Result<LmcEstimate> {
    let value = table.column_mean_excluding(col, Some(row)).ok_or_else(|| Error::Unpredictable {
        row,
        col,
        reason: "no other athlete has this event".into(),
    })?;
    Ok(LmcEstimate { value, rank_used: 0, source_cols: Vec::new(), n_circuits: 0, fallback: Fallback::ColumnMean })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsetEstimate {
    pub source_cols: Vec<usize>,
    pub value: f64,
    /// Cross-validated mean squared error; `None` without validation rows.
    pub cv_mse: Option<f64>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaggedEstimate {
    pub estimate: LmcEstimate,
    pub subsets: Vec<SubsetEstimate>,
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Cross-validated MSE of predicting `target` from `sources` on other athletes.
fn subset_cv_mse(table: &PerformanceTable, row: usize, target: usize, sources: &[usize], cfg: &LmcConfig) -> Option<f64> {
    let mut cols = vec![target];
    cols.extend_from_slice(sources);
    let mut rows = donor_rows(table, row, &cols, None);
    if rows.len() < CV_FOLDS.max(sources.len() + 1) {
        return None;
    }
    let mut rng = seed::rng_for(cfg.seed, stream::CV, &[row as u64, target as u64, subset_code(sources)]);
    // Partial Fisher-Yates: a reproducible random subset in random order.
    let take = rows.len().min(CV_MAX_ROWS);
    for i in 0..take {
        let j = rng.random_range(i..rows.len());
        rows.swap(i, j);
    }
    rows.truncate(take);
    let mut excluded = vec![false; table.n_athletes()];
    let (mut sse, mut n) = (0.0, 0usize);
    for fold in 0..CV_FOLDS {
        let members: Vec<usize> = rows.iter().enumerate().filter(|(k, _)| k % CV_FOLDS == fold).map(|(_, &r)| r).collect();
        for &m in &members {
            excluded[m] = true;
        }
        for &m in &members {
            let truth = table.get(m, target).expect("validation row has target");
            let samples = circuits_for_sources(table, m, target, sources, cfg, Some(&excluded), 1 + fold as u64);
            if let Some(v) = combine_circuits(&samples) {
                sse += (v - truth).powi(2);
                n += 1;
            }
        }
        for &m in &members {
            excluded[m] = false;
        }
    }
    (n > 0).then(|| sse / n as f64)
}

/// Bagged local matrix completion: one estimate per size-`rank` subset of the
/// athlete's events, combined with weights proportional to the inverse of
/// each subset's 5-fold cross-validated error on the other athletes.
pub fn lmc_predict_bagged(table: &PerformanceTable, row: usize, col: usize, cfg: &LmcConfig) -> Result<BaggedEstimate> {
    cfg.validate()?;
    check_position(table, row, col)?;
    let single = LmcConfig { event_selection: EventSelection::LogClosest, ..cfg.clone() };
    let present: Vec<usize> = table.present_cols(row).into_iter().filter(|&j| j != col).collect();
    if present.len() < cfg.rank {
        return Err(Error::InsufficientAttempts { needed: cfg.rank, have: present.len() });
    }
    if present.len() == cfg.rank {
        let estimate = lmc_predict(table, row, col, &single)?;
        let subsets = vec![SubsetEstimate { source_cols: estimate.source_cols.clone(), value: estimate.value, cv_mse: None, weight: 1.0 }];
        return Ok(BaggedEstimate { estimate, subsets });
    }
    let mut subsets: Vec<SubsetEstimate> = Vec::new();
    let mut circuits = 0;
    for s in combinations(&present, cfg.rank) {
        let samples = circuits_for_sources(table, row, col, &s, &single, None, 0);
        if let Some(value) = combine_circuits(&samples) {
            circuits += samples.len();
            let cv_mse = subset_cv_mse(table, row, col, &s, &single);
            subsets.push(SubsetEstimate { source_cols: s, value, cv_mse, weight: 0.0 });
        }
    }
    if subsets.is_empty() {
        let estimate = lmc_predict(table, row, col, &single)?;
        return Ok(BaggedEstimate { estimate, subsets: Vec::new() });
    }
    assign_inverse_error_weights(&mut subsets);
    let value = subsets.iter().map(|s| s.weight * s.value).sum();
    let best = subsets.iter().max_by(|a, b| a.weight.total_cmp(&b.weight)).expect("non-empty");
    let estimate = LmcEstimate {
        value,
        rank_used: cfg.rank,
        source_cols: best.source_cols.clone(),
        n_circuits: circuits,
        fallback: Fallback::None,
    };
    Ok(BaggedEstimate { estimate, subsets })
}

/// Weights `1/mse`, normalized to sum to one. Subsets with zero error share
/// all the weight; subsets without a CV estimate get the mean of the others'
/// weight, or equal weight when no subset could be validated.
fn assign_inverse_error_weights(subsets: &mut [SubsetEstimate]) {
    let zero: Vec<bool> = subsets.iter().map(|s| s.cv_mse.is_some_and(|m| m <= f64::MIN_POSITIVE)).collect();
    if zero.iter().any(|&z| z) {
        for (s, z) in subsets.iter_mut().zip(&zero) {
            s.weight = if *z { 1.0 } else { 0.0 };
        }
    } else {
        let raw: Vec<Option<f64>> = subsets.iter().map(|s| s.cv_mse.map(|m| 1.0 / m)).collect();
        let known: Vec<f64> = raw.iter().flatten().copied().collect();
        let fill = if known.is_empty() { 1.0 } else { known.iter().sum::<f64>() / known.len() as f64 };
        for (s, w) in subsets.iter_mut().zip(raw) {
            s.weight = w.unwrap_or(fill);
        }
    }
    let total: f64 = subsets.iter().map(|s| s.weight).sum();
    for s in subsets.iter_mut() {
        s.weight /= total;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImputeReport {
    /// Number of imputed entries per rank used, index = rank (0 = column mean).
    pub by_rank: Vec<usize>,
    /// Entries that needed a non-log-closest choice of source events.
    pub alternate_sources: usize,
    /// Entries filled with the column mean.
    pub column_mean_entries: Vec<(usize, usize)>,
    pub passes: usize,
}

#[derive(Clone, Debug)]
pub struct Imputation {
    pub table: PerformanceTable,
    pub report: ImputeReport,
}

/// Candidate source sets for rank `r`: the log-closest first, then every other
/// size-r subset of the athlete's events by increasing squared log-distance.
fn ranked_subsets(table: &PerformanceTable, row: usize, col: usize, r: usize) -> Vec<Vec<usize>> {
    let present: Vec<usize> = table.present_cols(row).into_iter().filter(|&j| j != col).collect();
    if present.len() < r {
        return Vec::new();
    }
    let lt = table.catalog().distance(col).ln();
    let cost = |s: &[usize]| s.iter().map(|&j| (table.catalog().distance(j).ln() - lt).powi(2)).sum::<f64>();
    let closest = {
        let mut c = table.catalog().log_closest(col, &present);
        c.truncate(r);
        c.sort_unstable();
        c
    };
    let mut all = combinations(&present, r);
    all.retain(|s| *s != closest);
    all.sort_by(|a, b| cost(a).total_cmp(&cost(b)));
    let mut out = vec![table.catalog().log_closest(col, &present)[..r].to_vec()];
    out.extend(all);
    out
}

/// Fills every missing entry.
///
/// Entries are imputed in passes. Within a pass every still-missing entry is
/// attempted at the current rank against the table as completed so far, first
/// with the log-closest source events and then with the remaining event
/// subsets; successful entries become available as donor values for the next
/// pass. When a pass makes no progress the rank drops by one. Whatever is left
/// after rank 1 receives the column mean of present entries.
pub fn impute_all(table: &PerformanceTable, cfg: &LmcConfig) -> Result<Imputation> {
    cfg.validate()?;
    let mut current = table.clone();
    let mut report = ImputeReport { by_rank: vec![0; cfg.rank + 1], ..Default::default() };
    let mut pending = table.missing_entries();
    let single = LmcConfig { event_selection: EventSelection::LogClosest, ..cfg.clone() };
    for r in (1..=cfg.rank).rev() {
        loop {
            if pending.is_empty() {
                break;
            }
            report.passes += 1;
            let snapshot = &current;
            let results: Vec<Option<(f64, bool)>> = par::map_slice(&pending, |&(i, j)| {
                ranked_subsets(snapshot, i, j, r).iter().enumerate().find_map(|(k, s)| {
                    let samples = circuits_for_sources(snapshot, i, j, s, &single, None, 0);
                    combine_circuits(&samples).map(|v| (v, k > 0))
                })
            });
            let mut still = Vec::new();
            let mut progressed = false;
            for (&(i, j), res) in pending.iter().zip(results) {
                match res {
                    Some((v, alt)) => {
                        current.set(i, j, Some(v))?;
                        report.by_rank[r] += 1;
                        report.alternate_sources += alt as usize;
                        progressed = true;
                    }
                    None => still.push((i, j)),
                }
            }
            pending = still;
            if !progressed {
                break;
            }
        }
    }
    for &(i, j) in &pending {
        let mean = table.column_mean_excluding(j, Some(i)).ok_or_else(|| Error::Unpredictable {
            row: i,
            col: j,
            reason: "column has no entries".into(),
        })?;
        current.set(i, j, Some(mean))?;
        report.by_rank[0] += 1;
        report.column_mean_entries.push((i, j));
    }
    Ok(Imputation { table: current, report })
}
