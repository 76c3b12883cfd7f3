use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{Datelike, Duration, NaiveDate};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RawAttempt;
use crate::datamodel::{event_percentiles, AthleteMeta, EventCatalog, Parameterization, PerformanceTable};
use crate::error::Result;
use crate::seed;

/// Length of the window ending at the best event in `best` collation.
pub const BEST_WINDOW_DAYS: i64 = 365;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollateMode {
    #[default]
    Best,
    Random,
}

/// Attempts at catalog events grouped per row. Rows follow `athletes`, then
/// any athlete ids only seen in attempts, ascending.
struct Grouped {
    athletes: Vec<AthleteMeta>,
    /// Per row: (column, date, seconds).
    rows: Vec<Vec<(usize, Option<NaiveDate>, f64)>>,
}

fn group(attempts: &[RawAttempt], athletes: &[AthleteMeta], catalog: &EventCatalog) -> Grouped {
    let mut metas: Vec<AthleteMeta> = athletes.to_vec();
    let mut index: HashMap<u64, usize> = HashMap::new();
    for (i, m) in metas.iter().enumerate() {
        index.entry(m.athlete_id).or_insert(i);
    }
    let extra: BTreeSet<u64> = attempts.iter().map(|a| a.athlete_id).filter(|id| !index.contains_key(id)).collect();
    for id in extra {
        index.insert(id, metas.len());
        metas.push(AthleteMeta::anonymous(id));
    }
    let mut rows = vec![Vec::new(); metas.len()];
    for a in attempts {
        if let Some(j) = catalog.index_of(&a.event) {
            rows[index[&a.athlete_id]].push((j, a.date, a.performance));
        }
    }
    Grouped { athletes: metas, rows }
}

/// Fastest attempt per column among `picked`.
fn fill_row(table: &mut PerformanceTable, row: usize, picked: impl Iterator<Item = (usize, Option<NaiveDate>, f64)>) -> Result<()> {
    let mut best: BTreeMap<usize, (f64, Option<NaiveDate>)> = BTreeMap::new();
    for (j, d, t) in picked {
        let e = best.entry(j).or_insert((t, d));
        if t < e.0 {
            *e = (t, d);
        }
    }
    for (j, (t, d)) in best {
        table.set(row, j, Some(t))?;
        table.set_date(row, j, d);
    }
    Ok(())
}

/// Percentile of every attempt against all attempts at the same event.
fn attempt_percentiles(g: &Grouped, catalog: &EventCatalog) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); catalog.len()];
    for r in &g.rows {
        for &(j, _, t) in r {
            cols[j].push(t);
        }
    }
    for c in cols.iter_mut() {
        c.sort_by(f64::total_cmp);
    }
    g.rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&(j, _, t)| {
                    let c = &cols[j];
                    let n = c.len();
                    if n == 1 {
                        return 50.0;
                    }
                    let faster_or_equal = c.partition_point(|&x| x <= t);
                    let ties = faster_or_equal - c.partition_point(|&x| x < t);
                    let slower = n - faster_or_equal;
                    100.0 * (slower as f64 + (ties as f64 - 1.0) / 2.0) / (n as f64 - 1.0)
                })
                .collect()
        })
        .collect()
}

/// One row per athlete: the fastest time per event within the year ending at
/// the athlete's best event (highest percentile; ties to the earlier date,
/// then the shorter distance).
pub fn collate_best(attempts: &[RawAttempt], athletes: &[AthleteMeta], catalog: &EventCatalog) -> Result<PerformanceTable> {
    let g = group(attempts, athletes, catalog);
    let pct = attempt_percentiles(&g, catalog);
    let mut table = PerformanceTable::empty(catalog.clone(), g.athletes.clone(), Parameterization::Time);
    for (i, row) in g.rows.iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        let best = (0..row.len())
            .min_by(|&a, &b| {
                pct[i][b]
                    .total_cmp(&pct[i][a])
                    .then_with(|| match (row[a].1, row[b].1) {
                        (Some(x), Some(y)) => x.cmp(&y),
                        (Some(_), None) => std::cmp::Ordering::Less,
                        (None, Some(_)) => std::cmp::Ordering::Greater,
                        (None, None) => std::cmp::Ordering::Equal,
                    })
                    .then(row[a].0.cmp(&row[b].0))
            })
            .expect("non-empty row");
        match row[best].1 {
            Some(end) => {
                let start = end - Duration::days(BEST_WINDOW_DAYS);
                fill_row(&mut table, i, row.iter().copied().filter(|a| a.1.is_some_and(|d| d > start && d <= end)))?;
            }
            None => fill_row(&mut table, i, std::iter::once(row[best]))?,
        }
    }
    Ok(table)
}

/// One row per athlete: the fastest time per event within one calendar year
/// drawn uniformly from the years with a dated attempt. The draw depends only
/// on the seed and the athlete id.
pub fn collate_random(
    attempts: &[RawAttempt],
    athletes: &[AthleteMeta],
    catalog: &EventCatalog,
    seed: u64,
) -> Result<PerformanceTable> {
    let g = group(attempts, athletes, catalog);
    let mut table = PerformanceTable::empty(catalog.clone(), g.athletes.clone(), Parameterization::Time);
    for (i, row) in g.rows.iter().enumerate() {
        let years: Vec<i32> = row.iter().filter_map(|a| a.1.map(|d| d.year())).collect::<BTreeSet<_>>().into_iter().collect();
        if years.is_empty() {
            continue;
        }
        let mut rng = seed::rng_for(seed, seed::stream::COLLATE, &[g.athletes[i].athlete_id]);
        let year = years[rng.random_range(0..years.len())];
        fill_row(&mut table, i, row.iter().copied().filter(|a| a.1.is_some_and(|d| d.year() == year)))?;
    }
    Ok(table)
}

/// Drops the `ceil(0.05 n)` rows with the widest spread between their best and
/// worst event percentile; ties at the cutoff drop the larger row index first.
/// Returns the kept table and the removed row indices, ascending.
pub fn remove_outliers(table: &PerformanceTable) -> (PerformanceTable, Vec<usize>) {
    let n = table.n_athletes();
    let pct = event_percentiles(table);
    let mut scored: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let p: Vec<f64> = pct.row(i).into_iter().flatten().collect();
            let score = if p.is_empty() {
                0.0
            } else {
                p.iter().copied().fold(f64::MIN, f64::max) - p.iter().copied().fold(f64::MAX, f64::min)
            };
            (score, i)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
    let k = (n * 5).div_ceil(100);
    let mut removed: Vec<usize> = scored[..k].iter().map(|s| s.1).collect();
    removed.sort_unstable();
    let keep: Vec<usize> = (0..n).filter(|i| removed.binary_search(i).is_err()).collect();
    (table.select_rows(&keep), removed)
}
