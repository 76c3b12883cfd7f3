//! Fair-race distance, pivot experiment and optimal event.

use rand::Rng;
use serde::Serialize;

use crate::datamodel::{percentile_against, reparameterize, AthleteMeta, Parameterization, PerformanceTable, MILE_METERS};
use crate::error::{Error, Result};
use crate::lmc::{self, LmcConfig};
use crate::predictor::Predictor;
use crate::{par, seed};

/// Observed log-times of `row`, with every missing event predicted.
fn completed_log_times(table: &PerformanceTable, row: usize, predictor: &dyn Predictor) -> Result<Vec<f64>> {
    (0..table.n_events())
        .map(|j| {
            let v = match table.get(row, j) {
                Some(v) => v,
                None => predictor.predict(table, row, j)?,
            };
            let t = table.value_to_time(j, v);
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Numerical(format!("invalid predicted time {t} at row {row}, event {j}")));
            }
            Ok(t.ln())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Crossing {
    /// Meters.
    pub distance: f64,
    /// Catalog columns bracketing the crossing.
    pub shorter: usize,
    pub longer: usize,
    /// Sign changes of the time difference along the catalog.
    pub n_crossings: usize,
}

/// First crossing of two log-time curves, interpolated linearly in
/// log-distance. Symmetric in the two curves.
pub fn curve_crossing(log_d: &[f64], a: &[f64], b: &[f64]) -> Result<Crossing> {
    let g: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let Some(first) = g.iter().position(|v| *v != 0.0) else {
        return Err(Error::NoFairRace("the two athletes are equally fast at every event".into()));
    };
    let mut found: Option<Crossing> = None;
    let mut n_crossings = 0;
    let mut last = first;
    for j in first + 1..g.len() {
        if g[j] == 0.0 {
            continue;
        }
        if g[j].signum() != g[last].signum() {
            n_crossings += 1;
            if found.is_none() {
                let x = if let Some(z) = (last + 1..j).find(|&k| g[k] == 0.0) {
                    log_d[z]
                } else {
                    log_d[last] + g[last] * (log_d[j] - log_d[last]) / (g[last] - g[j])
                };
                found = Some(Crossing { distance: x.exp(), shorter: last, longer: j, n_crossings: 0 });
            }
        }
        last = j;
    }
    let mut c = found.ok_or_else(|| Error::NoFairRace("one athlete is faster at every event".into()))?;
    c.n_crossings = n_crossings;
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FairRaceResult {
    pub distance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub shorter_event: String,
    pub longer_event: String,
    pub n_crossings: usize,
    pub multiple_crossings: bool,
    /// Bootstrap replicates that produced a crossing.
    pub n_boot_ok: usize,
}

fn crossing_for(table: &PerformanceTable, a: usize, b: usize, predictor: &dyn Predictor) -> Result<Crossing> {
    let log_d = table.catalog().log_distances();
    let ca = completed_log_times(table, a, predictor)?;
    let cb = completed_log_times(table, b, predictor)?;
    curve_crossing(&log_d, &ca, &cb)
}

/// Distance at which athletes `a` and `b` are predicted equally fast, with a
/// 90% interval from resampling the other athletes with replacement.
///
/// The interval is widened to contain the point estimate when the bootstrap
/// quantiles miss it.
pub fn fair_race(
    table: &PerformanceTable,
    a: usize,
    b: usize,
    predictor: &dyn Predictor,
    n_boot: usize,
    seed: u64,
) -> Result<FairRaceResult> {
    let n = table.n_athletes();
    if a >= n || b >= n {
        return Err(Error::invalid("athlete row outside the table"));
    }
    if a == b {
        return Err(Error::NoFairRace("an athlete cannot race themselves".into()));
    }
    let c = crossing_for(table, a, b, predictor)?;
    let others: Vec<usize> = (0..n).filter(|&i| i != a && i != b).collect();
    // Rows in a fixed order so the result does not depend on which athlete is "a".
    let (lo_row, hi_row) = (a.min(b), a.max(b));
    let boots: Vec<Option<f64>> = par::map_range(n_boot, |k| {
        let mut rng = seed::rng_for(seed, seed::stream::FAIR_RACE, &[k as u64]);
        let mut rows = vec![lo_row, hi_row];
        if !others.is_empty() {
            rows.extend((0..others.len()).map(|_| others[rng.random_range(0..others.len())]));
        }
        let t = table.select_rows(&rows);
        crossing_for(&t, 0, 1, predictor).ok().map(|c| c.distance)
    });
    let mut ok: Vec<f64> = boots.into_iter().flatten().collect();
    ok.sort_by(f64::total_cmp);
    let (q05, q95) = if ok.is_empty() { (c.distance, c.distance) } else { (quantile(&ok, 0.05), quantile(&ok, 0.95)) };
    let cat = table.catalog();
    Ok(FairRaceResult {
        distance: c.distance,
        ci_low: q05.min(c.distance),
        ci_high: q95.max(c.distance),
        shorter_event: cat.label(c.shorter).to_string(),
        longer_event: cat.label(c.longer).to_string(),
        n_crossings: c.n_crossings,
        multiple_crossings: c.n_crossings > 1,
        n_boot_ok: ok.len(),
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, f) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() { sorted[i] + f * (sorted[i + 1] - sorted[i]) } else { sorted[i] }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PivotTriple {
    pub shorter: String,
    pub middle: String,
    pub longer: String,
    pub epsilons: Vec<f64>,
    /// Relative change of the predicted longer-distance time per epsilon.
    pub relative_change: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PivotResult {
    /// Equivalent performances in seconds, one per event.
    pub benchmark: Vec<f64>,
    pub triples: Vec<PivotTriple>,
}

/// `-0.10, -0.09, ..., 0.10`.
pub fn default_epsilons() -> Vec<f64> {
    (-10..=10).map(|k| k as f64 / 100.0).collect()
}

/// Perturbation response of rank-2 predictions.
///
/// Equivalent performances are chained down from the marathon benchmark by
/// rank-1 completion (each event predicted from the next longer one). For
/// every consecutive triple of events, skipping the Mile, the shorter time is
/// scaled by `1 + eps` and the longer one is predicted in rank 2 from the
/// shorter and middle times. Circuits are seeded identically for every
/// `eps`, so `eps = 0` gives exactly zero change.
pub fn pivot_experiment(table: &PerformanceTable, benchmark_marathon: f64, epsilons: &[f64], seed: u64) -> Result<PivotResult> {
    if !(benchmark_marathon > 0.0) {
        return Err(Error::invalid("benchmark time must be positive"));
    }
    let mut log = reparameterize(table, Parameterization::LogTime)?;
    let p = log.n_events();
    let cat = log.catalog().clone();
    let last = p - 1;
    let chain_row = log.push_row(AthleteMeta::anonymous(u64::MAX));
    log.set(chain_row, last, Some(benchmark_marathon.ln()))?;
    let rank1 = LmcConfig { rank: 1, seed, ..Default::default() };
    for j in (0..last).rev() {
        let v = lmc::lmc_predict(&log, chain_row, j, &rank1)?.value;
        log.set(chain_row, j, Some(v))?;
    }
    let bench_log: Vec<f64> = (0..p).map(|j| log.get(chain_row, j).expect("chained")).collect();

    let cols: Vec<usize> = (0..p).filter(|&j| (cat.distance(j) - MILE_METERS).abs() > 1e-9).collect();
    let rank2 = LmcConfig { rank: 2, seed, ..Default::default() };
    let mut triples = Vec::new();
    for w in cols.windows(3) {
        let (s, m, l) = (w[0], w[1], w[2]);
        let mut base = log.clone();
        let row = chain_row;
        for j in 0..p {
            base.set(row, j, None)?;
        }
        base.set(row, m, Some(bench_log[m]))?;
        let predict = |eps: f64| -> Result<f64> {
            let mut t = base.clone();
            t.set(row, s, Some(bench_log[s] + (1.0 + eps).ln()))?;
            Ok(lmc::lmc_predict(&t, row, l, &rank2)?.value.exp())
        };
        let t0 = predict(0.0)?;
        let relative_change =
            epsilons.iter().map(|&e| if e == 0.0 { Ok(0.0) } else { predict(e).map(|t| (t - t0) / t0) }).collect::<Result<_>>()?;
        triples.push(PivotTriple {
            shorter: cat.label(s).to_string(),
            middle: cat.label(m).to_string(),
            longer: cat.label(l).to_string(),
            epsilons: epsilons.to_vec(),
            relative_change,
        });
    }
    Ok(PivotResult { benchmark: bench_log.iter().map(|v| v.exp()).collect(), triples })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalDistance {
    pub event: usize,
    pub label: String,
    /// Predicted value per event, in the table's parameterization.
    pub predicted: Vec<f64>,
    /// Percentile of each prediction among the other athletes' entries.
    pub percentiles: Vec<f64>,
}

/// The event at which the athlete would reach their best percentile. Every
/// event is predicted with the athlete's own entry there hidden; ties go to
/// the shorter distance.
pub fn optimal_distance(table: &PerformanceTable, athlete: usize, predictor: &dyn Predictor) -> Result<OptimalDistance> {
    if athlete >= table.n_athletes() {
        return Err(Error::invalid("athlete row outside the table"));
    }
    let hib = table.parameterization().higher_is_better();
    let mut predicted = Vec::with_capacity(table.n_events());
    let mut percentiles = Vec::with_capacity(table.n_events());
    for j in 0..table.n_events() {
        let v = predictor.predict(&table.masked(athlete, j), athlete, j)?;
        let others: Vec<f64> = (0..table.n_athletes()).filter(|&i| i != athlete).filter_map(|i| table.get(i, j)).collect();
        predicted.push(v);
        percentiles.push(percentile_against(&others, v, hib));
    }
    let event = (0..percentiles.len()).fold(0, |b, j| if percentiles[j] > percentiles[b] { j } else { b });
    Ok(OptimalDistance { event, label: table.catalog().label(event).to_string(), predicted, percentiles })
}
