//! Leave-one-out validation, error metrics and paired method comparison.

mod report;
mod stats;

use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datamodel::{event_percentiles, reparameterize, Parameterization, PerformanceTable};
use crate::error::{Error, Result};
use crate::predictor::{Method, Predictor};
use crate::{par, seed};

pub use report::{write_comparison_json, write_comparison_tsv, write_report_tsv};
pub use stats::{
    bootstrap_se, mean_abs, metrics, mid_ranks, relative_metrics, rms, wilcoxon_signed_rank, WilcoxonResult,
    WILCOXON_EXACT_BELOW,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    /// The query athlete's other entries are all usable.
    #[default]
    AllRemaining,
    /// Only the query athlete's entries dated strictly before the hidden one.
    CausalPast,
}

impl ValidationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidationMode::AllRemaining => "all_remaining",
            ValidationMode::CausalPast => "causal_past",
        }
    }
}

impl fmt::Display for ValidationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ValidationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "all_remaining" | "all" => Ok(ValidationMode::AllRemaining),
            "causal_past" | "causal" | "past" => Ok(ValidationMode::CausalPast),
            _ => Err(Error::Unknown { kind: "validation mode", name: s.into() }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationSpec {
    pub n_holdouts: usize,
    pub mode: ValidationMode,
    /// Parameterization in which residuals are measured.
    pub metric: Parameterization,
    pub seed: u64,
    pub n_boot: usize,
    /// Only hold out entries whose athlete has at least this many other
    /// attempted events. `None` uses the strictest requirement of the methods.
    pub min_other_events: Option<usize>,
    /// Only hold out entries within this fastest fraction of their event.
    pub fastest_fraction: Option<f64>,
}

impl Default for ValidationSpec {
    fn default() -> Self {
        ValidationSpec {
            n_holdouts: 1000,
            mode: ValidationMode::AllRemaining,
            metric: Parameterization::LogTime,
            seed: 0,
            n_boot: 1000,
            min_other_events: None,
            fastest_fraction: None,
        }
    }
}

impl ValidationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_holdouts == 0 {
            return Err(Error::invalid("n_holdouts must be at least 1"));
        }
        if let Some(f) = self.fastest_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid("fastest_fraction must be in (0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Holdout {
    pub row: usize,
    pub col: usize,
}

/// Order-sensitive fingerprint of a holdout list.
pub fn holdout_hash(holdouts: &[Holdout]) -> u64 {
    let mut h = DefaultHasher::new();
    holdouts.hash(&mut h);
    h.finish()
}

/// Samples holdouts uniformly without replacement among eligible present
/// entries, returned sorted by position.
pub fn sample_holdouts(table: &PerformanceTable, spec: &ValidationSpec, min_other_events: usize) -> Result<Vec<Holdout>> {
    spec.validate()?;
    let pct = spec.fastest_fraction.map(|_| event_percentiles(table));
    let candidates: Vec<Holdout> = table
        .present_entries()
        .into_iter()
        .filter(|&(i, _)| table.n_present(i) > min_other_events)
        .filter(|&(i, j)| match (&pct, spec.fastest_fraction) {
            (Some(p), Some(f)) => p.get(i, j).is_some_and(|v| v >= 100.0 * (1.0 - f)),
            _ => true,
        })
        .map(|(row, col)| Holdout { row, col })
        .collect();
    if candidates.is_empty() {
        return Err(Error::invalid("no eligible entries to hold out"));
    }
    let take = spec.n_holdouts.min(candidates.len());
    let mut rng = seed::rng_for(spec.seed, seed::stream::HOLDOUTS, &[]);
    let mut picked: Vec<Holdout> =
        rand::seq::index::sample(&mut rng, candidates.len(), take).into_iter().map(|k| candidates[k]).collect();
    picked.sort();
    Ok(picked)
}

/// The table a predictor sees for one holdout: the entry hidden and, in
/// causal mode, the athlete's entries not strictly earlier than it removed.
pub fn query_table(table: &PerformanceTable, h: Holdout, mode: ValidationMode) -> Result<PerformanceTable> {
    let mut q = table.masked(h.row, h.col);
    if mode == ValidationMode::CausalPast {
        let Some(at) = table.date(h.row, h.col) else {
            return Err(Error::Unpredictable { row: h.row, col: h.col, reason: "held-out entry has no date".into() });
        };
        for j in table.present_cols(h.row) {
            if table.date(h.row, j).map_or(true, |d| d >= at) {
                q.set(h.row, j, None)?;
            }
        }
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Predicted {
        row: usize,
        col: usize,
        /// Prediction and truth in the metric parameterization.
        predicted: f64,
        truth: f64,
        residual: f64,
        /// `(predicted - true) / true` in seconds.
        relative: f64,
    },
    Skipped {
        row: usize,
        col: usize,
        reason: String,
    },
}

impl Outcome {
    pub fn position(&self) -> Holdout {
        match self {
            Outcome::Predicted { row, col, .. } | Outcome::Skipped { row, col, .. } => Holdout { row: *row, col: *col },
        }
    }

    pub fn residual(&self) -> Option<f64> {
        match self {
            Outcome::Predicted { residual, .. } => Some(*residual),
            Outcome::Skipped { .. } => None,
        }
    }

    pub fn relative(&self) -> Option<f64> {
        match self {
            Outcome::Predicted { relative, .. } => Some(*relative),
            Outcome::Skipped { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub n: usize,
    pub rmse: f64,
    pub mae: f64,
    pub rel_rmse: f64,
    pub rel_mae: f64,
    pub se_rmse: f64,
    pub se_mae: f64,
    pub se_rel_rmse: f64,
    pub se_rel_mae: f64,
}

impl Metrics {
    /// Metrics with bootstrap standard errors; `None` for an empty sample.
    pub fn from_errors(residuals: &[f64], relative: &[f64], n_boot: usize, seed: u64) -> Option<Metrics> {
        let (rmse, mae) = metrics(residuals).ok()?;
        let (rel_rmse, rel_mae) = metrics(relative).ok()?;
        let s = |k: u64| seed::derive(seed, seed::stream::BOOTSTRAP, &[k]);
        Some(Metrics {
            n: residuals.len(),
            rmse,
            mae,
            rel_rmse,
            rel_mae,
            se_rmse: bootstrap_se(residuals, rms, n_boot, s(0)),
            se_mae: bootstrap_se(residuals, mean_abs, n_boot, s(1)),
            se_rel_rmse: bootstrap_se(relative, rms, n_boot, s(2)),
            se_rel_mae: bootstrap_se(relative, mean_abs, n_boot, s(3)),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventBreakdown {
    pub event: String,
    pub n: usize,
    pub rmse: f64,
    pub mae: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub method: String,
    pub mode: ValidationMode,
    pub metric: Parameterization,
    pub seed: u64,
    pub holdout_hash: u64,
    pub n_holdouts: usize,
    pub n_skipped: usize,
    pub metrics: Option<Metrics>,
    pub per_event: Vec<EventBreakdown>,
    pub outcomes: Vec<Outcome>,
}

impl ValidationReport {
    pub fn residuals(&self) -> Vec<f64> {
        self.outcomes.iter().filter_map(Outcome::residual).collect()
    }
}

/// Predicts every holdout with `predictor` and scores it.
pub fn evaluate_holdouts<P: Predictor + ?Sized>(
    table: &PerformanceTable,
    predictor: &P,
    holdouts: &[Holdout],
    spec: &ValidationSpec,
) -> Result<ValidationReport> {
    let metric_table = reparameterize(table, spec.metric)?;
    let outcomes: Vec<Outcome> = par::map_slice(holdouts, |&h| {
        let skipped = |reason: String| Outcome::Skipped { row: h.row, col: h.col, reason };
        let q = match query_table(table, h, spec.mode) {
            Ok(q) => q,
            Err(e) => return skipped(e.to_string()),
        };
        match predictor.predict(&q, h.row, h.col) {
            Ok(v) if v.is_finite() => {
                let t_pred = table.value_to_time(h.col, v);
                let t_true = table.value_to_time(h.col, table.get(h.row, h.col).expect("holdout is present"));
                if !(t_pred > 0.0 && t_pred.is_finite()) {
                    return skipped(format!("prediction {v} is not a valid performance"));
                }
                let predicted = metric_table.time_to_value(h.col, t_pred);
                let truth = metric_table.get(h.row, h.col).expect("holdout is present");
                Outcome::Predicted {
                    row: h.row,
                    col: h.col,
                    predicted,
                    truth,
                    residual: predicted - truth,
                    relative: (t_pred - t_true) / t_true,
                }
            }
            Ok(v) => skipped(format!("non-finite prediction {v}")),
            Err(e) => skipped(e.to_string()),
        }
    });
    Ok(summarize(table, predictor.name(), holdouts, outcomes, spec))
}

fn summarize(
    table: &PerformanceTable,
    method: String,
    holdouts: &[Holdout],
    outcomes: Vec<Outcome>,
    spec: &ValidationSpec,
) -> ValidationReport {
    let res: Vec<f64> = outcomes.iter().filter_map(Outcome::residual).collect();
    let rel: Vec<f64> = outcomes.iter().filter_map(Outcome::relative).collect();
    let per_event = (0..table.n_events())
        .filter_map(|j| {
            let r: Vec<f64> =
                outcomes.iter().filter(|o| o.position().col == j).filter_map(Outcome::residual).collect();
            let (rmse, mae) = metrics(&r).ok()?;
            Some(EventBreakdown { event: table.catalog().label(j).to_string(), n: r.len(), rmse, mae })
        })
        .collect();
    ValidationReport {
        method,
        mode: spec.mode,
        metric: spec.metric,
        seed: spec.seed,
        holdout_hash: holdout_hash(holdouts),
        n_holdouts: holdouts.len(),
        n_skipped: outcomes.len() - res.len(),
        metrics: Metrics::from_errors(&res, &rel, spec.n_boot, spec.seed),
        per_event,
        outcomes,
    }
}

/// Leave-one-out validation of one predictor on seeded holdouts.
pub fn loo_validate<P: Predictor + ?Sized>(
    table: &PerformanceTable,
    predictor: &P,
    spec: &ValidationSpec,
) -> Result<ValidationReport> {
    let holdouts = sample_holdouts(table, spec, spec.min_other_events.unwrap_or(0))?;
    evaluate_holdouts(table, predictor, &holdouts, spec)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairedTest {
    pub method: String,
    pub reference: String,
    /// Holdouts predicted by both methods.
    pub n_common: usize,
    pub method_rmse: Option<f64>,
    pub reference_rmse: Option<f64>,
    pub wilcoxon: Option<WilcoxonResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub setup: String,
    pub reference: String,
    pub holdouts: Vec<Holdout>,
    pub holdout_hash: u64,
    pub reports: Vec<ValidationReport>,
    pub paired: Vec<PairedTest>,
}

/// Paired comparison of absolute errors against the reference report, over
/// the holdouts both predicted.
pub fn paired_test(a: &ValidationReport, reference: &ValidationReport) -> PairedTest {
    let (mut ea, mut eb) = (Vec::new(), Vec::new());
    for (x, y) in a.outcomes.iter().zip(&reference.outcomes) {
        debug_assert_eq!(x.position(), y.position());
        if let (Some(rx), Some(ry)) = (x.residual(), y.residual()) {
            ea.push(rx);
            eb.push(ry);
        }
    }
    let abs = |v: &[f64]| v.iter().map(|r| r.abs()).collect::<Vec<_>>();
    let wilcoxon = (!ea.is_empty()).then(|| wilcoxon_signed_rank(&abs(&ea), &abs(&eb)).ok()).flatten();
    PairedTest {
        method: a.method.clone(),
        reference: reference.method.clone(),
        n_common: ea.len(),
        method_rmse: (!ea.is_empty()).then(|| rms(&ea)),
        reference_rmse: (!eb.is_empty()).then(|| rms(&eb)),
        wilcoxon,
    }
}

/// Runs every predictor on one shared holdout list and tests each against
/// `predictors[reference]`.
pub fn compare_predictors(
    table: &PerformanceTable,
    predictors: &[&dyn Predictor],
    holdouts: Vec<Holdout>,
    spec: &ValidationSpec,
    reference: usize,
) -> Result<Comparison> {
    if reference >= predictors.len() {
        return Err(Error::invalid("reference method index out of range"));
    }
    let reports = predictors
        .iter()
        .map(|p| evaluate_holdouts(table, *p, &holdouts, spec))
        .collect::<Result<Vec<_>>>()?;
    let paired = reports.iter().map(|r| paired_test(r, &reports[reference])).collect();
    Ok(Comparison {
        setup: format!("{}/{}", spec.mode, spec.metric),
        reference: reports[reference].method.clone(),
        holdout_hash: holdout_hash(&holdouts),
        holdouts,
        reports,
        paired,
    })
}

/// Compares methods on shared holdouts. Data-dependent hyper-parameters are
/// resolved once on the table with every holdout hidden.
pub fn compare_methods(
    table: &PerformanceTable,
    methods: &[Method],
    spec: &ValidationSpec,
    reference: usize,
) -> Result<Comparison> {
    let min_other = spec.min_other_events.unwrap_or_else(|| methods.iter().map(Method::min_other_events).max().unwrap_or(0));
    let holdouts = sample_holdouts(table, spec, min_other)?;
    let mut training = table.clone();
    for h in &holdouts {
        training.set(h.row, h.col, None)?;
    }
    let prepared = methods.iter().map(|m| m.prepare(&training)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&dyn Predictor> = prepared.iter().map(|m| m as &dyn Predictor).collect();
    compare_predictors(table, &refs, holdouts, spec, reference)
}
