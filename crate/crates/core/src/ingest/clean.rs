use std::collections::{BTreeMap, HashMap};

use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use super::RawAttempt;
use crate::datamodel::{AthleteMeta, EventCatalog};
use crate::lowrank::RecordHistory;

#[derive(Clone, Debug, PartialEq)]
pub struct CleaningConfig {
    pub world_records: RecordHistory,
    /// Attempts slower than this multiple of the event median are dropped.
    pub slow_threshold_factor: f64,
    /// Birth dates implying a younger age at any attempt are dropped.
    pub min_age_years: u32,
    pub sentinel_birth_date: NaiveDate,
    pub sentinel_attempt_dates: Vec<NaiveDate>,
    pub catalog: EventCatalog,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            world_records: RecordHistory::bundled().clone(),
            slow_threshold_factor: 3.0,
            min_age_years: 9,
            sentinel_birth_date: NaiveDate::from_ymd_opt(1900, 1, 1).expect("valid date"),
            sentinel_attempt_dates: vec![
                NaiveDate::from_ymd_opt(1901, 1, 1).expect("valid date"),
                NaiveDate::from_ymd_opt(2038, 8, 20).expect("valid date"),
            ],
            catalog: EventCatalog::standard(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CleaningReport {
    pub attempts_in: usize,
    pub attempts_out: usize,
    pub unknown_event: usize,
    pub sentinel_attempt_dates: usize,
    pub sentinel_birth_dates: usize,
    pub underage_birth_dates: usize,
    pub record_beating: usize,
    pub extremely_slow: usize,
    /// Rounds of the slow-attempt filter until no attempt was removed.
    pub slow_filter_rounds: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CleanOutput {
    pub attempts: Vec<RawAttempt>,
    pub athletes: Vec<AthleteMeta>,
    pub report: CleaningReport,
}

/// Whole years from `birth` to `at`.
pub(crate) fn age_years(birth: NaiveDate, at: NaiveDate) -> i32 {
    let mut y = at.year() - birth.year();
    if (at.month(), at.day()) < (birth.month(), birth.day()) {
        y -= 1;
    }
    y
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

/// Applies the cleaning rules. Event labels are canonicalized to the
/// catalog's labels; attempts at unknown events are dropped.
///
/// The slow filter is repeated until stable, which makes cleaning idempotent.
pub fn clean(attempts: &[RawAttempt], athletes: &[AthleteMeta], cfg: &CleaningConfig) -> CleanOutput {
    let mut report = CleaningReport { attempts_in: attempts.len(), ..Default::default() };
    let cat = &cfg.catalog;

    let mut kept: Vec<RawAttempt> = Vec::with_capacity(attempts.len());
    for a in attempts {
        let Some(j) = cat.index_of(&a.event) else {
            report.unknown_event += 1;
            continue;
        };
        let mut a = a.clone();
        a.event = cat.label(j).to_string();
        if a.date.is_some_and(|d| cfg.sentinel_attempt_dates.contains(&d)) {
            a.date = None;
            report.sentinel_attempt_dates += 1;
        }
        let record = match a.date {
            Some(d) => cfg.world_records.in_force(&a.event, d),
            None => cfg.world_records.current(&a.event),
        };
        if record.is_some_and(|r| a.performance < r) {
            report.record_beating += 1;
            continue;
        }
        kept.push(a);
    }

    loop {
        let mut by_event: HashMap<&str, Vec<f64>> = HashMap::new();
        for a in &kept {
            by_event.entry(a.event.as_str()).or_default().push(a.performance);
        }
        let medians: HashMap<String, f64> =
            by_event.into_iter().map(|(k, mut v)| (k.to_string(), median(&mut v))).collect();
        let before = kept.len();
        kept.retain(|a| a.performance <= cfg.slow_threshold_factor * medians[&a.event]);
        let removed = before - kept.len();
        if removed == 0 {
            break;
        }
        report.extremely_slow += removed;
        report.slow_filter_rounds += 1;
    }

    let mut first_attempt: BTreeMap<u64, NaiveDate> = BTreeMap::new();
    for a in &kept {
        if let Some(d) = a.date {
            first_attempt.entry(a.athlete_id).and_modify(|f| *f = (*f).min(d)).or_insert(d);
        }
    }
    let athletes = athletes
        .iter()
        .map(|m| {
            let mut m = m.clone();
            if m.birth_date == Some(cfg.sentinel_birth_date) {
                m.birth_date = None;
                report.sentinel_birth_dates += 1;
            }
            if let (Some(b), Some(first)) = (m.birth_date, first_attempt.get(&m.athlete_id)) {
                if age_years(b, *first) < cfg.min_age_years as i32 {
                    m.birth_date = None;
                    report.underage_birth_dates += 1;
                }
            }
            m
        })
        .collect();
    report.attempts_out = kept.len();
    CleanOutput { attempts: kept, athletes, report }
}
