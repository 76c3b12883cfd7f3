//! Raw attempt exports to cleaned, collated performance tables.
//!
//! Input is two CSV files: `athletes.csv` with `athlete_id,gender,birth_date`
//! and `events.csv` with `athlete_id,event,date,performance`, performance in
//! seconds (or `h:mm:ss` / `m:ss.xx`).

mod clean;
mod collate;
mod subsample;

use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::datamodel::{AthleteMeta, Gender};
use crate::error::{Error, Result};

pub use clean::{clean, CleanOutput, CleaningConfig, CleaningReport};
pub use collate::{collate_best, collate_random, remove_outliers, CollateMode, BEST_WINDOW_DAYS};
pub use subsample::{subsample, SubsampleSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawAttempt {
    pub athlete_id: u64,
    pub event: String,
    pub date: Option<NaiveDate>,
    /// Seconds.
    pub performance: f64,
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line: line as usize, message: message.into() }
}

fn parse_date(s: &str, line: u64) -> Result<Option<NaiveDate>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map(Some).map_err(|e| parse_err(line, format!("bad date {s:?}: {e}")))
}

/// Seconds from `ss.xx`, `m:ss.xx` or `h:mm:ss.xx`.
pub fn parse_performance(s: &str) -> Option<f64> {
    let mut total = 0.0;
    for part in s.trim().split(':') {
        let v: f64 = part.trim().parse().ok()?;
        total = total * 60.0 + v;
    }
    (total.is_finite() && total > 0.0).then_some(total)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(r)
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize) -> &'a str {
    rec.get(i).unwrap_or("")
}

pub fn parse_athletes<R: Read>(r: R) -> Result<Vec<AthleteMeta>> {
    let mut out = Vec::new();
    for rec in reader(r).records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = field(&rec, 0);
        let athlete_id = id.parse().map_err(|_| parse_err(line, format!("athlete id {id:?} is not an integer")))?;
        out.push(AthleteMeta {
            athlete_id,
            gender: Gender::parse_token(field(&rec, 1)),
            birth_date: parse_date(field(&rec, 2), line)?,
        });
    }
    Ok(out)
}

pub fn parse_events<R: Read>(r: R) -> Result<Vec<RawAttempt>> {
    let mut out = Vec::new();
    for rec in reader(r).records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = field(&rec, 0);
        let athlete_id = id.parse().map_err(|_| parse_err(line, format!("athlete id {id:?} is not an integer")))?;
        let event = field(&rec, 1).to_string();
        if event.is_empty() {
            return Err(parse_err(line, "missing event"));
        }
        let perf = field(&rec, 3);
        let performance =
            parse_performance(perf).ok_or_else(|| parse_err(line, format!("performance {perf:?} is not a positive time")))?;
        out.push(RawAttempt { athlete_id, event, date: parse_date(field(&rec, 2), line)?, performance });
    }
    Ok(out)
}
