use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::catalog::EventCatalog;
use crate::error::{Error, Result};

/// How the entries of a [`PerformanceTable`] are expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// Seconds.
    Time,
    /// Seconds divided by the column mean of present times.
    Normalized,
    /// Natural log of seconds.
    LogTime,
    /// Meters per second.
    Speed,
}

impl Parameterization {
    /// Larger values mean better performances only for speed.
    pub fn higher_is_better(self) -> bool {
        matches!(self, Parameterization::Speed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parameterization::Time => "time",
            Parameterization::Normalized => "normalized",
            Parameterization::LogTime => "log_time",
            Parameterization::Speed => "speed",
        }
    }
}

impl fmt::Display for Parameterization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Parameterization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "time" | "seconds" => Ok(Parameterization::Time),
            "normalized" | "normalised" => Ok(Parameterization::Normalized),
            "log_time" | "logtime" | "log" => Ok(Parameterization::LogTime),
            "speed" => Ok(Parameterization::Speed),
            _ => Err(Error::Unknown { kind: "parameterization", name: s.to_string() }),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
    #[default]
    #[serde(rename = "unknown")]
    Unknown,
}

impl Gender {
    pub fn parse_token(s: &str) -> Gender {
        match s.trim() {
            "M" | "m" | "male" | "Male" => Gender::M,
            "F" | "f" | "W" | "w" | "female" | "Female" => Gender::F,
            _ => Gender::Unknown,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AthleteMeta {
    pub athlete_id: u64,
    #[serde(default)]
    pub gender: Gender,
    #[serde(default)]
    pub birth_date: Option<NaiveDate>,
}

impl AthleteMeta {
    pub fn anonymous(athlete_id: u64) -> Self {
        AthleteMeta { athlete_id, gender: Gender::Unknown, birth_date: None }
    }
}

/// Athletes × events grid of optional performances.
///
/// Missing entries are stored as NaN in a row-major buffer; every accessor
/// hands them out as `None`. Each present entry may carry the date on which
/// it was achieved.
#[derive(Clone, Debug)]
pub struct PerformanceTable {
    catalog: EventCatalog,
    values: Vec<f64>,
    dates: Vec<Option<NaiveDate>>,
    athletes: Vec<AthleteMeta>,
    parameterization: Parameterization,
    /// Column mean times used by the `Normalized` parameterization.
    normalizers: Option<Vec<f64>>,
}

/// Missing entries compare equal to each other.
impl PartialEq for PerformanceTable {
    fn eq(&self, other: &Self) -> bool {
        self.catalog == other.catalog
            && self.parameterization == other.parameterization
            && self.athletes == other.athletes
            && self.dates == other.dates
            && self.normalizers == other.normalizers
            && self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a == b || (a.is_nan() && b.is_nan()))
    }
}

impl PerformanceTable {
    /// All-missing table.
    pub fn empty(catalog: EventCatalog, athletes: Vec<AthleteMeta>, parameterization: Parameterization) -> Self {
        let n = athletes.len() * catalog.len();
        PerformanceTable {
            catalog,
            values: vec![f64::NAN; n],
            dates: vec![None; n],
            athletes,
            parameterization,
            normalizers: None,
        }
    }

    /// Builds a table from dense rows; athletes get ids `0..n`.
    pub fn from_rows(
        catalog: EventCatalog,
        rows: &[Vec<Option<f64>>],
        parameterization: Parameterization,
    ) -> Result<Self> {
        let athletes = (0..rows.len() as u64).map(AthleteMeta::anonymous).collect();
        let mut t = Self::empty(catalog, athletes, parameterization);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != t.n_events() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{} columns", t.n_events()),
                    got: format!("{} in row {i}", row.len()),
                });
            }
            for (j, v) in row.iter().enumerate() {
                t.set(i, j, *v)?;
            }
        }
        Ok(t)
    }

    /// Builds a table from a row-major buffer where NaN marks a missing entry.
    pub fn from_raw(
        catalog: EventCatalog,
        values: Vec<f64>,
        athletes: Vec<AthleteMeta>,
        parameterization: Parameterization,
    ) -> Result<Self> {
        if values.len() != athletes.len() * catalog.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", athletes.len() * catalog.len()),
                got: format!("{}", values.len()),
            });
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::invalid("infinite table entry"));
        }
        if parameterization == Parameterization::Time && values.iter().any(|v| *v <= 0.0) {
            return Err(Error::invalid("times must be positive"));
        }
        let n = values.len();
        Ok(PerformanceTable {
            catalog,
            values,
            dates: vec![None; n],
            athletes,
            parameterization,
            normalizers: None,
        })
    }

    pub fn catalog(&self) -> &EventCatalog {
        &self.catalog
    }

    pub fn athletes(&self) -> &[AthleteMeta] {
        &self.athletes
    }

    pub fn athlete(&self, row: usize) -> &AthleteMeta {
        &self.athletes[row]
    }

    pub fn parameterization(&self) -> Parameterization {
        self.parameterization
    }

    pub fn normalizers(&self) -> Option<&[f64]> {
        self.normalizers.as_deref()
    }

    pub fn n_athletes(&self) -> usize {
        self.athletes.len()
    }

    pub fn n_events(&self) -> usize {
        self.catalog.len()
    }

    #[inline]
    fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.n_athletes() && col < self.n_events());
        row * self.catalog.len() + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.values[self.idx(row, col)];
        (!v.is_nan()).then_some(v)
    }

    #[inline]
    pub fn is_present(&self, row: usize, col: usize) -> bool {
        !self.values[self.idx(row, col)].is_nan()
    }

    /// Raw row slice; NaN marks missing entries.
    #[inline]
    pub fn row_raw(&self, row: usize) -> &[f64] {
        let p = self.catalog.len();
        &self.values[row * p..(row + 1) * p]
    }

    /// Raw row-major buffer; NaN marks missing entries.
    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    pub fn set(&mut self, row: usize, col: usize, value: Option<f64>) -> Result<()> {
        let i = self.idx(row, col);
        match value {
            Some(v) => {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("non-finite entry at ({row}, {col})")));
                }
                if self.parameterization == Parameterization::Time && v <= 0.0 {
                    return Err(Error::invalid(format!("non-positive time at ({row}, {col})")));
                }
                self.values[i] = v;
            }
            None => {
                self.values[i] = f64::NAN;
                self.dates[i] = None;
            }
        }
        Ok(())
    }

    pub fn date(&self, row: usize, col: usize) -> Option<NaiveDate> {
        self.dates[self.idx(row, col)]
    }

    pub fn set_date(&mut self, row: usize, col: usize, date: Option<NaiveDate>) {
        let i = self.idx(row, col);
        self.dates[i] = date;
    }

    pub fn athlete_meta_mut(&mut self, row: usize) -> &mut AthleteMeta {
        &mut self.athletes[row]
    }

    /// Present column indices of a row, in catalog order.
    pub fn present_cols(&self, row: usize) -> Vec<usize> {
        self.row_raw(row).iter().enumerate().filter(|(_, v)| !v.is_nan()).map(|(j, _)| j).collect()
    }

    pub fn n_present(&self, row: usize) -> usize {
        self.row_raw(row).iter().filter(|v| !v.is_nan()).count()
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        (0..self.n_athletes()).map(move |i| self.get(i, col))
    }

    /// Present values of a column.
    pub fn column_present(&self, col: usize) -> Vec<f64> {
        self.column(col).flatten().collect()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| !v.is_nan())
    }

    pub fn n_present_total(&self) -> usize {
        self.values.iter().filter(|v| !v.is_nan()).count()
    }

    /// All present `(row, col)` positions in row-major order.
    pub fn present_entries(&self) -> Vec<(usize, usize)> {
        let p = self.n_events();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(|(i, _)| (i / p, i % p))
            .collect()
    }

    /// All missing `(row, col)` positions in row-major order.
    pub fn missing_entries(&self) -> Vec<(usize, usize)> {
        let p = self.n_events();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_nan())
            .map(|(i, _)| (i / p, i % p))
            .collect()
    }

    /// Copy with one entry hidden.
    pub fn masked(&self, row: usize, col: usize) -> Self {
        let mut t = self.clone();
        let i = t.idx(row, col);
        t.values[i] = f64::NAN;
        t.dates[i] = None;
        t
    }

    /// Appends an all-missing row and returns its index.
    pub fn push_row(&mut self, meta: AthleteMeta) -> usize {
        let p = self.n_events();
        self.values.extend(std::iter::repeat_n(f64::NAN, p));
        self.dates.extend(std::iter::repeat_n(None, p));
        self.athletes.push(meta);
        self.athletes.len() - 1
    }

    /// Copy restricted to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let p = self.n_events();
        let mut values = Vec::with_capacity(rows.len() * p);
        let mut dates = Vec::with_capacity(rows.len() * p);
        for &r in rows {
            values.extend_from_slice(self.row_raw(r));
            dates.extend_from_slice(&self.dates[r * p..(r + 1) * p]);
        }
        PerformanceTable {
            catalog: self.catalog.clone(),
            values,
            dates,
            athletes: rows.iter().map(|&r| self.athletes[r].clone()).collect(),
            parameterization: self.parameterization,
            normalizers: self.normalizers.clone(),
        }
    }

    /// Replaces every entry by `f(col, value)`; missingness is preserved.
    pub(crate) fn map_values(&self, param: Parameterization, f: impl Fn(usize, f64) -> f64) -> Self {
        let p = self.n_events();
        let mut t = self.clone();
        for (i, v) in t.values.iter_mut().enumerate() {
            if !v.is_nan() {
                *v = f(i % p, *v);
            }
        }
        t.parameterization = param;
        t
    }

    pub(crate) fn set_normalizers(&mut self, normalizers: Option<Vec<f64>>) {
        self.normalizers = normalizers;
    }

    /// Converts one value of column `col` to seconds.
    pub fn value_to_time(&self, col: usize, v: f64) -> f64 {
        let d = self.catalog.distance(col);
        match self.parameterization {
            Parameterization::Time => v,
            Parameterization::LogTime => v.exp(),
            Parameterization::Speed => d / v,
            Parameterization::Normalized => v * self.normalizer(col),
        }
    }

    /// Converts seconds in column `col` to this table's parameterization.
    pub fn time_to_value(&self, col: usize, t: f64) -> f64 {
        let d = self.catalog.distance(col);
        match self.parameterization {
            Parameterization::Time => t,
            Parameterization::LogTime => t.ln(),
            Parameterization::Speed => d / t,
            Parameterization::Normalized => t / self.normalizer(col),
        }
    }

    fn normalizer(&self, col: usize) -> f64 {
        self.normalizers
            .as_ref()
            .map(|n| n[col])
            .expect("normalized table without column normalizers")
    }

    /// Mean of the present entries of a column, excluding `exclude_row`.
    pub fn column_mean_excluding(&self, col: usize, exclude_row: Option<usize>) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for i in 0..self.n_athletes() {
            if Some(i) == exclude_row {
                continue;
            }
            if let Some(v) = self.get(i, col) {
                sum += v;
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    pub(crate) fn dates_raw(&self) -> &[Option<NaiveDate>] {
        &self.dates
    }

    pub(crate) fn from_parts(
        catalog: EventCatalog,
        values: Vec<f64>,
        dates: Vec<Option<NaiveDate>>,
        athletes: Vec<AthleteMeta>,
        parameterization: Parameterization,
        normalizers: Option<Vec<f64>>,
    ) -> Result<Self> {
        let mut t = Self::from_raw(catalog, values, athletes, parameterization)?;
        if dates.len() != t.values.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} dates", t.values.len()),
                got: format!("{}", dates.len()),
            });
        }
        t.dates = dates;
        if let Some(n) = &normalizers {
            if n.len() != t.n_events() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{} normalizers", t.n_events()),
                    got: format!("{}", n.len()),
                });
            }
        }
        if parameterization == Parameterization::Normalized && normalizers.is_none() {
            return Err(Error::invalid("normalized table requires column normalizers"));
        }
        t.normalizers = normalizers;
        Ok(t)
    }
}
