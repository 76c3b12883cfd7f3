use serde::{Deserialize, Serialize};

use super::clean::age_years;
use crate::datamodel::{event_percentiles, Gender, PerformanceTable};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubsampleSpec {
    pub gender: Option<Gender>,
    /// Inclusive age range in whole years at the athlete's best event.
    pub age_range: Option<(u32, u32)>,
    pub min_events: usize,
    /// Inclusive range for each row's best event percentile.
    pub percentile_range: (f64, f64),
}

impl Default for SubsampleSpec {
    fn default() -> Self {
        SubsampleSpec { gender: None, age_range: None, min_events: 0, percentile_range: (0.0, 100.0) }
    }
}

impl SubsampleSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.percentile_range;
        if !(0.0 <= lo && lo < hi && hi <= 100.0) {
            return Err(Error::invalid("percentile range must satisfy 0 <= low < high <= 100"));
        }
        if let Some((a, b)) = self.age_range {
            if a > b {
                return Err(Error::invalid("age range must satisfy min <= max"));
            }
        }
        Ok(())
    }

    fn full_range(&self) -> bool {
        self.percentile_range == (0.0, 100.0)
    }
}

/// Filters rows by subgroup, then by attempt count, then by best percentile
/// recomputed on the survivors.
pub fn subsample(table: &PerformanceTable, spec: &SubsampleSpec) -> Result<PerformanceTable> {
    spec.validate()?;
    let pct = event_percentiles(table);
    let best_col = |pg: &crate::datamodel::PercentileGrid, i: usize| {
        pg.row(i)
            .into_iter()
            .enumerate()
            .filter_map(|(j, p)| p.map(|p| (j, p)))
            .fold(None, |acc: Option<(usize, f64)>, (j, p)| match acc {
                Some((_, bp)) if bp >= p => acc,
                _ => Some((j, p)),
            })
    };
    let stage_a: Vec<usize> = (0..table.n_athletes())
        .filter(|&i| spec.gender.is_none_or(|g| table.athlete(i).gender == g))
        .filter(|&i| {
            let Some((lo, hi)) = spec.age_range else { return true };
            let birth = table.athlete(i).birth_date;
            let at = best_col(&pct, i).and_then(|(j, _)| table.date(i, j));
            match (birth, at) {
                (Some(b), Some(d)) => {
                    let age = age_years(b, d);
                    age >= lo as i32 && age <= hi as i32
                }
                _ => false,
            }
        })
        .filter(|&i| table.n_present(i) >= spec.min_events)
        .collect();
    let survivors = table.select_rows(&stage_a);
    let pct = event_percentiles(&survivors);
    let (lo, hi) = spec.percentile_range;
    let keep: Vec<usize> = (0..survivors.n_athletes())
        .filter(|&i| match best_col(&pct, i) {
            Some((_, p)) => p >= lo && p <= hi,
            None => spec.full_range(),
        })
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptySubsample);
    }
    Ok(survivors.select_rows(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{EventCatalog, Parameterization};

    fn table(rows: &[Vec<Option<f64>>]) -> PerformanceTable {
        let mut r = rows.to_vec();
        for row in r.iter_mut() {
            row.resize(10, None);
        }
        PerformanceTable::from_rows(EventCatalog::standard(), &r, Parameterization::Time).unwrap()
    }

    #[test]
    fn all_pass_is_identity() {
        let t = table(&[vec![Some(10.0), Some(21.0)], vec![None], vec![Some(11.0)]]);
        assert_eq!(subsample(&t, &SubsampleSpec::default()).unwrap(), t);
    }

    #[test]
    fn count_and_gender_filters() {
        let t = table(&[vec![Some(10.0), Some(21.0), Some(45.0)], vec![Some(11.0), Some(22.0)]]);
        let s = subsample(&t, &SubsampleSpec { min_events: 3, ..Default::default() }).unwrap();
        assert_eq!(s.n_athletes(), 1);
        assert!(matches!(
            subsample(&t, &SubsampleSpec { gender: Some(Gender::F), ..Default::default() }),
            Err(Error::EmptySubsample)
        ));
    }

    #[test]
    fn percentile_band_on_four_rows() {
        // One event; percentiles of 13, 12, 11, 10 s are 0, 33.3, 66.7, 100.
        let t = table(&[vec![Some(13.0)], vec![Some(12.0)], vec![Some(11.0)], vec![Some(10.0)]]);
        let s = subsample(&t, &SubsampleSpec { percentile_range: (75.0, 100.0), ..Default::default() }).unwrap();
        assert_eq!(s.n_athletes(), 1);
        assert_eq!(s.get(0, 0), Some(10.0));
        let s = subsample(&t, &SubsampleSpec { percentile_range: (60.0, 100.0), ..Default::default() }).unwrap();
        assert_eq!(s.n_athletes(), 2);
    }
}
