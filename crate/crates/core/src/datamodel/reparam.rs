use super::table::{Parameterization, PerformanceTable};
use crate::error::{Error, Result};

/// Re-expresses every present entry in the `target` parameterization.
///
/// Conversions go through seconds. Normalizing divides by the column mean of
/// present times in this table; the means are kept so the transform can be
/// inverted.
pub fn reparameterize(table: &PerformanceTable, target: Parameterization) -> Result<PerformanceTable> {
    let times = to_time(table)?;
    if target == Parameterization::Time {
        return Ok(times);
    }
    let cat = times.catalog().clone();
    match target {
        Parameterization::Time => unreachable!(),
        Parameterization::LogTime => Ok(times.map_values(target, |_, t| t.ln())),
        Parameterization::Speed => Ok(times.map_values(target, |j, t| cat.distance(j) / t)),
        Parameterization::Normalized => {
            let means: Vec<f64> = (0..times.n_events())
                .map(|j| times.column_mean_excluding(j, None).unwrap_or(1.0))
                .collect();
            let mut out = times.map_values(target, |j, t| t / means[j]);
            out.set_normalizers(Some(means));
            Ok(out)
        }
    }
}

fn to_time(table: &PerformanceTable) -> Result<PerformanceTable> {
    if table.parameterization() == Parameterization::Normalized && table.normalizers().is_none() {
        return Err(Error::invalid("normalized table without normalizers cannot be inverted"));
    }
    for (i, j) in table.present_entries() {
        let v = table.get(i, j).unwrap_or_default();
        let bad = match table.parameterization() {
            Parameterization::Time | Parameterization::Speed | Parameterization::Normalized => v <= 0.0,
            Parameterization::LogTime => false,
        };
        if bad {
            return Err(Error::invalid(format!("non-positive entry at ({i}, {j})")));
        }
    }
    let src = table.clone();
    let mut out = table.map_values(Parameterization::Time, |j, v| src.value_to_time(j, v));
    out.set_normalizers(None);
    Ok(out)
}
