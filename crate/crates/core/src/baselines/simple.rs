use crate::datamodel::PerformanceTable;
use crate::error::{Error, Result};

/// Mean of the other athletes' entries for the event.
pub fn predict_mean(table: &PerformanceTable, row: usize, col: usize) -> Result<f64> {
    table.column_mean_excluding(col, Some(row)).ok_or_else(|| Error::Unpredictable {
        row,
        col,
        reason: "no other athlete has this event".into(),
    })
}

/// Per-column (mean, std) over present entries, for z-scoring.
fn column_scales(table: &PerformanceTable) -> Vec<(f64, f64)> {
    (0..table.n_events())
        .map(|j| {
            let v = table.column_present(j);
            if v.is_empty() {
                return (0.0, 1.0);
            }
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
            let s = var.sqrt();
            (m, if s > 0.0 { s } else { 1.0 })
        })
        .collect()
}

/// Root-mean-square difference of z-scored values over the events both rows
/// have, excluding `skip`. `None` without overlap.
pub fn knn_distance(table: &PerformanceTable, scales: &[(f64, f64)], a: usize, b: usize, skip: usize) -> Option<f64> {
    let (ra, rb) = (table.row_raw(a), table.row_raw(b));
    let (mut ss, mut n) = (0.0, 0usize);
    for j in 0..table.n_events() {
        if j == skip || ra[j].is_nan() || rb[j].is_nan() {
            continue;
        }
        ss += ((ra[j] - rb[j]) / scales[j].1).powi(2);
        n += 1;
    }
    (n > 0).then(|| (ss / n as f64).sqrt())
}

/// Mean target value of the `k` athletes closest to `row` on the other events.
///
/// Candidates must have the target event and share at least one other event
/// with the query. Ties in distance are broken by row index.
pub fn predict_knn(table: &PerformanceTable, row: usize, col: usize, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let scales = column_scales(table);
    let mut cands: Vec<(f64, usize)> = (0..table.n_athletes())
        .filter(|&i| i != row && table.is_present(i, col))
        .filter_map(|i| knn_distance(table, &scales, row, i, col).map(|d| (d, i)))
        .collect();
    if cands.is_empty() {
        return Err(Error::Unpredictable { row, col, reason: "no comparable athlete".into() });
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let take = k.min(cands.len());
    Ok(cands[..take].iter().map(|&(_, i)| table.get(i, col).unwrap_or_default()).sum::<f64>() / take as f64)
}

/// Exponent of the Riegel formula.
pub const RIEGEL_EXPONENT: f64 = 1.06;

/// `t2 = t1 * (d2 / d1)^1.06`.
pub fn predict_riegel(source_dist: f64, source_time: f64, target_dist: f64) -> Result<f64> {
    power_law_transfer(source_dist, source_time, target_dist, RIEGEL_EXPONENT)
}

/// `t2 = t1 * (d2 / d1)^alpha`.
pub fn power_law_transfer(source_dist: f64, source_time: f64, target_dist: f64, alpha: f64) -> Result<f64> {
    if !(source_dist > 0.0 && source_time > 0.0 && target_dist > 0.0) {
        return Err(Error::invalid("distances and times must be positive"));
    }
    if !alpha.is_finite() {
        return Err(Error::invalid("exponent must be finite"));
    }
    Ok(source_time * (target_dist / source_dist).powf(alpha))
}

/// Log-closest present event of `row` other than `col`.
pub fn closest_source(table: &PerformanceTable, row: usize, col: usize) -> Result<usize> {
    let present = table.present_cols(row);
    table.catalog().log_closest(col, &present).first().copied().ok_or(Error::InsufficientAttempts { needed: 1, have: 0 })
}

/// Predicts through seconds with a distance-to-distance time transfer from the
/// log-closest attempted event.
pub fn predict_via_time<F>(table: &PerformanceTable, row: usize, col: usize, transfer: F) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Result<f64>,
{
    let src = closest_source(table, row, col)?;
    let cat = table.catalog();
    let t_src = table.value_to_time(src, table.get(row, src).expect("present source"));
    let t = transfer(cat.distance(src), t_src, cat.distance(col))?;
    Ok(table.time_to_value(col, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{Event, EventCatalog, Parameterization};

    fn cat(n: usize) -> EventCatalog {
        EventCatalog::new((0..n).map(|k| Event { label: format!("e{k}"), distance: 100.0 * (k + 1) as f64 }).collect())
            .unwrap()
    }

    #[test]
    fn mean_examples() {
        let t = PerformanceTable::from_rows(cat(1), &[vec![Some(10.0)], vec![Some(12.0)], vec![None]], Parameterization::Time)
            .unwrap();
        assert_eq!(predict_mean(&t, 2, 0).unwrap(), 11.0);
        assert_eq!(predict_mean(&t, 0, 0).unwrap(), 12.0);
        let t = PerformanceTable::from_rows(cat(1), &[vec![Some(10.0)], vec![None]], Parameterization::Time).unwrap();
        assert_eq!(predict_mean(&t, 1, 0).unwrap(), 10.0);
        assert!(predict_mean(&t, 0, 0).is_err());
    }

    #[test]
    fn knn_twin_and_degenerate_k() {
        let rows = vec![
            vec![Some(10.0), Some(20.0), None],
            vec![Some(10.0), Some(20.0), Some(31.0)],
            vec![Some(12.0), Some(25.0), Some(40.0)],
        ];
        let t = PerformanceTable::from_rows(cat(3), &rows, Parameterization::Time).unwrap();
        assert_eq!(predict_knn(&t, 0, 2, 1).unwrap(), 31.0);
        assert_eq!(predict_knn(&t, 0, 2, 10).unwrap(), 35.5);
    }

    #[test]
    fn knn_hand_built_distances() {
        // Query at 0 on the single comparison event; z-scale is fixed by the column.
        let rows = vec![
            vec![Some(0.0), None],
            vec![Some(0.1), Some(1.0)],
            vec![Some(0.2), Some(2.0)],
            vec![Some(0.9), Some(9.0)],
        ];
        let t = PerformanceTable::from_rows(cat(2), &rows, Parameterization::LogTime).unwrap();
        let s = column_scales(&t);
        let d: Vec<f64> = (1..4).map(|i| knn_distance(&t, &s, 0, i, 1).unwrap() * s[0].1).collect();
        for (got, want) in d.iter().zip([0.1, 0.2, 0.9]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((predict_knn(&t, 0, 1, 2).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn riegel_examples() {
        assert_eq!(predict_riegel(1500.0, 240.0, 1500.0).unwrap(), 240.0);
        let m = predict_riegel(10000.0, 2400.0, 42195.0).unwrap();
        assert!((m - 11041.0).abs() <= 1.0, "{m}");
        let t = predict_riegel(100.0, 10.0, 400.0).unwrap();
        assert!((t - 43.46).abs() < 0.01, "{t}");
        assert!(predict_riegel(0.0, 10.0, 400.0).is_err());
        assert!(predict_riegel(100.0, -1.0, 400.0).is_err());
    }
}
