//! TSV grid plus JSON sidecar serialization.
//!
//! The TSV has a header `athlete_id<TAB><event label>...` and one line per
//! athlete; an empty cell is a missing entry. The sidecar carries everything
//! else: catalog, parameterization, column normalizers, athlete metadata and
//! per-entry dates.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::catalog::EventCatalog;
use super::table::{AthleteMeta, Parameterization, PerformanceTable};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub parameterization: Parameterization,
    pub catalog: EventCatalog,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalizers: Option<Vec<f64>>,
    pub athletes: Vec<AthleteMeta>,
    /// Per-row, per-event dates; `null` where unknown or missing.
    pub dates: Vec<Vec<Option<NaiveDate>>>,
}

pub fn sidecar_path(tsv: &Path) -> PathBuf {
    tsv.with_extension("json")
}

pub fn write_tsv<W: Write>(table: &PerformanceTable, mut w: W) -> Result<()> {
    let mut header = String::from("athlete_id");
    for e in table.catalog().events() {
        header.push('\t');
        header.push_str(&e.label);
    }
    writeln!(w, "{header}")?;
    for i in 0..table.n_athletes() {
        let mut line = table.athlete(i).athlete_id.to_string();
        for j in 0..table.n_events() {
            line.push('\t');
            if let Some(v) = table.get(i, j) {
                line.push_str(&format!("{v:?}"));
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn sidecar(table: &PerformanceTable) -> Sidecar {
    let p = table.n_events();
    let dates = table.dates_raw().chunks(p.max(1)).map(|c| c.to_vec()).collect();
    Sidecar {
        parameterization: table.parameterization(),
        catalog: table.catalog().clone(),
        normalizers: table.normalizers().map(|n| n.to_vec()),
        athletes: table.athletes().to_vec(),
        dates,
    }
}

/// Writes `path` (TSV) and its `.json` sidecar.
pub fn write_table(table: &PerformanceTable, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_tsv(table, &mut buf)?;
    fs::write(path, buf)?;
    let json = serde_json::to_string_pretty(&sidecar(table))?;
    fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

/// Parsed TSV grid: athlete ids, header labels, row-major values (NaN = missing).
pub struct Grid {
    pub ids: Vec<u64>,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

pub fn read_tsv<R: Read>(r: R) -> Result<Grid> {
    let mut lines = BufReader::new(r).lines();
    let header = lines.next().ok_or_else(|| Error::Parse { line: 1, message: "empty file".into() })??;
    let labels: Vec<String> = header.split('\t').skip(1).map(|s| s.trim().to_string()).collect();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split('\t');
        let id = cells.next().unwrap_or_default().trim();
        ids.push(id.parse::<u64>().map_err(|_| Error::Parse { line: lineno, message: format!("bad athlete id `{id}`") })?);
        let mut n = 0;
        for cell in cells {
            let cell = cell.trim();
            values.push(if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse::<f64>()
                    .map_err(|_| Error::Parse { line: lineno, message: format!("bad value `{cell}`") })?
            });
            n += 1;
        }
        if n != labels.len() {
            return Err(Error::Parse { line: lineno, message: format!("expected {} cells, got {n}", labels.len()) });
        }
    }
    Ok(Grid { ids, labels, values })
}

/// Reads a table; without a sidecar the header labels are resolved against the
/// standard catalog and entries are taken to be times in seconds.
pub fn read_table(path: &Path) -> Result<PerformanceTable> {
    let grid = read_tsv(fs::File::open(path)?)?;
    let side = sidecar_path(path);
    if side.exists() {
        let sc: Sidecar = serde_json::from_str(&fs::read_to_string(side)?)?;
        from_grid_and_sidecar(grid, sc)
    } else {
        let std = EventCatalog::standard();
        let mut events = Vec::with_capacity(grid.labels.len());
        for l in &grid.labels {
            let j = std.index_of(l).ok_or_else(|| Error::Unknown { kind: "event", name: l.clone() })?;
            events.push(std.events()[j].clone());
        }
        let catalog = EventCatalog::new(events)?;
        let athletes = grid.ids.iter().map(|&id| AthleteMeta::anonymous(id)).collect();
        PerformanceTable::from_raw(catalog, grid.values, athletes, Parameterization::Time)
    }
}

pub fn from_grid_and_sidecar(grid: Grid, sc: Sidecar) -> Result<PerformanceTable> {
    if grid.labels.len() != sc.catalog.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} events (sidecar)", sc.catalog.len()),
            got: format!("{} columns (tsv)", grid.labels.len()),
        });
    }
    if grid.ids.len() != sc.athletes.len() || sc.dates.len() != sc.athletes.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} athletes (sidecar)", sc.athletes.len()),
            got: format!("{} rows (tsv)", grid.ids.len()),
        });
    }
    if grid.ids.iter().zip(&sc.athletes).any(|(a, b)| *a != b.athlete_id) {
        return Err(Error::invalid("athlete ids in TSV and sidecar disagree"));
    }
    let dates: Vec<Option<NaiveDate>> = sc.dates.into_iter().flatten().collect();
    PerformanceTable::from_parts(sc.catalog, grid.values, dates, sc.athletes, sc.parameterization, sc.normalizers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::Gender;

    #[test]
    fn round_trip_through_files() {
        let mut t = PerformanceTable::from_rows(
            EventCatalog::standard(),
            &vec![vec![Some(10.5), None, None, None, None, None, None, Some(2400.25), None, None]; 2],
            Parameterization::Time,
        )
        .unwrap();
        t.set_date(0, 0, NaiveDate::from_ymd_opt(2010, 5, 1));
        t.athlete_meta_mut(1).gender = Gender::F;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.tsv");
        write_table(&t, &p).unwrap();
        let back = read_table(&p).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn reads_without_sidecar() {
        let text = "athlete_id\t100m\tMarathon\n3\t10.0\t\n4\t\t9000\n";
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.tsv");
        std::fs::write(&p, text).unwrap();
        let t = read_table(&p).unwrap();
        assert_eq!(t.n_events(), 2);
        assert_eq!(t.get(1, 1), Some(9000.0));
        assert_eq!(t.get(0, 1), None);
    }

    #[test]
    fn reports_bad_cell_line() {
        let text = "athlete_id\t100m\n1\t10\n2\tabc\n";
        match read_tsv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {:?}", other.err()),
        }
    }
}
