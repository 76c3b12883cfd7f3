use std::io::Write;

use super::{Comparison, Metrics, ValidationReport};
use crate::error::Result;

const HEADER: &str =
    "method\tsetup\tn\tn_skipped\trmse\tse_rmse\tmae\tse_mae\trel_rmse\tse_rel_rmse\trel_mae\tse_rel_mae\tp_vs_reference";

fn metric_cells(m: Option<&Metrics>) -> String {
    match m {
        Some(m) => format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            m.n, m.rmse, m.se_rmse, m.mae, m.se_mae, m.rel_rmse, m.se_rel_rmse, m.rel_mae, m.se_rel_mae
        ),
        None => "0\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA".into(),
    }
}

fn line(r: &ValidationReport, setup: &str, p: Option<f64>) -> String {
    let m = r.metrics.as_ref();
    let cells = metric_cells(m);
    let (n, rest) = cells.split_once('\t').expect("metric cells");
    let p = p.map_or_else(|| "NA".to_string(), |p| format!("{p:.6e}"));
    format!("{}\t{}\t{}\t{}\t{}\t{}", r.method, setup, n, r.n_skipped, rest, p)
}

/// One line per method; the last column is the Wilcoxon p-value against the
/// comparison's reference method.
pub fn write_comparison_tsv<W: Write>(c: &Comparison, mut w: W) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    for (r, t) in c.reports.iter().zip(&c.paired) {
        writeln!(w, "{}", line(r, &c.setup, t.wilcoxon.as_ref().map(|x| x.p_value)))?;
    }
    Ok(())
}

pub fn write_report_tsv<W: Write>(r: &ValidationReport, mut w: W) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{}", line(r, &format!("{}/{}", r.mode, r.metric), None))?;
    Ok(())
}

pub fn write_comparison_json<W: Write>(c: &Comparison, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, c)?;
    Ok(())
}
