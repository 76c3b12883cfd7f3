use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context as _, Result};
use runlmc::datamodel::io;
use runlmc::PerformanceTable;
use serde::Serialize;
use serde_json::{json, Value};

/// Where and how a run writes its artifacts.
pub struct Context {
    pub seed: u64,
    pub config_hash: String,
    pub out: Option<PathBuf>,
}

impl Context {
    /// Writes the primary TSV to `--out`, or stdout.
    pub fn tsv(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    /// Writes the JSON companion next to `--out`; skipped without `--out`.
    pub fn json<T: Serialize>(&self, result: &T) -> Result<()> {
        let Some(p) = &self.out else { return Ok(()) };
        let doc = json!({ "seed": self.seed, "config_hash": self.config_hash, "result": result });
        write_json(&io::sidecar_path(p), &doc)
    }

    /// Writes a table as TSV plus its sidecar, with `extra` keys merged into
    /// the sidecar.
    pub fn table(&self, table: &PerformanceTable, extra: Value) -> Result<()> {
        let mut buf = Vec::new();
        io::write_tsv(table, &mut buf)?;
        self.tsv(&buf)?;
        let Some(p) = &self.out else { return Ok(()) };
        write_json(&io::sidecar_path(p), &self.sidecar(table, extra)?)
    }

    /// A table written to an explicit path, e.g. the truth of a synthetic run.
    pub fn table_at(&self, table: &PerformanceTable, path: &PathBuf) -> Result<()> {
        let mut buf = Vec::new();
        io::write_tsv(table, &mut buf)?;
        fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
        write_json(&io::sidecar_path(path), &self.sidecar(table, Value::Null)?)
    }

    fn sidecar(&self, table: &PerformanceTable, extra: Value) -> Result<Value> {
        let mut doc = serde_json::to_value(io::sidecar(table))?;
        let obj = doc.as_object_mut().expect("sidecar is an object");
        obj.insert("seed".into(), json!(self.seed));
        obj.insert("config_hash".into(), json!(self.config_hash));
        if let Value::Object(e) = extra {
            obj.extend(e);
        }
        Ok(doc)
    }
}

fn write_json(path: &std::path::Path, doc: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(doc)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
