//! Result files: the CSV table plus sidecars next to it.
//!
//! For an output path `run.csv` the sidecars are `run.csv.meta.json`
//! (provenance and summary values), `run.csv.lines.csv` (predicted lines)
//! and `run.csv.svg` (plot, on request). Without a path the table goes to
//! standard output and no sidecars are written.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::run::Outcome;

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Absent for runs without a configuration file.
    pub config_sha256: Option<String>,
    pub wall_time_s: f64,
    pub partial: bool,
    pub workers: usize,
    pub results: Map<String, Value>,
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes the outcome and returns the files written.
pub fn write_outcome(
    outcome: &Outcome,
    meta: &Meta,
    path: Option<&Path>,
    plot: bool,
) -> io::Result<Vec<PathBuf>> {
    let to_io = |e: ionmotion::Error| io::Error::other(e.to_string());
    let Some(path) = path else {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        outcome.table.write_csv(&mut lock).map_err(to_io)?;
        lock.flush()?;
        return Ok(Vec::new());
    };
    let mut written = Vec::new();
    let mut w = BufWriter::new(File::create(path)?);
    outcome.table.write_csv(&mut w).map_err(to_io)?;
    w.flush()?;
    written.push(path.to_path_buf());

    let meta_path = sidecar(path, ".meta.json");
    let mut w = BufWriter::new(File::create(&meta_path)?);
    serde_json::to_writer_pretty(&mut w, meta)?;
    writeln!(w)?;
    w.flush()?;
    written.push(meta_path);

    if let Some(lines) = &outcome.lines {
        let p = sidecar(path, ".lines.csv");
        let mut w = BufWriter::new(File::create(&p)?);
        lines.write_csv(&mut w).map_err(to_io)?;
        w.flush()?;
        written.push(p);
    }
    if let (true, Some(svg)) = (plot, &outcome.plot) {
        let p = sidecar(path, ".svg");
        std::fs::write(&p, svg)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ionmotion::report::Cell;
    use ionmotion::ResultTable;

    #[test]
    fn sidecars_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut table = ResultTable::new(&[("x", "Hz")]);
        table.push(vec![Cell::from(1.0)]).unwrap();
        let mut outcome = Outcome {
            table: table.clone(),
            lines: Some(table),
            plot: Some("<svg/>".into()),
            results: Map::new(),
            partial: true,
            failed: false,
        };
        outcome.results.insert("a".into(), Value::from(2.0));
        let meta = Meta {
            tool: "ionmotion",
            version: "0",
            command: "test".into(),
            config_sha256: None,
            wall_time_s: 0.5,
            partial: true,
            workers: 1,
            results: outcome.results.clone(),
        };
        let path = dir.path().join("out.csv");
        let files = write_outcome(&outcome, &meta, Some(&path), true).unwrap();
        assert_eq!(files.len(), 4);
        let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.csv.meta.json")).unwrap()).unwrap();
        assert_eq!(json["partial"], Value::Bool(true));
        assert_eq!(json["results"]["a"], Value::from(2.0));
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("x\n# Hz\n1\n"));
    }
}
