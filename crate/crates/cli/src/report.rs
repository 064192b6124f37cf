use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::spec::{emit_spec, ProblemSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// One CSV table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub command: String,
    /// The spec as run, with command-line overrides applied.
    pub spec: ProblemSpec,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub result: Value,
    pub table: Table,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> String {
        let v = json!({
            "command": self.command,
            "versions": {
                "radon-weights": radon_weights::VERSION,
                "radon-weights-cli": env!("CARGO_PKG_VERSION"),
            },
            "spec": emit_spec(&self.spec),
            "passed": self.passed(),
            "checks": self.checks.iter().map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail})).collect::<Vec<_>>(),
            "failures": self.failures().iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
            "warnings": self.warnings,
            "result": self.result,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("plain JSON");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> io::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.table.header)?;
        for r in &self.table.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8 fields"))
    }

    /// Writes `<command>.json` and `<command>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json_path = dir.join(format!("{}.json", self.command));
        let csv_path = dir.join(format!("{}.csv", self.command));
        std::fs::write(&json_path, self.to_json())?;
        std::fs::write(&csv_path, self.to_csv()?)?;
        Ok((json_path, csv_path))
    }
}
