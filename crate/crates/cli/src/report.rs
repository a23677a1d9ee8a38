use serde_json::{json, Map, Value};
use std::fs;
use std::io;
use std::path::Path;

/// One experiment's output: a table plus a JSON summary.
#[derive(Debug, Default)]
pub struct Report {
    pub name: String,
    pub params: Map<String, Value>,
    pub metrics: Map<String, Value>,
    pub flags: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Report {
    pub fn new(name: &str, columns: &[&str]) -> Report {
        Report { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn param(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.params.insert(key.into(), v.into());
        self
    }

    pub fn metric(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.metrics.insert(key.into(), v.into());
        self
    }

    pub fn flag(&mut self, key: &str, v: bool) -> &mut Self {
        self.flags.insert(key.into(), Value::Bool(v));
        self
    }

    pub fn row(&mut self, r: Vec<f64>) {
        debug_assert_eq!(r.len(), self.columns.len());
        self.rows.push(r);
    }

    pub fn summary(&self) -> Value {
        json!({
            "command": self.name,
            "params": self.params,
            "metrics": self.metrics,
            "flags": self.flags,
        })
    }

    /// Writes `<dir>/<name>.csv` (header always present) and `<dir>/<name>.json`.
    pub fn emit(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", self.name)))?;
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        let mut text = serde_json::to_string_pretty(&self.summary())?;
        text.push('\n');
        fs::write(dir.join(format!("{}.json", self.name)), text)
    }
}
