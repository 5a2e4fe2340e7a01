use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub const REPORT_FORMAT: &str = "v1";

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Result document of one command; maps are ordered so output is stable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub format: &'static str,
    pub command: String,
    pub config: BTreeMap<String, Value>,
    pub metrics: BTreeMap<String, Value>,
    pub tables: BTreeMap<String, Table>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            format: REPORT_FORMAT,
            command: command.into(),
            config: BTreeMap::new(),
            metrics: BTreeMap::new(),
            tables: BTreeMap::new(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn config(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.config.insert(key.into(), serde_json::to_value(value).expect("serializable"));
        self
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.metrics.insert(key.into(), serde_json::to_value(value).expect("serializable"));
        self
    }

    pub fn table(&mut self, name: &str, table: Table) -> &mut Self {
        self.tables.insert(name.into(), table);
        self
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(Value::as_f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_tsv(&self) -> String {
        let cell = |v: &Value| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let mut out = String::from("section\tkey\tvalue\n");
        out.push_str(&format!("meta\tcommand\t{}\n", self.command));
        out.push_str(&format!("meta\tformat\t{}\n", self.format));
        for (k, v) in &self.config {
            out.push_str(&format!("config\t{k}\t{}\n", cell(v)));
        }
        for (k, v) in &self.metrics {
            out.push_str(&format!("metric\t{k}\t{}\n", cell(v)));
        }
        for (name, t) in &self.tables {
            out.push_str(&format!("\n# {name}\n{}\n", t.columns.join("\t")));
            for r in &t.rows {
                out.push_str(&r.iter().map(cell).collect::<Vec<_>>().join("\t"));
                out.push('\n');
            }
        }
        out
    }

    /// Writes `path` (JSON) and `path` with a `.tsv` extension.
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))?;
        let tsv = path.with_extension("tsv");
        std::fs::write(&tsv, self.to_tsv()).map_err(|e| Error::io(&tsv, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_and_tsv_carry_the_same_metrics() {
        let mut r = Report::new("stats");
        r.config("dataset", "toy").metric("entities", 3).metric("mean_degree", 1.5);
        let mut t = Table::new(&["layer", "count"]);
        t.push(vec![1.into(), 7.into()]);
        r.table("per_layer", t);
        let j: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(j["format"], "v1");
        assert_eq!(j["metrics"]["entities"], 3);
        let tsv = r.to_tsv();
        assert!(tsv.contains("metric\tmean_degree\t1.5"));
        assert!(tsv.contains("layer\tcount\n1\t7"));
    }
}
