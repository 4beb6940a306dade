//! Reports: resolved configuration, tolerances, a JSON result and a CSV
//! table. Rendering is deterministic; nothing time- or host-dependent is
//! written.

use clap::ValueEnum;
use infoseq_core::allocation::TIE_TOL;
use infoseq_core::blackwell::PROB_SUM_TOL;
use infoseq_core::games::SIGN_DEAD_ZONE;
use infoseq_core::gaussian::NON_REDUNDANCY_TOL;
use infoseq_core::special_cases::K2_TIE_TOL;
use serde_json::{Map, Value};

use crate::format::num;

pub const TOOL: &str = "infoseq";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: Map<String, Value>,
    pub result: Map<String, Value>,
    pub table: Table,
    /// Extra `# ` lines for the CSV header.
    pub notes: Vec<String>,
}

pub fn tolerances() -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tieTol".into(), num(TIE_TOL));
    m.insert("nonRedundancyTol".into(), num(NON_REDUNDANCY_TOL));
    m.insert("probabilitySumTol".into(), num(PROB_SUM_TOL));
    m.insert("signDeadZone".into(), num(SIGN_DEAD_ZONE));
    m.insert("k2RelativeTieTol".into(), num(K2_TIE_TOL));
    m
}

fn compact(v: &Value) -> String {
    serde_json::to_string(v).expect("values serialize")
}

impl Report {
    pub fn new(command: &'static str, config: Map<String, Value>) -> Self {
        Report { command, config, result: Map::new(), table: Table::default(), notes: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.result.insert(key.into(), value);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.render_json(),
            Format::Csv => self.render_csv(),
        }
    }

    fn render_json(&self) -> String {
        let mut top = Map::new();
        top.insert("tool".into(), Value::from(TOOL));
        top.insert("version".into(), Value::from(VERSION));
        top.insert("command".into(), Value::from(self.command));
        top.insert("config".into(), Value::Object(self.config.clone()));
        top.insert("tolerances".into(), Value::Object(tolerances()));
        top.insert("result".into(), Value::Object(self.result.clone()));
        serde_json::to_string_pretty(&Value::Object(top)).expect("values serialize") + "\n"
    }

    fn render_csv(&self) -> String {
        let mut out = format!("# {TOOL} {VERSION} {}\n", self.command);
        for (k, v) in &self.config {
            out += &format!("# config {k}={}\n", compact(v));
        }
        for (k, v) in &tolerances() {
            out += &format!("# tolerance {k}={}\n", compact(v));
        }
        for (k, v) in &self.result {
            if !v.is_array() && !v.is_object() {
                out += &format!("# result {k}={}\n", compact(v));
            }
        }
        for note in &self.notes {
            out += &format!("# {note}\n");
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.table.columns).expect("in-memory write");
        for row in &self.table.rows {
            writer.write_record(row).expect("in-memory write");
        }
        out + &String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}
