//! Tables and their CSV/JSON serialization.
//!
//! Floats are written with 17 significant digits so that every value
//! round-trips. Non-finite values are written as `NaN`, `inf` or `-inf`
//! (strings in JSON) so divergent points stay visible.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value as Json};

use super::config::{Format, Plan};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Str(String),
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Self::Float(x)
    }
}

impl From<i64> for Value {
    fn from(x: i64) -> Self {
        Self::Int(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Self::Int(x as i64)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Self::Int(x as i64)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Self::Str(x.to_string())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Self::Str(x)
    }
}

fn non_finite(x: f64) -> &'static str {
    if x.is_nan() {
        "NaN"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

/// 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        non_finite(x).to_string()
    }
}

impl Value {
    fn csv_field(&self) -> String {
        match self {
            Self::Int(i) => i.to_string(),
            Self::Float(x) => format_float(*x),
            Self::Str(s) => s.clone(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Self::Int(i) => json!(i),
            Self::Float(x) if x.is_finite() => json!(x),
            Self::Float(x) => json!(non_finite(*x)),
            Self::Str(s) => json!(s),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Self::Int(i) => Some(*i as f64),
            Self::Float(x) => Some(*x),
            Self::Str(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Empty for the main table; otherwise the suffix of its sibling file.
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Self { name: name.to_string(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header of table `{}`", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }
}

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
    /// Scalar results (fits), also embedded in every file's metadata.
    pub summary: Vec<(String, Value)>,
}

impl Report {
    pub fn main(&self) -> &Table {
        &self.tables[0]
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).and_then(|(_, v)| v.as_f64())
    }
}

fn meta(plan: &Plan, report: &Report, table: &Table) -> Map<String, Json> {
    let mut m = Map::new();
    m.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
    m.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("config_sha256".into(), json!(plan.config_hash));
    m.insert("experiment".into(), json!(plan.experiment.name()));
    if !table.name.is_empty() {
        m.insert("table".into(), json!(table.name));
    }
    let summary: Map<String, Json> = report.summary.iter().map(|(k, v)| (k.clone(), v.json())).collect();
    m.insert("summary".into(), Json::Object(summary));
    m
}

/// Path of a table's file: the configured path for the main table,
/// `<stem>.<name>.<ext>` for the others.
pub fn table_path(base: &Path, table: &Table) -> PathBuf {
    if table.name.is_empty() {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = base.extension().map(|s| format!(".{}", s.to_string_lossy())).unwrap_or_default();
    base.with_file_name(format!("{stem}.{}{ext}", table.name))
}

/// CSV with the metadata as leading `#` comment lines.
pub fn render_csv(plan: &Plan, report: &Report, table: &Table) -> Vec<u8> {
    let mut out = Vec::new();
    for (k, v) in meta(plan, report, table) {
        let text = match v {
            Json::String(s) => s,
            other => other.to_string(),
        };
        writeln!(out, "# {k}: {text}").expect("writes to a Vec");
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns).expect("writes to a Vec");
    for row in &table.rows {
        w.write_record(row.iter().map(Value::csv_field)).expect("writes to a Vec");
    }
    w.into_inner().expect("flushes to a Vec")
}

/// One JSON object `{meta, rows}`, rows as objects keyed by column.
pub fn render_json(plan: &Plan, report: &Report, table: &Table) -> Vec<u8> {
    let rows: Vec<Json> = table
        .rows
        .iter()
        .map(|r| Json::Object(table.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.json())).collect()))
        .collect();
    let doc = json!({ "meta": meta(plan, report, table), "rows": rows });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("JSON values serialize");
    bytes.push(b'\n');
    bytes
}

/// Writes every table of the report and returns the paths written.
pub fn write_report(plan: &Plan, report: &Report) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for table in &report.tables {
        let path = table_path(&plan.output.path, table);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let bytes = match plan.output.format {
            Format::Csv => render_csv(plan, report, table),
            Format::Json => render_json(plan, report, table),
        };
        fs::write(&path, bytes)?;
        written.push(path);
    }
    Ok(written)
}
