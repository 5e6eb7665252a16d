//! Report documents and their CSV/JSON renderings.
//!
//! Bodies are deterministic: fixed column order, floats printed with 17
//! significant digits, no timestamps. Wall-clock metadata goes to a separate
//! `.meta.json` file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use thiserror::Error;

use crate::config::Scenario;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv encoding failed: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Null,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Int(v as i64)
    }
}

impl From<i32> for Value {
    fn from(v: i32) -> Self {
        Value::Int(v as i64)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

/// 17 significant digits, so every f64 round-trips.
pub fn format_float(v: f64) -> Option<String> {
    v.is_finite().then(|| format!("{v:.16e}"))
}

impl Value {
    fn csv_field(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Float(f) => format_float(*f).unwrap_or_else(|| f.to_string()),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::Null => String::new(),
        }
    }

    fn write_json(&self, out: &mut String) {
        match self {
            Value::Int(i) => write!(out, "{i}").unwrap(),
            Value::Float(f) => out.push_str(&format_float(*f).unwrap_or_else(|| "null".into())),
            Value::Text(s) => json_string(out, s),
            Value::Bool(b) => write!(out, "{b}").unwrap(),
            Value::Null => out.push_str("null"),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float(f) => Some(*f),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

fn json_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => write!(out, "\\u{:04x}", c as u32).unwrap(),
            c => out.push(c),
        }
    }
    out.push('"');
}

/// A named table with a fixed column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width for table {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Value at `(row, column name)`.
    pub fn get(&self, row: usize, column: &str) -> Option<&Value> {
        self.rows.get(row)?.get(self.column(column)?)
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::csv_field))?;
        }
        let bytes = w.into_inner().map_err(|e| ReportError::Io {
            path: self.name.clone(),
            source: e.into_error(),
        })?;
        Ok(String::from_utf8(bytes).expect("utf-8 input"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub scenario: Scenario,
    /// Per-scenario schema version of the tables.
    pub schema_version: u32,
    pub config_hash: String,
    pub version: String,
    pub tables: Vec<Table>,
    /// Plot-data companions, always written as CSV.
    pub plots: Vec<Table>,
    pub checks: Vec<Check>,
    /// Integrator or Newton failures; these map to exit status 3.
    pub numerical_failures: Vec<String>,
}

impl ReportDocument {
    pub fn new(scenario: Scenario, schema_version: u32, config_hash: String) -> Self {
        Self {
            scenario,
            schema_version,
            config_hash,
            version: env!("CARGO_PKG_VERSION").to_string(),
            tables: Vec::new(),
            plots: Vec::new(),
            checks: Vec::new(),
            numerical_failures: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn plot(&self, name: &str) -> Option<&Table> {
        self.plots.iter().find(|t| t.name == name)
    }

    /// True iff every check passed and nothing failed numerically.
    pub fn summary_pass(&self) -> bool {
        self.numerical_failures.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// 0 = pass, 1 = a mathematical check failed, 3 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        if !self.numerical_failures.is_empty() {
            3
        } else if self.checks.iter().all(|c| c.pass) {
            0
        } else {
            1
        }
    }

    fn summary_table(&self) -> Table {
        let mut t = Table::new("summary", &["check", "pass", "detail"]);
        for c in &self.checks {
            t.push(vec![
                c.name.as_str().into(),
                c.pass.into(),
                c.detail.as_str().into(),
            ]);
        }
        for f in &self.numerical_failures {
            t.push(vec!["numerical".into(), false.into(), f.as_str().into()]);
        }
        t
    }

    fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        let field = |out: &mut String, key: &str, value: &str| {
            json_string(out, key);
            out.push_str(": ");
            out.push_str(value);
            out.push_str(",\n");
        };
        let mut s = String::new();
        json_string(&mut s, self.scenario.name());
        field(&mut out, "scenario", &s);
        field(&mut out, "schema_version", &self.schema_version.to_string());
        let mut s = String::new();
        json_string(&mut s, &self.config_hash);
        field(&mut out, "config_hash", &s);
        let mut s = String::new();
        json_string(&mut s, &self.version);
        field(&mut out, "version", &s);
        field(&mut out, "pass", &self.summary_pass().to_string());
        out.push_str("\"checks\": [");
        for (i, c) in self.checks.iter().enumerate() {
            out.push_str(if i == 0 { "\n  " } else { ",\n  " });
            out.push_str("{\"name\": ");
            json_string(&mut out, &c.name);
            write!(out, ", \"pass\": {}, \"detail\": ", c.pass).unwrap();
            json_string(&mut out, &c.detail);
            out.push('}');
        }
        out.push_str(if self.checks.is_empty() {
            "],\n"
        } else {
            "\n],\n"
        });
        out.push_str("\"numerical_failures\": [");
        for (i, f) in self.numerical_failures.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            json_string(&mut out, f);
        }
        out.push_str("],\n\"tables\": {");
        for (ti, t) in self.tables.iter().enumerate() {
            out.push_str(if ti == 0 { "\n" } else { ",\n" });
            json_string(&mut out, &t.name);
            out.push_str(": [");
            for (ri, row) in t.rows.iter().enumerate() {
                out.push_str(if ri == 0 { "\n  {" } else { ",\n  {" });
                for (ci, (col, v)) in t.columns.iter().zip(row).enumerate() {
                    if ci > 0 {
                        out.push_str(", ");
                    }
                    json_string(&mut out, col);
                    out.push_str(": ");
                    v.write_json(&mut out);
                }
                out.push('}');
            }
            out.push_str(if t.rows.is_empty() { "]" } else { "\n]" });
        }
        out.push_str(if self.tables.is_empty() {
            "}\n}\n"
        } else {
            "\n}\n}\n"
        });
        out
    }
}

/// In-memory report files as `(file name, contents)`, without the meta file.
pub fn render_report(
    doc: &ReportDocument,
    format: Format,
    stem: &str,
) -> Result<Vec<(String, String)>, ReportError> {
    let mut files = Vec::new();
    match format {
        Format::Json => files.push((format!("{stem}.json"), doc.to_json())),
        Format::Csv => {
            for t in &doc.tables {
                files.push((format!("{stem}.{}.csv", t.name), t.to_csv()?));
            }
            files.push((format!("{stem}.summary.csv"), doc.summary_table().to_csv()?));
        }
    }
    for p in &doc.plots {
        files.push((format!("{stem}.{}.plot.csv", p.name), p.to_csv()?));
    }
    Ok(files)
}

/// Run metadata. Kept out of the report bodies so they stay reproducible.
pub fn render_meta(doc: &ReportDocument, files: &[String]) -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut out = String::from("{\n");
    out.push_str("\"scenario\": ");
    json_string(&mut out, doc.scenario.name());
    out.push_str(",\n\"config_hash\": ");
    json_string(&mut out, &doc.config_hash);
    out.push_str(",\n\"version\": ");
    json_string(&mut out, &doc.version);
    write!(out, ",\n\"generated_unix\": {secs},\n\"files\": [").unwrap();
    for (i, f) in files.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        json_string(&mut out, f);
    }
    out.push_str("]\n}\n");
    out
}

/// Write the report, its plot companions and a meta file into `dir`.
/// Returns the written paths (meta last).
pub fn emit_report(
    doc: &ReportDocument,
    format: Format,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, ReportError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ReportError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let files = render_report(doc, format, stem)?;
    let mut written = Vec::new();
    for (name, body) in &files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(io(&path))?;
        written.push(path);
    }
    let names: Vec<String> = files.into_iter().map(|(n, _)| n).collect();
    let meta = dir.join(format!("{stem}.meta.json"));
    std::fs::write(&meta, render_meta(doc, &names)).map_err(io(&meta))?;
    written.push(meta);
    Ok(written)
}
