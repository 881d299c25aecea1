//! Serialization of reports as JSON, CSV or text.

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// A command's result before serialization.
pub struct Rendered {
    pub report: Value,
    /// Replaces the generic text layout.
    pub text: Option<String>,
    /// Replaces the generic `field,value` CSV layout.
    pub csv: Option<Vec<Vec<String>>>,
    pub exit: u8,
}

impl Rendered {
    pub fn new<T: Serialize>(report: &T) -> Self {
        Rendered {
            report: serde_json::to_value(report).expect("reports serialize"),
            text: None,
            csv: None,
            exit: 0,
        }
    }

    pub fn text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    pub fn csv(mut self, rows: Vec<Vec<String>>) -> Self {
        self.csv = Some(rows);
        self
    }

    pub fn exit(mut self, code: u8) -> Self {
        self.exit = code;
        self
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    flags: &'a Value,
    report: &'a Value,
}

pub fn write_report(
    command: &str,
    flags: &Value,
    seed: u64,
    r: &Rendered,
    format: Format,
) -> String {
    match format {
        Format::Json => {
            let env = Envelope {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command,
                seed,
                flags,
                report: &r.report,
            };
            let mut s = serde_json::to_string_pretty(&env).expect("envelope serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let rows = r.csv.clone().unwrap_or_else(|| {
                let mut rows = vec![vec!["field".to_string(), "value".to_string()]];
                flatten_csv("", &r.report, &mut rows);
                rows
            });
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.write_record(&row).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
        }
        Format::Text => match &r.text {
            Some(text) => text.clone(),
            None => {
                let mut out = String::new();
                text_lines("", &r.report, &mut out);
                out
            }
        },
    }
}

/// Twelve significant digits, then the shortest decimal for that value.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("own format parses");
    if rounded == 0.0 {
        return "0".into();
    }
    let mag = rounded.abs();
    if !(1e-6..1e15).contains(&mag) {
        format!("{rounded:e}")
    } else {
        rounded.to_string()
    }
}

fn rational_decimal(s: &str) -> Option<String> {
    let (n, d) = s.split_once('/')?;
    let n: i128 = n.parse().ok()?;
    let d: i128 = d.parse().ok()?;
    (d != 0).then(|| sig12(n as f64 / d as f64))
}

pub fn csv_scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
        Value::Number(n) => sig12(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => rational_decimal(s).unwrap_or_else(|| s.clone()),
        other => other.to_string(),
    }
}

fn flatten_csv(prefix: &str, v: &Value, rows: &mut Vec<Vec<String>>) {
    let join = |key: &str| {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    };
    match v {
        Value::Object(map) => {
            for (key, val) in map {
                flatten_csv(&join(key), val, rows);
            }
        }
        Value::Array(items) => {
            for (idx, val) in items.iter().enumerate() {
                flatten_csv(&join(&idx.to_string()), val, rows);
            }
        }
        scalar => rows.push(vec![prefix.to_string(), csv_scalar(scalar)]),
    }
}

fn text_scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Object(_) | Value::Array(_))
}

fn text_lines(indent: &str, v: &Value, out: &mut String) {
    let Value::Object(map) = v else {
        out.push_str(&format!("{indent}{}\n", text_scalar(v)));
        return;
    };
    for (key, val) in map {
        match val {
            Value::Array(items) if items.iter().all(is_scalar) => {
                let parts: Vec<String> = items.iter().map(text_scalar).collect();
                out.push_str(&format!("{indent}{key}: {}\n", parts.join(" ")));
            }
            Value::Array(items) if items.iter().all(|i| matches!(i, Value::Object(_))) => {
                out.push_str(&format!("{indent}{key}:\n"));
                table(&format!("{indent}  "), items, out);
            }
            Value::Object(_) => {
                out.push_str(&format!("{indent}{key}:\n"));
                text_lines(&format!("{indent}  "), val, out);
            }
            Value::Array(_) => out.push_str(&format!("{indent}{key}: {val}\n")),
            scalar => out.push_str(&format!("{indent}{key}: {}\n", text_scalar(scalar))),
        }
    }
}

/// Rows of objects as a whitespace table; columns are the union of keys in first-seen order.
fn table(indent: &str, items: &[Value], out: &mut String) {
    let mut columns: Vec<String> = Vec::new();
    for item in items {
        if let Value::Object(map) = item {
            for key in map.keys() {
                if !columns.contains(key) {
                    columns.push(key.clone());
                }
            }
        }
    }
    out.push_str(&format!("{indent}{}\n", columns.join(" ")));
    let empty = Map::new();
    for item in items {
        let map = item.as_object().unwrap_or(&empty);
        let cells: Vec<String> = columns
            .iter()
            .map(|c| match map.get(c) {
                Some(v) if is_scalar(v) => text_scalar(v),
                Some(v) => v.to_string(),
                None => "-".into(),
            })
            .collect();
        out.push_str(&format!("{indent}{}\n", cells.join(" ")));
    }
}
