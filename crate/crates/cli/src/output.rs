//! CSV and JSON rendering. CSV uses a header row, `.` decimals and LF line
//! endings; JSON keys keep insertion order.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{Map, Value};

#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Csv::default();
        csv.push_fields(header.iter().map(|s| s.to_string()));
        csv
    }

    pub fn row(&mut self, fields: &[Field]) {
        self.push_fields(fields.iter().map(Field::render));
    }

    fn push_fields(&mut self, fields: impl Iterator<Item = String>) {
        let line: Vec<String> = fields.map(|f| quote(&f)).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// One CSV cell.
pub enum Field {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Field {
    fn render(&self) -> String {
        match self {
            // Shortest round-trip representation; non-finite values as
            // `inf`, `-inf`, `NaN`.
            Field::Num(x) => format!("{x:?}"),
            Field::Int(i) => i.to_string(),
            Field::Text(s) => s.clone(),
            Field::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Num(x)
    }
}

impl From<usize> for Field {
    fn from(i: usize) -> Self {
        Field::Int(i as i64)
    }
}

impl From<i64> for Field {
    fn from(i: i64) -> Self {
        Field::Int(i)
    }
}

impl From<&str> for Field {
    fn from(s: &str) -> Self {
        Field::Text(s.to_string())
    }
}

impl From<bool> for Field {
    fn from(b: bool) -> Self {
        Field::Bool(b)
    }
}

/// Builds an ordered JSON object from `(key, value)` pairs.
pub fn object<const N: usize>(pairs: [(&str, Value); N]) -> Value {
    let mut map = Map::new();
    for (key, value) in pairs {
        map.insert(key.to_string(), value);
    }
    Value::Object(map)
}

/// JSON number, or `null` for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn json_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    text
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).context("writing to stdout")?;
            out.flush().context("writing to stdout")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_line_endings() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&[Field::Num(0.1), Field::Text("x,y".into())]);
        csv.row(&[Field::Num(f64::INFINITY), Field::Int(-3)]);
        assert_eq!(csv.into_string(), "a,b\n0.1,\"x,y\"\ninf,-3\n");
    }

    #[test]
    fn json_keeps_key_order_and_maps_infinity_to_null() {
        let v = object([("z", num(1.5)), ("a", num(f64::INFINITY))]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"z":1.5,"a":null}"#);
    }
}
