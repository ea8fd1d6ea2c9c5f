//! Deterministic report writing: every float is rounded to 12 significant
//! digits before serialization, JSON objects use sorted keys, and CSV cells
//! go through the same rounding, so identical config + seed reproduces
//! byte-identical outputs.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

/// Round to 12 significant digits through the shortest round-trip
/// representation.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Identical rounding, rendered for CSV cells.
pub fn csv_num(x: f64) -> String {
    let r = round12(x);
    if r.is_finite() {
        format!("{r}")
    } else if r.is_nan() {
        "nan".into()
    } else if r > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Recursively round every number in a JSON value.
pub fn round_value(value: Value) -> Value {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    return serde_json::Number::from_f64(round12(f))
                        .map(Value::Number)
                        .unwrap_or(Value::Null);
                }
            }
            Value::Number(n)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                out.insert(k, round_value(v));
            }
            Value::Object(out)
        }
        other => other,
    }
}

pub struct CsvWriter {
    rows: Vec<String>,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        CsvWriter {
            rows: vec![header.join(",")],
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.rows.push(cells.join(","));
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        fs::write(path, self.rows.join("\n") + "\n")?;
        Ok(())
    }
}

/// Write the summary JSON with sorted keys and rounded floats.
pub fn write_summary(path: &Path, summary: Value) -> anyhow::Result<()> {
    let rounded = round_value(summary);
    let text = serde_json::to_string_pretty(&rounded)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_idempotent_and_12_digits() {
        let x = 0.123_456_789_012_345_68;
        let r = round12(x);
        assert_eq!(round12(r), r);
        assert!((r - x).abs() < 1e-12);
        assert_eq!(round12(0.0), 0.0);
        assert_eq!(round12(1.0), 1.0);
    }

    #[test]
    fn json_numbers_rounded_recursively() {
        let v = serde_json::json!({"a": [0.12345678901234567], "b": {"c": 1.9999999999999998}});
        let r = round_value(v);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("0.123456789012"));
        assert!(text.contains('2'));
    }
}
