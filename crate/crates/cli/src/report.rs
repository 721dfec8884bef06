//! Deterministic report rendering.

use std::fmt::Write;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub pass: bool,
    pub body: Map<String, Value>,
}

/// A float rounded to 12 significant digits; non-finite values become null.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

/// SHA-256 of the canonical (sorted, compact) serialization of the job.
pub fn spec_hash(job: &Value) -> String {
    let canonical = serde_json::to_string(job).expect("values serialize");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

impl Report {
    pub fn with_hash(mut self, hash: String) -> Self {
        self.body.insert("spec_sha256".into(), Value::String(hash));
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&Value::Object(self.body.clone()))
            .expect("values serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let kind = self.body.get("kind").and_then(Value::as_str).unwrap_or("job");
        let _ = writeln!(out, "{kind}: {verdict}");
        for (k, v) in &self.body {
            if k == "kind" || k == "pass" {
                continue;
            }
            render(&mut out, k, v, 0);
        }
        out
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(a) => a.iter().all(|x| !x.is_array() && !x.is_object()),
        Value::Object(_) => false,
        _ => true,
    }
}

fn render(out: &mut String, key: &str, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Array(items) if is_flat(v) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            let _ = writeln!(out, "{pad}{key}: [{}]", parts.join(", "));
        }
        Value::Array(items) => {
            let _ = writeln!(out, "{pad}{key}:");
            if items.is_empty() {
                let _ = writeln!(out, "{pad}  (none)");
            }
            for item in items {
                match item {
                    Value::Object(m) if m.values().all(is_flat) => {
                        let parts: Vec<String> = m
                            .iter()
                            .map(|(k, x)| match x {
                                Value::Array(_) => format!("{k}={}", x),
                                _ => format!("{k}={}", scalar(x)),
                            })
                            .collect();
                        let _ = writeln!(out, "{pad}  - {}", parts.join("  "));
                    }
                    other => render(out, "-", other, depth + 1),
                }
            }
        }
        Value::Object(m) => {
            let _ = writeln!(out, "{pad}{key}:");
            for (k, x) in m {
                render(out, k, x, depth + 1);
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{key}: {}", scalar(other));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(0.1 + 0.2).to_string(), "0.3");
        assert_eq!(num(2f64.sqrt()).to_string(), "1.41421356237");
        assert_eq!(num(-0.0).to_string(), "0.0");
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(num(1.234567890123456e-20).to_string(), "1.23456789012e-20");
    }

    #[test]
    fn hash_ignores_whitespace_and_key_order() {
        let a: Value = serde_json::from_str(r#"{"b": 1, "a": [1, 2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a":[1,2],"b":1}"#).unwrap();
        assert_eq!(spec_hash(&a), spec_hash(&b));
        assert_eq!(spec_hash(&a).len(), 64);
    }
}
