//! Rendering of command results. Every command builds a JSON object; text
//! and CSV views are derived from it. Scalar fields become `key=value`
//! lines and an array of objects under `rows` becomes a CSV table.

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// Twelve significant digits, fixed notation for moderate magnitudes.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..12).contains(&exp) {
        format!("{:.*}", (11 - exp) as usize, x)
    } else {
        sci
    }
}

/// Round every float in `v` to twelve significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            format!("{x:.11e}")
                .parse::<f64>()
                .ok()
                .and_then(Number::from_f64)
                .map(Value::Number)
                .unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.to_string()
            } else if let Some(u) = n.as_u64() {
                u.to_string()
            } else {
                num(n.as_f64().unwrap_or(f64::NAN))
            }
        }
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(scalar).collect::<Vec<_>>().join(";"),
        Value::Object(_) => serde_json::to_string(v).unwrap_or_default(),
    }
}

fn table(rows: &[Value]) -> String {
    let Some(Value::Object(first)) = rows.first() else {
        return String::new();
    };
    let keys: Vec<&String> = first.keys().collect();
    let mut out = keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = keys.iter().map(|k| row.get(k.as_str()).map(scalar).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn scalars(obj: &Map<String, Value>) -> Vec<(&String, &Value)> {
    obj.iter().filter(|(k, _)| k.as_str() != "rows").collect()
}

pub fn render(v: &Value, format: Format) -> String {
    let obj = v.as_object().cloned().unwrap_or_default();
    let rows = obj.get("rows").and_then(Value::as_array).cloned();
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&round_json(v.clone())).unwrap_or_default();
            s.push('\n');
            s
        }
        Format::Text => {
            let mut out = String::new();
            for (k, val) in scalars(&obj) {
                out.push_str(&format!("{k}={}\n", scalar(val)));
            }
            if let Some(rows) = rows {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&table(&rows));
            }
            out
        }
        Format::Csv => match rows {
            Some(rows) => table(&rows),
            None => {
                let pairs = scalars(&obj);
                let head: Vec<&str> = pairs.iter().map(|(k, _)| k.as_str()).collect();
                let vals: Vec<String> = pairs.iter().map(|(_, v)| scalar(v)).collect();
                format!("{}\n{}\n", head.join(","), vals.join(","))
            }
        },
    }
}
