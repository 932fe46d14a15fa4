//! Report serialization: JSON (12 significant digits) or flat CSV,
//! written atomically.

use serde::Serialize;
use serde_json::Value;
use std::fs;
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Rounds to 12 significant digits; keeps reports reproducible without
/// implying precision the optimizer does not have.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(11 - exp);
    (x * scale).round() / scale
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(f)) {
                        *v = Value::Number(r);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Full report: schema tag, echoed configuration, command result.
pub fn build<C: Serialize, R: Serialize>(
    command: &str,
    config: &C,
    result: &R,
) -> serde_json::Result<Value> {
    let mut v = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": serde_json::to_value(config)?,
        "result": serde_json::to_value(result)?,
    });
    round_value(&mut v);
    Ok(v)
}

/// Writes through a temp file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn emit(path: Option<&Path>, contents: &str) -> std::io::Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// Flat CSV rendering of a report value: `section,key,value` rows for
/// scalars, one row per array element with its index.
pub fn to_csv(v: &Value) -> String {
    let mut out = String::from("section,key,value\n");
    flatten("", v, &mut out);
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, val, out);
            }
        }
        Value::Array(items) => {
            for (i, val) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), val, out);
            }
        }
        scalar => {
            let (section, key) = match prefix.rsplit_once('.') {
                Some((s, k)) => (s.to_string(), k.to_string()),
                None => (String::new(), prefix.to_string()),
            };
            out.push_str(&format!("{section},{key},{scalar}\n"));
        }
    }
}
