//! Delta report between two run summaries of the same scenario.

use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompareError {
    #[error("summary {0} is missing field {1:?}")]
    Missing(&'static str, &'static str),
    #[error("runs are of different scenarios: fingerprint {a} vs {b}")]
    Mismatch { a: String, b: String },
}

fn delta(a: Option<f64>, b: Option<f64>) -> Value {
    match (a, b) {
        (Some(a), Some(b)) => {
            let ratio = if a != 0.0 { Value::from(b / a) } else if b == 0.0 { Value::from(1.0) } else { Value::Null };
            json!({ "a": a, "b": b, "delta": b - a, "ratio": ratio })
        }
        _ => json!({ "a": a, "b": b, "delta": null, "ratio": null }),
    }
}

fn num(v: &Value, path: &[&str]) -> Option<f64> {
    path.iter().try_fold(v, |v, k| v.get(k))?.as_f64()
}

/// Per-metric deltas `b - a` and ratios `b / a`. Refuses summaries whose
/// scenario fingerprints differ.
pub fn compare(a: &Value, b: &Value) -> Result<Value, CompareError> {
    let fp = |v: &Value, which| v.get("fingerprint").and_then(Value::as_str).map(str::to_string).ok_or(CompareError::Missing(which, "fingerprint"));
    let (fa, fb) = (fp(a, "A")?, fp(b, "B")?);
    if fa != fb {
        return Err(CompareError::Mismatch { a: fa, b: fb });
    }
    let flows_a = a.get("flows").and_then(Value::as_array).ok_or(CompareError::Missing("A", "flows"))?;
    let flows_b = b.get("flows").and_then(Value::as_array).ok_or(CompareError::Missing("B", "flows"))?;
    let mut flows = Map::new();
    for fa in flows_a {
        let name = fa.get("name").and_then(Value::as_str).unwrap_or_default();
        let fb = flows_b.iter().find(|f| f.get("name").and_then(Value::as_str) == Some(name));
        let mut m = Map::new();
        for k in ["delivered", "lost", "p50_ns", "p95_ns", "p99_ns", "mean_ns"] {
            m.insert(k.to_string(), delta(num(fa, &[k]), fb.and_then(|f| num(f, &[k]))));
        }
        flows.insert(name.to_string(), Value::Object(m));
    }
    let pairs: [(&str, &[&str]); 7] = [
        ("collisions", &["air_totals", "collisions"]),
        ("coordination_failures", &["air_totals", "coordination_failures"]),
        ("fttr_joules", &["energy", "fttr_joules"]),
        ("ftth_joules", &["energy", "ftth_joules"]),
        ("fttr_ftth_ratio", &["energy", "fttr_ftth_ratio"]),
        ("omci_upstream_max_delay_ns", &["omci", "upstream_max_delay_ns"]),
        ("alarms", &["alarms", "total"]),
    ];
    let mut global = Map::new();
    for (name, path) in pairs {
        global.insert(name.to_string(), delta(num(a, path), num(b, path)));
    }
    Ok(json!({
        "fingerprint": fa,
        "a": { "mode": a.get("mode"), "seed": a.get("seed") },
        "b": { "mode": b.get("mode"), "seed": b.get("seed") },
        "global": global,
        "flows": flows,
    }))
}
