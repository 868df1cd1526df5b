//! report.json layout and its schema check.
//!
//! ```text
//! {
//!   "config":     resolved run configuration,
//!   "repeats":    [{seed, accuracy, auc, f1, rig: [3], timing: {...}, ...}],
//!   "aggregate":  {accuracy|auc|f1: {mean, sd, ci_low, ci_high}},
//!   "rig":        [3] mean over repeats,
//!   "biomarkers": {meth|mrna|mirna: [{rank, feature, score, column}]},
//!   "timing":     mean seconds per stage
//! }
//! ```

use anyhow::{bail, Result};
use motgnn::model::{BaselineReport, ExperimentReport};
use motgnn::MODALITY_NAMES;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::RunConfig;

pub const METRICS: [&str; 3] = ["accuracy", "auc", "f1"];
const TIMING_KEYS: [&str; 4] = ["ensemble_fit", "graph_build", "nn_train", "eval"];

#[derive(Serialize)]
struct ExperimentDoc<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    report: &'a ExperimentReport,
}

#[derive(Serialize)]
struct BaselineDoc<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    report: &'a BaselineReport,
}

pub fn experiment_json(config: &RunConfig, report: &ExperimentReport) -> Result<String> {
    let value = serde_json::to_value(ExperimentDoc { config, report })?;
    validate_report(&value)?;
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

pub fn baseline_json(config: &RunConfig, report: &BaselineReport) -> Result<String> {
    let value = serde_json::to_value(BaselineDoc { config, report })?;
    let obj = object(&value, "report")?;
    field(obj, "config", "report")?;
    validate_aggregate(field(obj, "aggregate", "report")?)?;
    for (i, r) in array(field(obj, "repeats", "report")?, "repeats")?.iter().enumerate() {
        validate_metrics(object(r, &format!("repeats[{i}]"))?, i)?;
    }
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    match v {
        Value::Object(m) => Ok(m),
        _ => bail!("report schema: `{what}` must be an object"),
    }
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    match v {
        Value::Array(a) => Ok(a),
        _ => bail!("report schema: `{what}` must be an array"),
    }
}

fn field<'a>(m: &'a Map<String, Value>, key: &str, what: &str) -> Result<&'a Value> {
    match m.get(key) {
        Some(v) => Ok(v),
        None => bail!("report schema: `{what}` lacks `{key}`"),
    }
}

fn number(m: &Map<String, Value>, key: &str, what: &str) -> Result<f64> {
    match field(m, key, what)?.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => bail!("report schema: `{what}.{key}` must be a finite number"),
    }
}

fn validate_metrics(r: &Map<String, Value>, i: usize) -> Result<()> {
    let what = format!("repeats[{i}]");
    if field(r, "seed", &what)?.as_u64().is_none() {
        bail!("report schema: `{what}.seed` must be a non-negative integer");
    }
    for m in METRICS {
        let x = number(r, m, &what)?;
        if !(0.0..=1.0).contains(&x) {
            bail!("report schema: `{what}.{m}` = {x} outside [0, 1]");
        }
    }
    Ok(())
}

fn validate_aggregate(v: &Value) -> Result<()> {
    let agg = object(v, "aggregate")?;
    for m in METRICS {
        let what = format!("aggregate.{m}");
        let s = object(field(agg, m, "aggregate")?, &what)?;
        let mean = number(s, "mean", &what)?;
        let sd = number(s, "sd", &what)?;
        let lo = number(s, "ci_low", &what)?;
        let hi = number(s, "ci_high", &what)?;
        if sd < 0.0 || !(lo <= mean && mean <= hi) {
            bail!("report schema: `{what}` interval [{lo}, {hi}] does not bracket mean {mean}");
        }
    }
    Ok(())
}

fn validate_rig(v: &Value, what: &str) -> Result<()> {
    let rig = array(v, what)?;
    let vals: Vec<f64> = rig.iter().filter_map(Value::as_f64).collect();
    if vals.len() != MODALITY_NAMES.len() || vals.iter().any(|x| *x < 0.0) {
        bail!("report schema: `{what}` must hold three non-negative numbers");
    }
    if (vals.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        bail!("report schema: `{what}` does not sum to 1");
    }
    Ok(())
}

/// Checks the documented layout of an experiment report.
pub fn validate_report(v: &Value) -> Result<()> {
    let top = object(v, "report")?;
    object(field(top, "config", "report")?, "config")?;
    let repeats = array(field(top, "repeats", "report")?, "repeats")?;
    if repeats.is_empty() {
        bail!("report schema: `repeats` is empty");
    }
    for (i, r) in repeats.iter().enumerate() {
        let what = format!("repeats[{i}]");
        let r = object(r, &what)?;
        validate_metrics(r, i)?;
        validate_rig(field(r, "rig", &what)?, &format!("{what}.rig"))?;
        let t = object(field(r, "timing", &what)?, &format!("{what}.timing"))?;
        for k in TIMING_KEYS {
            number(t, k, &format!("{what}.timing"))?;
        }
    }
    validate_aggregate(field(top, "aggregate", "report")?)?;
    validate_rig(field(top, "rig", "report")?, "rig")?;
    let bio = object(field(top, "biomarkers", "report")?, "biomarkers")?;
    for name in MODALITY_NAMES {
        let what = format!("biomarkers.{name}");
        for (j, b) in array(field(bio, name, "biomarkers")?, &what)?.iter().enumerate() {
            let entry = object(b, &what)?;
            if field(entry, "rank", &what)?.as_u64() != Some(j as u64 + 1) {
                bail!("report schema: `{what}` ranks must run 1, 2, ...");
            }
            if !field(entry, "feature", &what)?.is_string() {
                bail!("report schema: `{what}[{j}].feature` must be a string");
            }
            number(entry, "score", &what)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn good() -> Value {
        let summary = json!({"mean": 0.9, "sd": 0.01, "ci_low": 0.89, "ci_high": 0.91});
        let timing = json!({"ensemble_fit": 1.0, "graph_build": 0.0, "nn_train": 2.0, "eval": 0.0});
        json!({
            "config": {},
            "repeats": [{"seed": 0, "accuracy": 0.9, "auc": 0.95, "f1": 0.8, "rig": [0.5, 0.25, 0.25], "timing": timing}],
            "aggregate": {"accuracy": summary, "auc": summary, "f1": summary},
            "rig": [0.5, 0.25, 0.25],
            "biomarkers": {"meth": [{"rank": 1, "feature": "a", "score": 2.0}], "mrna": [], "mirna": []},
            "timing": timing
        })
    }

    #[test]
    fn accepts_documented_layout() {
        validate_report(&good()).unwrap();
    }

    #[test]
    fn rejects_violations() {
        let mut v = good();
        v["repeats"][0]["auc"] = json!(1.5);
        assert!(validate_report(&v).is_err());
        let mut v = good();
        v["rig"] = json!([0.5, 0.6, 0.1]);
        assert!(validate_report(&v).is_err());
        let mut v = good();
        v["aggregate"]["f1"]["ci_low"] = json!(0.95);
        assert!(validate_report(&v).is_err());
        let mut v = good();
        v.as_object_mut().unwrap().remove("biomarkers");
        assert!(validate_report(&v).unwrap_err().to_string().contains("biomarkers"));
        let mut v = good();
        v["biomarkers"]["meth"][0]["rank"] = json!(2);
        assert!(validate_report(&v).is_err());
    }
}
