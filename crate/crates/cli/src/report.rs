//! Run reports and their JSON/CSV emission.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{Context as _, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Arithmetic, Format, ScenarioConfig};
use crate::ops::{self, Context, Loaded, OpOutcome, Status, Table};

pub const SCHEMA_VERSION: u32 = 1;

/// One executed operation. Every record is self-describing so it can be
/// re-checked without the rest of the report.
#[derive(Debug, Clone, Serialize)]
pub struct OpRecord {
    pub schema_version: u32,
    pub op: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    pub params: Value,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    pub result: Value,
    #[serde(skip)]
    pub tables: Vec<Table>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub operations: Vec<OpRecord>,
    /// Index of the operation whose oracle disagreement stopped the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted_at: Option<usize>,
    #[serde(skip)]
    pub arithmetic: Arithmetic,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.aborted_at.is_none() && self.operations.iter().all(|r| r.status == Status::Passed)
    }

    pub fn is_partial(&self) -> bool {
        self.operations.iter().any(|r| r.status == Status::Truncated)
    }

    /// The JSON document; rationals become numbers in float mode.
    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if self.arithmetic == Arithmetic::Float {
            render_float(&mut value);
        }
        serde_json::to_string(&value).expect("report serializes")
    }
}

/// Runs the operations of `config` in parallel and assembles the report in
/// declaration order, cut after the first oracle disagreement.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport> {
    config.validate()?;
    let loaded = Loaded::load(&config.fixture).context("loading fixture")?;
    let ctx = Context { fixture: &loaded, mode: &config.mode, caps: config.caps };
    let outcomes: Vec<(OpOutcome, Duration)> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .operations
            .iter()
            .map(|op| {
                let ctx = &ctx;
                scope.spawn(move || {
                    let start = Instant::now();
                    let out = ops::run(ctx, op);
                    (out, start.elapsed())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("operation panicked")).collect()
    });
    let mut report = RunReport { operations: Vec::new(), aborted_at: None, arithmetic: config.mode.arithmetic };
    for (k, (op, (out, elapsed))) in config.operations.iter().zip(outcomes).enumerate() {
        let mut params = serde_json::to_value(op).expect("operations serialize");
        if let Value::Object(map) = &mut params {
            map.remove("op");
        }
        let stop = out.status == Status::Disagreement;
        report.operations.push(OpRecord {
            schema_version: SCHEMA_VERSION,
            op: op.name().into(),
            fixture: loaded.name.clone(),
            params,
            status: out.status,
            message: out.message,
            witness: out.witness,
            result: out.result,
            tables: out.tables,
            elapsed,
        });
        if stop {
            report.aborted_at = Some(k);
            break;
        }
    }
    Ok(report)
}

/// Writes `report.json`, per-operation tables, `timings.csv` and a
/// `manifest.json` listing every file with its schema version. Returns the
/// written paths; the report itself is untouched on error.
pub fn emit_report(report: &RunReport, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let mut write = |name: String, content: &str| -> Result<()> {
        let path = dir.join(&name);
        std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        written.push(name);
        Ok(())
    };
    if format != Format::Csv {
        write("report.json".into(), &report.to_json())?;
    }
    if format != Format::Json {
        for (k, rec) in report.operations.iter().enumerate() {
            for table in &rec.tables {
                let content = if report.arithmetic == Arithmetic::Float && table.extension == "csv" {
                    float_csv(&table.content)
                } else {
                    table.content.clone()
                };
                write(format!("{k:02}-{}-{}.{}", rec.op, table.name, table.extension), &content)?;
            }
        }
    }
    let mut timings = String::from("index,op,seconds\n");
    for (k, rec) in report.operations.iter().enumerate() {
        timings.push_str(&format!("{k},{},{:.6}\n", rec.op, rec.elapsed.as_secs_f64()));
    }
    write("timings.csv".into(), &timings)?;
    let manifest = json!({"schema_version": SCHEMA_VERSION, "partial": report.is_partial(), "files": written});
    let manifest = serde_json::to_string_pretty(&manifest)?;
    let path = dir.join("manifest.json");
    std::fs::write(&path, manifest).with_context(|| format!("writing {}", path.display()))?;
    written.push("manifest.json".into());
    Ok(written.into_iter().map(|name| dir.join(name)).collect())
}

/// `p/q` with integer `p`, `q`.
fn rational_text(s: &str) -> Option<f64> {
    let (p, q) = s.split_once('/')?;
    let p: i128 = p.parse().ok()?;
    let q: i128 = q.parse().ok()?;
    (q != 0).then(|| p as f64 / q as f64)
}

fn render_float(v: &mut Value) {
    match v {
        Value::String(s) => {
            if let Some(x) = rational_text(s).and_then(serde_json::Number::from_f64) {
                *v = Value::Number(x);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(render_float),
        Value::Object(map) => map.values_mut().for_each(render_float),
        _ => {}
    }
}

fn float_csv(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let cells: Vec<String> =
            line.split(',').map(|c| rational_text(c).map_or_else(|| c.to_string(), |x| x.to_string())).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_minimal() {
        let report = run_scenario(&ScenarioConfig::default()).unwrap();
        assert_eq!(report.to_json(), r#"{"operations":[]}"#);
        assert!(report.passed());
    }

    #[test]
    fn float_rendering_converts_rationals_only() {
        let mut v = json!({"a": "3/4", "b": ["1/2", "x/y", "(1/2,1/3)"]});
        render_float(&mut v);
        assert_eq!(v, json!({"a": 0.75, "b": [0.5, "x/y", "(1/2,1/3)"]}));
        assert_eq!(float_csv("x,y\n0,1/4\n"), "x,y\n0,0.25\n");
    }
}
