//! Parameter sweeps.
//!
//! A sweep file is a scenario file with one extra section naming a dotted
//! key and the values it takes:
//!
//! ```toml
//! [sweep]
//! key = "params.eps"
//! values = [1e-1, 1e-2, 1e-3]
//! ```
//!
//! Every case is validated before any case runs. Cases then run in parallel,
//! each writing only into its own `case_NNN` directory.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{locate, ScenarioConfig};
use crate::error::{HarnessError, Result, Status};
use crate::output;
use crate::scenario::run_scenario;
use crate::suite::worker_count;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub key: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCase {
    pub index: usize,
    pub value: serde_json::Value,
    pub dir: PathBuf,
    pub pass: bool,
    pub status: i32,
    pub failed_gates: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub key: String,
    pub pass: bool,
    pub cases: Vec<SweepCase>,
}

impl SweepSummary {
    pub fn status(&self) -> Status {
        self.cases
            .iter()
            .map(|c| c.status)
            .max()
            .map(|code| match code {
                0 => Status::Pass,
                1 => Status::GateFailure,
                _ => Status::InvalidInput,
            })
            .unwrap_or(Status::Pass)
    }
}

/// Splits a sweep document into its `[sweep]` section and the scenario table.
pub fn split(text: &str) -> Result<(SweepSpec, toml::Table)> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        HarnessError::config(line, e.message().trim().to_string())
    })?;
    let sweep = table
        .remove("sweep")
        .ok_or_else(|| HarnessError::config(None, "missing [sweep] section"))?;
    let spec: SweepSpec = sweep.try_into().map_err(|e: toml::de::Error| {
        HarnessError::config(locate(text, "sweep", "key"), e.message().trim().to_string())
    })?;
    if spec.values.is_empty() {
        return Err(HarnessError::config(
            locate(text, "sweep", "values"),
            "sweep has no values",
        ));
    }
    Ok((spec, table))
}

/// Replaces the value at dotted `key`; the parent tables must exist.
pub fn set_dotted(
    table: &mut toml::Table,
    key: &str,
    value: toml::Value,
) -> std::result::Result<(), String> {
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().ok_or("empty key")?;
    let mut t = table;
    for p in parents {
        t = t
            .get_mut(*p)
            .and_then(|v| v.as_table_mut())
            .ok_or_else(|| format!("no table `{p}` on the path of `{key}`"))?;
    }
    t.insert((*last).to_string(), value);
    Ok(())
}

fn to_json(v: &toml::Value) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

/// Runs every case of a sweep document into `out/case_NNN` and writes
/// `out/sweep.json`. `seed` overrides the scenario seed when given.
pub fn run_sweep(text: &str, out: &Path, seed: Option<u64>) -> Result<SweepSummary> {
    let (spec, base) = split(text)?;
    let key_line = locate(text, "sweep", "key");
    let mut prepared = Vec::with_capacity(spec.values.len());
    for (i, v) in spec.values.iter().enumerate() {
        let mut table = base.clone();
        set_dotted(&mut table, &spec.key, v.clone())
            .map_err(|m| HarnessError::config(key_line, m))?;
        let cfg: ScenarioConfig =
            toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| {
                    HarnessError::config(key_line, format!("case {i}: {}", e.message().trim()))
                })?;
        let mut cfg = cfg;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let prep = cfg.prepare(text).map_err(|e| match e {
            HarnessError::Config { line, message, .. } => {
                HarnessError::config(line, format!("case {i} ({} = {v}): {message}", spec.key))
            }
            other => other,
        })?;
        prepared.push(prep);
    }
    output::ensure_dir(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .expect("thread pool");
    let cases: Vec<SweepCase> = pool.install(|| {
        prepared
            .par_iter()
            .enumerate()
            .map(|(i, prep)| {
                let dir = out.join(format!("case_{i:03}"));
                let value = to_json(&spec.values[i]);
                match run_scenario(prep, &dir) {
                    Ok(s) => SweepCase {
                        index: i,
                        value,
                        dir: PathBuf::from(format!("case_{i:03}")),
                        pass: s.pass,
                        status: s.status().code(),
                        failed_gates: s
                            .gates
                            .iter()
                            .filter(|g| !g.pass)
                            .map(|g| g.name.clone())
                            .collect(),
                        error: s.error,
                    },
                    Err(e) => SweepCase {
                        index: i,
                        value,
                        dir: PathBuf::from(format!("case_{i:03}")),
                        pass: false,
                        status: e.status().code(),
                        failed_gates: Vec::new(),
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    let summary = SweepSummary {
        key: spec.key,
        pass: cases.iter().all(|c| c.pass),
        cases,
    };
    output::write_json(&out.join("sweep.json"), &summary)?;
    Ok(summary)
}
