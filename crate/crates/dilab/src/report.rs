//! Deterministic experiment reports.
//!
//! A report carries everything a rerun must reproduce bit-exactly: the
//! effective config, named scalars in sorted order, per-criterion verdicts,
//! and the series. Anything nondeterministic (wall clock, thread count)
//! lives in a sidecar file instead, so `report.json` is a pure function of
//! the config.

use crate::error::{DilabError, Result};
use crate::functionals::TimeSeries;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

/// One pass/fail verdict. The bound is always copied out of the config's
/// tolerance table, never hard-coded, so every verdict can be traced to a
/// declared number.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Criterion {
    pub name: String,
    /// Measured value the verdict is about.
    pub value: f64,
    /// Declared bound the value was compared against.
    pub tolerance: f64,
    pub passed: bool,
    /// The comparison spelled out, e.g. "residual <= tolerances.residual".
    pub detail: String,
}

impl Criterion {
    /// Pass iff `value <= tolerance`.
    pub fn le(name: impl Into<String>, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Criterion {
            name: name.into(),
            value,
            tolerance,
            passed: value.is_finite() && value <= tolerance,
            detail: detail.into(),
        }
    }

    /// Pass iff `value >= tolerance` (lower bounds, e.g. plateau floors).
    pub fn ge(name: impl Into<String>, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Criterion {
            name: name.into(),
            value,
            tolerance,
            passed: value.is_finite() && value >= tolerance,
            detail: detail.into(),
        }
    }

    /// Pass/fail decided by the caller (trend and ordering checks), with the
    /// governing tolerance still recorded.
    pub fn flag(
        name: impl Into<String>,
        value: f64,
        tolerance: f64,
        passed: bool,
        detail: impl Into<String>,
    ) -> Self {
        Criterion {
            name: name.into(),
            value,
            tolerance,
            passed,
            detail: detail.into(),
        }
    }

    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!(
            "{verdict} {name}: value {value:.6e} vs bound {tol:.6e} ({detail})",
            name = self.name,
            value = self.value,
            tol = self.tolerance,
            detail = self.detail
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Effective config (file merged with overrides) echoed back.
    pub config: serde_json::Value,
    /// Sorted so serialization order never depends on insertion order.
    pub scalars: BTreeMap<String, f64>,
    pub criteria: Vec<Criterion>,
    pub series: Vec<TimeSeries>,
    pub passed: bool,
    /// Set when a run aborted early (tail-mass breach) and the report holds
    /// only what was computed before the abort.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, config: serde_json::Value) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            config,
            scalars: BTreeMap::new(),
            criteria: Vec::new(),
            series: Vec::new(),
            passed: false,
            aborted: None,
        }
    }

    pub fn scalar(&mut self, name: impl Into<String>, value: f64) {
        self.scalars.insert(name.into(), value);
    }

    pub fn criterion(&mut self, c: Criterion) {
        self.criteria.push(c);
    }

    pub fn push_series(&mut self, s: TimeSeries) {
        self.series.push(s);
    }

    /// Final verdict: every criterion passed and nothing aborted.
    pub fn finalize(&mut self) {
        self.passed = self.aborted.is_none() && self.criteria.iter().all(|c| c.passed);
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.criteria.iter().map(Criterion::summary_line).collect()
    }

    /// Serialize to pretty JSON. serde_json writes f64 via the shortest
    /// round-trippable decimal, so parsing the output recovers every scalar
    /// bit-exactly.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| DilabError::Io(std::io::Error::other(format!("report serialization: {e}"))))
    }

    pub fn write_json(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("report.json");
        write_atomic(&path, self.to_json()?.as_bytes())?;
        Ok(path)
    }

    /// One CSV per series: header row, fixed scientific notation with 17
    /// significant digits, '.' decimal separator.
    pub fn write_csvs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for s in &self.series {
            let mut text = format!("{},{}\n", s.units, s.name);
            for (x, y) in s.axis.iter().zip(&s.values) {
                text.push_str(&format!("{x:.16e},{y:.16e}\n"));
            }
            let path = dir.join(format!("{}.csv", sanitize(&s.name)));
            write_atomic(&path, text.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Run metadata that must stay out of the deterministic report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunMeta {
    pub wall_clock_seconds: f64,
    pub threads: usize,
}

pub fn write_meta(dir: &Path, meta: &RunMeta) -> Result<PathBuf> {
    let path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(meta)
        .map_err(|e| DilabError::Io(std::io::Error::other(format!("meta serialization: {e}"))))?;
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

/// Write-temp-then-rename so readers never observe a half-written file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let context = |stage: &str, e: std::io::Error| {
        DilabError::Io(std::io::Error::new(
            e.kind(),
            format!("{stage} {}: {e}", path.display()),
        ))
    };
    let dir = path
        .parent()
        .ok_or_else(|| DilabError::Io(std::io::Error::other("path has no parent directory")))?;
    fs::create_dir_all(dir).map_err(|e| context("create directory for", e))?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| context("write", e))?;
    fs::rename(&tmp, path).map_err(|e| context("rename into", e))?;
    Ok(())
}
