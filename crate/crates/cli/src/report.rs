//! Run reports: one JSON object per run, CSV for sweeps.
//!
//! ```json
//! {
//!   "suite": "check-rules",
//!   "kernel": "random:42",
//!   "seed": 42,
//!   "parameters": { "sites": 3, ... },
//!   "checks": [
//!     { "name": "sum_rule", "relation": "at_most", "tolerance": 1.0000000000000000e-12,
//!       "max": ..., "mean": ..., "min": ..., "cases": 200, "excluded": 0, "passed": true }
//!   ],
//!   "passed": true,
//!   "sweep": { "columns": [...], "rows": [[...], ...] },
//!   "wall_time_s": 0.12
//! }
//! ```
//!
//! Floats are written with 17 significant digits; non-finite values are
//! written as `null`. `sweep` and `wall_time_s` are omitted when absent.

use std::fmt::Write as _;

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// A float serialized with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F17(pub f64);

impl F17 {
    pub fn text(self) -> String {
        if self.0.is_finite() {
            format!("{:.16e}", self.0)
        } else {
            "null".to_string()
        }
    }
}

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawValue::from_string(self.text())
            .map_err(S::Error::custom)?
            .serialize(serializer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `max <= tolerance`
    AtMost,
    /// `min > tolerance`: every case exceeds
    AllExceed,
    /// `max > tolerance`: at least one case exceeds
    MaxExceeds,
    /// `|value - target| <= tolerance` for every case
    Within { target: F17 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub relation: Relation,
    pub tolerance: F17,
    pub max: F17,
    pub mean: F17,
    pub min: F17,
    pub cases: usize,
    pub excluded: usize,
    pub passed: bool,
}

impl CheckResult {
    /// Aggregates `values` (in case order) against `relation`. A check with
    /// no evaluated cases fails.
    pub fn new(name: &str, relation: Relation, tolerance: f64, values: &[f64], excluded: usize) -> Self {
        let finite = values.iter().all(|v| v.is_finite());
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let passed = !values.is_empty()
            && finite
            && match relation {
                Relation::AtMost => max <= tolerance,
                Relation::AllExceed => min > tolerance,
                Relation::MaxExceeds => max > tolerance,
                Relation::Within { target } => {
                    values.iter().all(|v| (v - target.0).abs() <= tolerance)
                }
            };
        CheckResult {
            name: name.to_string(),
            relation,
            tolerance: F17(tolerance),
            max: F17(if values.is_empty() { f64::NAN } else { max }),
            mean: F17(mean),
            min: F17(if values.is_empty() { f64::NAN } else { min }),
            cases: values.len(),
            excluded,
            passed,
        }
    }

    pub fn summary(&self) -> String {
        let relation = match self.relation {
            Relation::AtMost => format!("max {} <= {}", short(self.max.0), short(self.tolerance.0)),
            Relation::AllExceed => format!("min {} > {}", short(self.min.0), short(self.tolerance.0)),
            Relation::MaxExceeds => format!("max {} > {}", short(self.max.0), short(self.tolerance.0)),
            Relation::Within { target } => format!(
                "{} within {} of {}",
                short(self.max.0),
                short(self.tolerance.0),
                short(target.0)
            ),
        };
        let excluded = if self.excluded > 0 {
            format!(", {} excluded", self.excluded)
        } else {
            String::new()
        };
        format!(
            "{} {}: {} (n={}{})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            relation,
            self.cases,
            excluded
        )
    }
}

fn short(x: f64) -> String {
    format!("{x:.3e}")
}

/// A numeric table; each row has one entry per column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<F17>>,
}

impl Sweep {
    pub fn new(columns: &[&str]) -> Self {
        Sweep {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row.iter().copied().map(F17).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].0).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|x| if x.0.is_finite() { x.text() } else { "nan".to_string() })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub suite: String,
    pub kernel: Option<String>,
    pub seed: Option<u64>,
    pub parameters: serde_json::Map<String, serde_json::Value>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(rename = "wall_time_s", skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<F17>,
}

impl RunReport {
    pub fn new(suite: &str, kernel: Option<String>, seed: Option<u64>) -> Self {
        RunReport {
            suite: suite.to_string(),
            kernel,
            seed,
            parameters: serde_json::Map::new(),
            checks: Vec::new(),
            passed: true,
            sweep: None,
            wall_time: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    pub fn add(&mut self, check: CheckResult) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_digits() {
        assert_eq!(F17(0.1).text(), "1.0000000000000001e-1");
        assert_eq!(F17(f64::NAN).text(), "null");
        let v: serde_json::Value = serde_json::from_str(&serde_json::to_string(&F17(0.1)).unwrap()).unwrap();
        assert_eq!(v.as_f64(), Some(0.1));
    }

    #[test]
    fn relations() {
        let c = CheckResult::new("a", Relation::AtMost, 1e-12, &[1e-13, 2e-13], 0);
        assert!(c.passed);
        assert_eq!(c.max.0, 2e-13);
        assert!(!CheckResult::new("b", Relation::AtMost, 1e-12, &[1e-11], 0).passed);
        assert!(CheckResult::new("c", Relation::AllExceed, 1e-6, &[1e-5, 1e-3], 0).passed);
        assert!(!CheckResult::new("d", Relation::AllExceed, 1e-6, &[1e-7, 1e-3], 0).passed);
        assert!(CheckResult::new("d", Relation::MaxExceeds, 1e-6, &[1e-7, 1e-3], 0).passed);
        let within = Relation::Within { target: F17(1.0) };
        assert!(CheckResult::new("e", within, 0.1, &[0.95], 0).passed);
        assert!(!CheckResult::new("f", within, 0.1, &[1.2], 0).passed);
        assert!(!CheckResult::new("g", Relation::AtMost, 1.0, &[], 3).passed);
        assert!(!CheckResult::new("h", Relation::AtMost, 1.0, &[f64::INFINITY], 0).passed);
    }

    #[test]
    fn report_json_shape() {
        let mut r = RunReport::new("demo", Some("dft".into()), Some(7));
        r.param("sites", 4);
        r.add(CheckResult::new("x", Relation::AtMost, 1e-12, &[0.0], 0));
        let mut sweep = Sweep::new(&["lambda", "residual"]);
        sweep.push(&[1e-3, 2e-3]);
        r.sweep = Some(sweep);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["suite"], "demo");
        assert_eq!(v["checks"][0]["relation"], "at_most");
        assert_eq!(v["checks"][0]["tolerance"].as_f64(), Some(1e-12));
        assert_eq!(v["sweep"]["rows"][0][1].as_f64(), Some(2e-3));
        assert!(v.get("wall_time_s").is_none());
        assert_eq!(
            r.sweep.unwrap().to_csv(),
            "lambda,residual\n1.0000000000000000e-3,2.0000000000000000e-3\n"
        );
    }
}
