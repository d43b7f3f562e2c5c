//! The JSON run report shared by every subcommand.

use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: String,
    pub passed: bool,
    /// Inputs and observations needed to replay a failure.
    pub witness: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: Vec<String>,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub details: Map<String, Value>,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn new(command: Vec<String>, seed: u64) -> Self {
        RunReport {
            command,
            seed,
            checks: Vec::new(),
            details: Map::new(),
            wall_time_ms: 0,
        }
    }

    pub fn check(&mut self, id: impl Into<String>, passed: bool, witness: Value) {
        self.checks.push(CheckOutcome {
            id: id.into(),
            passed,
            witness,
        });
    }

    pub fn detail(&mut self, key: impl Into<String>, value: Value) {
        self.details.insert(key.into(), value);
    }

    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.failed() > 0)
    }

    pub fn to_json(&self) -> Value {
        let failures: Vec<Value> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| json!({"check": c.id, "witness": c.witness}))
            .collect();
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({"id": c.id, "passed": c.passed}))
            .collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "seed": self.seed,
            "checks_run": self.checks.len(),
            "checks_passed": self.checks.len() - self.failed(),
            "checks_failed": self.failed(),
            "checks": checks,
            "failures": failures,
            "details": Value::Object(self.details.clone()),
            "wall_time_ms": self.wall_time_ms,
        })
    }

    /// Human summary for standard error.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{}: {}/{} checks passed ({} ms)\n",
            self.command.join(" "),
            self.checks.len() - self.failed(),
            self.checks.len(),
            self.wall_time_ms
        );
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            out.push_str(&format!("  {mark} {}\n", c.id));
            if !c.passed {
                out.push_str(&format!("       {}\n", c.witness));
            }
        }
        out
    }

    /// Records an outcome; its witness also lands in `details` under the id.
    pub fn push(&mut self, outcome: CheckOutcome) {
        self.details
            .insert(outcome.id.clone(), outcome.witness.clone());
        self.checks.push(outcome);
    }
}
