//! Named structural checks with measured residuals, rendered as a stable
//! text table and as JSON with 17-significant-digit floats.

use crate::json::fmt_f64;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
    pub tolerance: f64,
    /// The mathematical identity or property being measured.
    pub description: String,
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn new() -> Self {
        CheckReport { checks: Vec::new() }
    }

    /// Record a residual-vs-tolerance check; passes iff
    /// `residual <= tolerance`.
    pub fn add(&mut self, name: &str, residual: f64, tolerance: f64, description: &str) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            pass: residual.is_finite() && residual <= tolerance,
            residual,
            tolerance,
            description: description.to_string(),
        });
    }

    /// Record a lower-bound check; passes iff `value >= bound` (used for
    /// smallest-eigenvalue style measurements). The stored residual is the
    /// measured value, the stored tolerance is the bound.
    pub fn add_lower_bound(&mut self, name: &str, value: f64, bound: f64, description: &str) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            pass: value.is_finite() && value >= bound,
            residual: value,
            tolerance: bound,
            description: description.to_string(),
        });
    }

    /// Record a boolean condition; residual 0/1 encodes pass/fail.
    pub fn add_bool(&mut self, name: &str, ok: bool, description: &str) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            pass: ok,
            residual: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            description: description.to_string(),
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Fixed-layout text table, one row per check, deterministic order.
    pub fn render(&self) -> String {
        let name_w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(5);
        let mut out = String::new();
        out.push_str(&format!(
            "{:<name_w$}  {:<6}  {:>13}  {:>13}  description\n",
            "check", "status", "measured", "tolerance"
        ));
        out.push_str(&format!("{}\n", "-".repeat(name_w + 50)));
        for c in &self.checks {
            out.push_str(&format!(
                "{:<name_w$}  {:<6}  {:>13.6e}  {:>13.6e}  {}\n",
                c.name,
                if c.pass { "pass" } else { "FAIL" },
                c.residual,
                c.tolerance,
                c.description
            ));
        }
        out
    }

    /// JSON rendering with full-precision floats.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\"all_pass\":");
        out.push_str(if self.all_pass() { "true" } else { "false" });
        out.push_str(",\"checks\":[");
        for (i, c) in self.checks.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"name\":{},\"pass\":{},\"measured\":{},\"tolerance\":{},\"description\":{}}}",
                serde_json::to_string(&c.name).unwrap(),
                c.pass,
                fmt_f64(c.residual),
                fmt_f64(c.tolerance),
                serde_json::to_string(&c.description).unwrap()
            ));
        }
        out.push_str("]}");
        out
    }
}
