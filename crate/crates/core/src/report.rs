//! Verification reports: named checks with pass/fail status, rendered as
//! text or deterministic JSON.

use std::fmt::Write as _;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    /// Check family: `table`, `invariance`, `zcc`, `projection`, `classify`, `spectral`.
    pub category: String,
    pub name: String,
    pub status: Status,
    pub detail: String,
    /// Counterexample for a failure: leftover expression, offending bracket, etc.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl Check {
    pub fn new(category: &str, name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Check {
        Check { category: category.into(), name: name.into(), status: Status::from_bool(ok), detail: detail.into(), payload: None }
    }

    pub fn with_payload(mut self, payload: impl Into<String>) -> Check {
        self.payload = Some(payload.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    status: Status,
    passed: usize,
    failed: usize,
    #[serde(flatten)]
    body: &'a VerificationReport,
}

impl VerificationReport {
    pub fn new(scenario: &str) -> Self {
        VerificationReport { scenario: scenario.to_string(), ..Default::default() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.checks.extend(checks);
    }

    /// Vacuously true for an empty report.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {}", self.scenario);
        for c in &self.checks {
            let status = if c.passed() { "PASS" } else { "FAIL" };
            let _ = write!(out, "[{}] {}", c.category, c.name);
            if !c.detail.is_empty() {
                let _ = write!(out, ": {}", c.detail);
            }
            let _ = writeln!(out, " ... {status}");
            if let Some(p) = &c.payload {
                if !c.passed() {
                    let _ = writeln!(out, "    {p}");
                }
            }
        }
        if let Some(v) = &self.verdict {
            let _ = writeln!(out, "verdict: {v}");
        }
        for w in &self.witnesses {
            let _ = writeln!(out, "witness: {w}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "overall: {} ({} checks, {} failed)",
            if failed == 0 { "PASS" } else { "FAIL" },
            self.checks.len(),
            failed
        );
        out
    }

    pub fn to_json(&self) -> String {
        let failed = self.failures().count();
        let r = JsonReport {
            status: Status::from_bool(failed == 0),
            passed: self.checks.len() - failed,
            failed,
            body: self,
        };
        serde_json::to_string_pretty(&r).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_passes() {
        let r = VerificationReport::new("x");
        assert!(r.passed());
        assert!(r.to_text().contains("overall: PASS (0 checks"));
    }

    #[test]
    fn json_marks_failures() {
        let mut r = VerificationReport::new("x");
        r.push(Check::new("zcc", "(1,3)", false, "certificate").with_payload("Q*f"));
        let j = r.to_json();
        assert!(j.contains("\"status\": \"fail\""));
        assert!(j.contains("\"payload\": \"Q*f\""));
        assert_eq!(j, r.clone().to_json());
    }
}
