use std::fmt;

use serde::Serialize;

use crate::faces::SurfaceStats;

/// A single named check with optional witness values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<String>,
}

/// Structured pass/fail evidence shared by the library, CLI and tests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub subject: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<SurfaceStats>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sections: Vec<VerificationReport>,
}

impl VerificationReport {
    pub fn new(subject: impl Into<String>) -> Self {
        VerificationReport {
            subject: subject.into(),
            passed: true,
            stats: None,
            checks: Vec::new(),
            sections: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> &mut Self {
        self.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
            witness: Vec::new(),
        })
    }

    pub fn fail_with(
        &mut self,
        name: impl Into<String>,
        detail: impl Into<String>,
        witness: Vec<String>,
    ) -> &mut Self {
        self.push(Check {
            name: name.into(),
            passed: false,
            detail: detail.into(),
            witness,
        })
    }

    pub fn push(&mut self, check: Check) -> &mut Self {
        self.passed &= check.passed;
        self.checks.push(check);
        self
    }

    pub fn section(&mut self, report: VerificationReport) -> &mut Self {
        self.passed &= report.passed;
        self.sections.push(report);
        self
    }

    pub fn with_stats(mut self, stats: SurfaceStats) -> Self {
        self.stats = Some(stats);
        self
    }

    pub fn failures(&self) -> Vec<&Check> {
        let mut out: Vec<&Check> = self.checks.iter().filter(|c| !c.passed).collect();
        for s in &self.sections {
            out.extend(s.failures());
        }
        out
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .or_else(|| self.sections.iter().find_map(|s| s.find(name)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        let mark = if self.passed { "PASS" } else { "FAIL" };
        writeln!(f, "{pad}[{mark}] {}", self.subject)?;
        if let Some(s) = &self.stats {
            writeln!(
                f,
                "{pad}  V={} E={} F={} chi={} genus={}",
                s.v_count, s.e_count, s.f_count, s.euler_characteristic, s.genus
            )?;
        }
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            write!(f, "{pad}  {mark} {}", c.name)?;
            if !c.detail.is_empty() {
                write!(f, ": {}", c.detail)?;
            }
            writeln!(f)?;
            if !c.witness.is_empty() {
                writeln!(f, "{pad}       witness: {}", c.witness.join(" "))?;
            }
        }
        for s in &self.sections {
            s.write_indented(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_propagates_from_sections() {
        let mut inner = VerificationReport::new("inner");
        inner.fail_with("x", "bad", vec!["(1,2)".into()]);
        let mut outer = VerificationReport::new("outer");
        outer.check("y", true, "");
        assert!(outer.passed);
        outer.section(inner);
        assert!(!outer.passed);
        assert_eq!(outer.failures().len(), 1);
        assert_eq!(outer.find("x").unwrap().witness, vec!["(1,2)"]);
        let json: serde_json::Value = serde_json::from_str(&outer.to_json()).unwrap();
        assert_eq!(json["passed"], false);
        assert!(outer.to_string().contains("witness: (1,2)"));
    }
}
