//! The three shipped cases and the derive, complete, verify pipeline.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::derivation::{derive_embedding, DerivedEmbedding, LogBundle};
use crate::faces::{genus_target, triangular_genus};
use crate::report::VerificationReport;
use crate::rotation::RotationSystem;
use crate::search::{search_completion, verify_completion, SearchOutcome, SearchSpec};
use crate::surgery::{apply_script, SurgeryOp, SurgeryScript};
use crate::verify::{missing_pairs, verify_graph_structure};
use crate::vertex::{Vertex, VertexPair};

const K18_LOGS: &str = include_str!("../../../data/k18.logs");
const K20_LOGS: &str = include_str!("../../../data/k20.logs");
const K23_LOGS: &str = include_str!("../../../data/k23.logs");
const K18_SEARCH: &str = include_str!("../../../data/k18.search.toml");
const K20_SEARCH: &str = include_str!("../../../data/k20.search.toml");
const K23_SEARCH: &str = include_str!("../../../data/k23.search.toml");
const K18_SCRIPT: &str = include_str!("../../../data/k18.script");
const K20_SCRIPT: &str = include_str!("../../../data/k20.script");
const K23_SCRIPT: &str = include_str!("../../../data/k23.script");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseName {
    K18,
    K20,
    K23,
}

impl CaseName {
    pub const ALL: [CaseName; 3] = [CaseName::K18, CaseName::K20, CaseName::K23];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::K18 => "k18",
            CaseName::K20 => "k20",
            CaseName::K23 => "k23",
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown case `{0}`; expected k18, k20 or k23")]
pub struct UnknownCase(pub String);

impl FromStr for CaseName {
    type Err = UnknownCase;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "k18" => Ok(CaseName::K18),
            "k20" => Ok(CaseName::K20),
            "k23" => Ok(CaseName::K23),
            _ => Err(UnknownCase(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Expected {
    pub v: usize,
    pub e: usize,
    pub f: usize,
    pub genus: i64,
    pub missing: BTreeSet<VertexPair>,
    pub target_n: usize,
    pub target_genus: i64,
}

impl Expected {
    /// Derived embeddings are triangular, so the derived genus follows from
    /// V and E, and the target genus from n.
    pub fn is_consistent(&self) -> bool {
        let pairs = self.v * (self.v - 1) / 2;
        triangular_genus(self.v as i64, self.e as i64).ok() == Some(self.genus)
            && 2 * self.e == 3 * self.f
            && pairs == self.e + self.missing.len()
            && genus_target(self.target_n as i64).ok() == Some(self.target_genus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub name: CaseName,
    pub bundle: LogBundle,
    pub expected: Expected,
    pub search: SearchSpec,
    /// Operations every completion script must end with.
    pub post_ops: Vec<SurgeryOp>,
    /// The committed completion script, replayed instead of searching.
    pub stored_script: Option<SurgeryScript>,
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("{file}: {message}")]
    Data { file: String, message: String },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn data_err(file: &str, e: impl fmt::Display) -> CaseError {
    CaseError::Data {
        file: file.to_string(),
        message: e.to_string(),
    }
}

fn pairs(it: impl IntoIterator<Item = (Vertex, Vertex)>) -> BTreeSet<VertexPair> {
    it.into_iter().map(|(a, b)| VertexPair::new(a, b)).collect()
}

fn expected(name: CaseName) -> Expected {
    let num = |i: u32| Vertex::Num(i);
    let l = Vertex::letter;
    match name {
        CaseName::K18 => Expected {
            v: 18,
            e: 144,
            f: 96,
            genus: 16,
            missing: pairs((0..9).map(|i| (num(i), num(i + 9)))),
            target_n: 18,
            target_genus: 18,
        },
        CaseName::K20 => {
            let mut m = pairs([(l("x"), l("y0")), (l("x"), l("y1")), (l("y0"), l("y1"))]);
            m.extend(pairs((0..18).map(|i| (num(i), l(if i % 2 == 0 { "y1" } else { "y0" })))));
            Expected {
                v: 21,
                e: 189,
                f: 126,
                genus: 22,
                missing: m,
                target_n: 20,
                target_genus: 23,
            }
        }
        CaseName::K23 => {
            let letters = ["a", "b", "c", "d", "e"];
            let m = pairs(
                letters
                    .iter()
                    .enumerate()
                    .flat_map(|(i, a)| letters[i + 1..].iter().map(move |b| (l(a), l(b)))),
            );
            Expected {
                v: 23,
                e: 243,
                f: 162,
                genus: 30,
                missing: m,
                target_n: 23,
                target_genus: 32,
            }
        }
    }
}

/// Raw text of the shipped data files for a case: logs, search spec, script.
pub fn case_files(name: CaseName) -> [(&'static str, &'static str); 3] {
    match name {
        CaseName::K18 => [("k18.logs", K18_LOGS), ("k18.search.toml", K18_SEARCH), ("k18.script", K18_SCRIPT)],
        CaseName::K20 => [("k20.logs", K20_LOGS), ("k20.search.toml", K20_SEARCH), ("k20.script", K20_SCRIPT)],
        CaseName::K23 => [("k23.logs", K23_LOGS), ("k23.search.toml", K23_SEARCH), ("k23.script", K23_SCRIPT)],
    }
}

pub fn case_spec(name: CaseName) -> Result<CaseSpec, CaseError> {
    let [(lf, logs), (sf, search), (pf, script)] = case_files(name);
    let bundle: LogBundle = logs.parse().map_err(|e| data_err(lf, e))?;
    let search: SearchSpec = search.parse().map_err(|e| data_err(sf, e))?;
    let stored: SurgeryScript = script.parse().map_err(|e| data_err(pf, e))?;
    let post_ops = match name {
        CaseName::K20 => vec![SurgeryOp::Contract(Vertex::letter("y0"), Vertex::letter("y1"))],
        _ => Vec::new(),
    };
    Ok(CaseSpec {
        name,
        bundle,
        expected: expected(name),
        search,
        post_ops,
        stored_script: (!stored.is_empty()).then_some(stored),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Replay,
    Search,
}

#[derive(Debug, Clone)]
pub struct CaseRun {
    pub report: VerificationReport,
    pub derived: Option<DerivedEmbedding>,
    pub script: Option<SurgeryScript>,
    pub final_rotation: Option<RotationSystem>,
    pub written: Vec<PathBuf>,
}

fn check_expected(d: &DerivedEmbedding, x: &Expected) -> VerificationReport {
    let mut r = VerificationReport::new("expected values");
    let s = &d.stats;
    r.check("consistent", x.is_consistent(), "expected values agree with the genus formulas");
    for (name, got, want) in [
        ("V", s.v_count as i64, x.v as i64),
        ("E", s.e_count as i64, x.e as i64),
        ("F", s.f_count as i64, x.f as i64),
        ("genus", s.genus, x.genus),
    ] {
        r.check(name, got == want, format!("{got}, expected {want}"));
    }
    r.section(verify_graph_structure(&d.rotation_system, x.v, &x.missing));
    r
}

fn ends_with(script: &SurgeryScript, ops: &[SurgeryOp]) -> bool {
    let n = script.steps.len();
    n >= ops.len() && script.steps[n - ops.len()..].iter().zip(ops).all(|(s, o)| &s.op == o)
}

/// Runs a case end to end. With `out`, artifacts go to `out/<case>/`.
pub fn run_case(case: &CaseSpec, mode: Completion, out: Option<&Path>) -> Result<CaseRun, CaseError> {
    let mut report = VerificationReport::new(format!("case {}", case.name));
    let mut run = CaseRun {
        report: VerificationReport::new(""),
        derived: None,
        script: None,
        final_rotation: None,
        written: Vec::new(),
    };
    let mut files: Vec<(&str, String)> = Vec::new();
    let finish = |mut run: CaseRun, report: VerificationReport, files: Vec<(&str, String)>| {
        let mut files = files;
        files.push(("report.txt", report.to_string()));
        files.push(("report.json", report.to_json()));
        if let Some(dir) = out {
            run.written = write_artifacts(&dir.join(case.name.as_str()), &files)?;
        }
        run.report = report;
        Ok(run)
    };

    let derived = match derive_embedding(&case.bundle) {
        Ok(d) => d,
        Err(e) => {
            report.fail_with("derive", e.to_string(), vec![]);
            return finish(run, report, files);
        }
    };
    files.push(("derived.rot", derived.rotation_system.to_string()));
    let stage = check_expected(&derived, &case.expected);
    let ok = stage.passed;
    report.section(stage);
    run.derived = Some(derived.clone());
    if !ok {
        return finish(run, report, files);
    }

    let script = match (mode, &case.stored_script) {
        (Completion::Replay, Some(s)) => s.clone(),
        _ => match search_completion(&derived.rotation_system, &case.search) {
            Ok(SearchOutcome::Found(rs)) => rs[0].script.clone(),
            Ok(SearchOutcome::NotFound { bounds, explored }) => {
                report.fail_with("search", format!("not found within {bounds} after {explored} leaves"), vec![]);
                return finish(run, report, files);
            }
            Err(e) => {
                report.fail_with("search", e.to_string(), vec![]);
                return finish(run, report, files);
            }
        },
    };
    let mut script = script;
    if !ends_with(&script, &case.post_ops) {
        for op in &case.post_ops {
            script.push(op.clone(), Some("post"));
        }
    }
    files.push(("script.txt", script.to_string()));
    run.script = Some(script.clone());
    let applied = match apply_script(&derived.rotation_system, &script) {
        Ok(a) => a,
        Err(e) => {
            report.fail_with("apply", e.to_string(), vec![e.op.clone()]);
            return finish(run, report, files);
        }
    };
    let fin = applied.rotation_system().clone();
    report.check(
        "cost restored",
        applied.outstanding_cost().is_empty(),
        format!("{} unrestored", applied.outstanding_cost().len()),
    );
    files.push(("final.rot", fin.to_string()));
    let completion = verify_completion(&fin, case.expected.target_n);
    report.check(
        "missing edges",
        missing_pairs(&fin).is_empty(),
        format!("{} pairs still missing", missing_pairs(&fin).len()),
    );
    report.section(completion);
    run.final_rotation = Some(fin);
    finish(run, report, files)
}

/// Writes `files` under `dir`, leaving files with identical content untouched.
fn write_artifacts(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>, CaseError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CaseError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        if fs::read_to_string(&path).ok().as_deref() != Some(content.as_str()) {
            fs::write(&path, content).map_err(io(&path))?;
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_values_are_consistent() {
        for name in CaseName::ALL {
            assert!(expected(name).is_consistent(), "{name}");
        }
    }

    #[test]
    fn names_round_trip() {
        for name in CaseName::ALL {
            assert_eq!(name.to_string().parse::<CaseName>().unwrap(), name);
        }
        assert!("k19".parse::<CaseName>().is_err());
    }
}
