//! From circuit logs to a rotation system: shifted logs give the numbered
//! rotations, Rule R* manufactures the lettered rotations, and a lettered
//! vertex whose successor permutation has several cycles splits into copies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::current_graph::{check_log_bundle, CircuitLog, LogEntry};
use crate::error::{EmbeddingError, ParseError};
use crate::faces::{stats_of, SurfaceStats};
use crate::report::VerificationReport;
use crate::rotation::RotationSystem;
use crate::verify::{missing_pairs, verify_rule_r_star};
use crate::vertex::{Vertex, VertexPair};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DerivationError {
    #[error("log bundle fails its census: {0}")]
    InvalidBundle(String),
    #[error("letter {letter} sits next to non-numbered entry in the rotation at {at}")]
    LetterNeighbor { letter: String, at: u32 },
    #[error("letter {letter}: conflicting successors of {from}: {first} and {second}")]
    Conflict {
        letter: String,
        from: u32,
        first: u32,
        second: u32,
    },
    #[error("letter {letter}: successor chain leaves the vertices that see it at {at}")]
    OpenChain { letter: String, at: u32 },
    #[error("derived system is invalid: {0}")]
    Embedding(#[from] EmbeddingError),
    #[error("derived embedding is not triangular: {0}")]
    NotTriangular(String),
    #[error("neither vortex handedness yields a triangular embedding")]
    NoConvention,
}

/// `k` circuit logs over `Z_m`, in the printed layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogBundle {
    pub case_name: Option<String>,
    pub m: u32,
    pub k: usize,
    pub letters: Vec<String>,
    pub logs: Vec<CircuitLog>,
}

impl LogBundle {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut case_name = None;
        let mut header: Option<(u32, usize, Vec<String>)> = None;
        let mut logs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| ParseError::new(lineno, m);
            if let Some(rest) = line.strip_prefix("case ") {
                case_name = Some(rest.trim().to_string());
            } else if line.starts_with("logs ") {
                let toks: Vec<&str> = line.split_whitespace().collect();
                let ok = (toks.len() == 4 || toks.len() == 6)
                    && toks[1].starts_with('Z')
                    && toks[2] == "index"
                    && (toks.len() == 4 || toks[4] == "letters");
                if !ok {
                    return Err(err("expected `logs Z<m> index <k> [letters <l1,...>]`".into()));
                }
                let m = toks[1][1..].parse().map_err(|_| err("bad modulus".into()))?;
                let k = toks[3].parse().map_err(|_| err("bad index".into()))?;
                let letters = match toks.get(5) {
                    Some(l) => l.split(',').map(str::to_string).collect(),
                    None => Vec::new(),
                };
                for l in &letters {
                    match l.parse::<Vertex>() {
                        Ok(Vertex::Letter(_)) => {}
                        _ => return Err(err(format!("bad letter `{l}`"))),
                    }
                }
                header = Some((m, k, letters));
            } else if line.starts_with('[') {
                let (id, rest) = line
                    .split_once("].")
                    .ok_or_else(|| err("expected `[i]. e1 e2 ...`".into()))?;
                let circuit_id = id[1..].parse().map_err(|_| err("bad circuit id".into()))?;
                let mut entries = Vec::new();
                for tok in rest.split_whitespace() {
                    entries.push(tok.parse::<LogEntry>().map_err(err)?);
                }
                if circuit_id != logs.len() {
                    return Err(err(format!("expected log [{}]", logs.len())));
                }
                logs.push(CircuitLog { circuit_id, entries });
            } else {
                return Err(err(format!("unrecognized line `{line}`")));
            }
        }
        let (m, k, letters) = header.ok_or_else(|| ParseError::new(0, "missing `logs` header"))?;
        if logs.len() != k {
            return Err(ParseError::new(0, format!("index {k} but {} logs", logs.len())));
        }
        Ok(LogBundle {
            case_name,
            m,
            k,
            letters,
            logs,
        })
    }

    pub fn letter_set(&self) -> BTreeSet<String> {
        self.letters.iter().cloned().collect()
    }

    pub fn check(&self) -> VerificationReport {
        check_log_bundle(&self.logs, self.m, self.k, &self.letter_set())
    }
}

impl fmt::Display for LogBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = &self.case_name {
            writeln!(f, "case {c}")?;
        }
        write!(f, "logs Z{} index {}", self.m, self.k)?;
        if !self.letters.is_empty() {
            write!(f, " letters {}", self.letters.join(","))?;
        }
        writeln!(f)?;
        for log in &self.logs {
            writeln!(f, "{log}")?;
        }
        Ok(())
    }
}

impl FromStr for LogBundle {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LogBundle::parse(s)
    }
}

/// Rotations at the numbered vertices, with letters still as placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberedRotations {
    pub m: u32,
    pub rows: Vec<Vec<LogEntry>>,
}

/// `rotation(γ)` is log `[γ mod k]` with every residue shifted by `γ`.
pub fn derive_numbered_rotations(bundle: &LogBundle) -> NumberedRotations {
    let m = bundle.m;
    let rows = (0..m)
        .map(|g| {
            bundle.logs[g as usize % bundle.k]
                .entries
                .iter()
                .map(|e| match e {
                    LogEntry::Residue(r) => LogEntry::Residue((r + g) % m),
                    LogEntry::Letter(l) => LogEntry::Letter(l.clone()),
                })
                .collect()
        })
        .collect();
    NumberedRotations { m, rows }
}

/// Which neighbor of a lettered entry is mapped to the numbered vertex by the
/// manufactured rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Handedness {
    /// `rotation(i) ⊇ j L l` gives `rotation(L) ⊇ l i j`.
    Direct,
    /// `rotation(i) ⊇ j L l` gives `rotation(L) ⊇ j i l`.
    Mirrored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitCopy {
    pub vertex: Vertex,
    /// Numbered neighbors in rotation order.
    pub cycle: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedEmbedding {
    pub rotation_system: RotationSystem,
    pub letter_map: BTreeMap<String, Vec<SplitCopy>>,
    pub stats: SurfaceStats,
    pub missing_edges: BTreeSet<VertexPair>,
    pub handedness: Handedness,
    /// Handedness choices that produced a triangular embedding.
    pub triangular_under: Vec<Handedness>,
}

impl DerivedEmbedding {
    pub fn copies(&self, letter: &str) -> &[SplitCopy] {
        self.letter_map.get(letter).map(Vec::as_slice).unwrap_or(&[])
    }
}

fn cycles_of(succ: &BTreeMap<u32, u32>) -> Vec<Vec<u32>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in succ.keys() {
        if seen.contains(&start) {
            continue;
        }
        let mut cyc = vec![start];
        seen.insert(start);
        let mut x = succ[&start];
        while x != start {
            seen.insert(x);
            cyc.push(x);
            x = succ[&x];
        }
        out.push(cyc);
    }
    out
}

/// Builds each letter's rotation from Rule R*, splitting letters whose
/// successor permutation has several cycles.
pub fn complete_vortex_rotations(
    partial: &NumberedRotations,
    letters: &[String],
    handedness: Handedness,
) -> Result<DerivedEmbedding, DerivationError> {
    let m = partial.m;
    let mut letter_map = BTreeMap::new();
    let mut copy_of: BTreeMap<(String, u32), Vertex> = BTreeMap::new();
    for letter in letters {
        let mut succ: BTreeMap<u32, u32> = BTreeMap::new();
        let mut sees = BTreeSet::new();
        for (i, row) in partial.rows.iter().enumerate() {
            let i = i as u32;
            let d = row.len();
            for p in 0..d {
                if row[p] != LogEntry::Letter(letter.clone()) {
                    continue;
                }
                let num = |e: &LogEntry| match e {
                    LogEntry::Residue(r) => Ok(*r),
                    LogEntry::Letter(_) => Err(DerivationError::LetterNeighbor {
                        letter: letter.clone(),
                        at: i,
                    }),
                };
                let j = num(&row[(p + d - 1) % d])?;
                let l = num(&row[(p + 1) % d])?;
                let from = match handedness {
                    Handedness::Direct => l,
                    Handedness::Mirrored => j,
                };
                sees.insert(i);
                if let Some(&prev) = succ.get(&from) {
                    return Err(DerivationError::Conflict {
                        letter: letter.clone(),
                        from,
                        first: prev,
                        second: i,
                    });
                }
                succ.insert(from, i);
            }
        }
        for (&from, _) in succ.iter() {
            if !sees.contains(&from) {
                return Err(DerivationError::OpenChain {
                    letter: letter.clone(),
                    at: from,
                });
            }
        }
        let mut cycles = cycles_of(&succ);
        cycles.sort_by_key(|c| *c.iter().min().expect("nonempty cycle"));
        let single = cycles.len() == 1;
        let mut copies = Vec::new();
        for (idx, cyc) in cycles.into_iter().enumerate() {
            let vertex = if single {
                Vertex::Letter(letter.clone())
            } else {
                Vertex::Letter(format!("{letter}{idx}"))
            };
            for &i in &cyc {
                copy_of.insert((letter.clone(), i), vertex.clone());
            }
            copies.push(SplitCopy { vertex, cycle: cyc });
        }
        letter_map.insert(letter.clone(), copies);
    }

    let mut entries: Vec<(Vertex, Vec<Vertex>)> = Vec::new();
    for (i, row) in partial.rows.iter().enumerate() {
        let i = i as u32;
        let rot = row
            .iter()
            .map(|e| match e {
                LogEntry::Residue(r) => Vertex::Num(*r),
                LogEntry::Letter(l) => copy_of[&(l.clone(), i)].clone(),
            })
            .collect();
        entries.push((Vertex::Num(i), rot));
    }
    for letter in letters {
        for c in &letter_map[letter] {
            let c: &SplitCopy = c;
            entries.push((c.vertex.clone(), c.cycle.iter().map(|&x| Vertex::Num(x)).collect()));
        }
    }
    let _ = m;
    let rotation_system = RotationSystem::new(entries)?;
    let r_star = verify_rule_r_star(&rotation_system);
    if !r_star.passed {
        let w = r_star.failures().first().map(|c| c.witness.join("; ")).unwrap_or_default();
        return Err(DerivationError::NotTriangular(w));
    }
    let stats = stats_of(&rotation_system)?;
    let missing_edges = missing_pairs(&rotation_system);
    Ok(DerivedEmbedding {
        rotation_system,
        letter_map,
        stats,
        missing_edges,
        handedness,
        triangular_under: vec![handedness],
    })
}

/// Derives the embedding, trying both vortex handednesses and keeping the
/// one that triangulates. When both work and agree (no letters), the direct
/// form is kept.
pub fn derive_embedding(bundle: &LogBundle) -> Result<DerivedEmbedding, DerivationError> {
    let census = bundle.check();
    if !census.passed {
        let w: Vec<String> = census
            .failures()
            .iter()
            .map(|c| format!("{}: {}", c.name, c.witness.join(", ")))
            .collect();
        return Err(DerivationError::InvalidBundle(w.join("; ")));
    }
    let partial = derive_numbered_rotations(bundle);
    let direct = complete_vortex_rotations(&partial, &bundle.letters, Handedness::Direct);
    let mirrored = complete_vortex_rotations(&partial, &bundle.letters, Handedness::Mirrored);
    let ok: Vec<Handedness> = [(&direct, Handedness::Direct), (&mirrored, Handedness::Mirrored)]
        .iter()
        .filter(|(r, _)| r.is_ok())
        .map(|(_, h)| *h)
        .collect();
    let mut chosen = match (direct, mirrored) {
        (Ok(d), _) => d,
        (Err(_), Ok(m)) => m,
        (Err(_), Err(_)) => return Err(DerivationError::NoConvention),
    };
    chosen.triangular_under = ok;
    Ok(chosen)
}

/// Checks the local pattern used by the handle near an even vertex `j`:
/// `rotation(j)` holds the consecutive pairs `(j+1, j+5)`, `(j-2, j-8)`,
/// `(j-4, j+7)` in that cyclic order, and `rotation(j+7)` holds the
/// consecutive triple `(j+3, j-8, j-6)`.
pub fn check_substructure_star(rot: &RotationSystem, j: u32, m: u32) -> VerificationReport {
    let at = |x: i64| Vertex::Num(x.rem_euclid(m as i64) as u32);
    let j = j as i64;
    let mut report = VerificationReport::new(format!("substructure at j={j}"));
    let find_run = |v: &Vertex, run: &[Vertex]| -> Option<usize> {
        let r = rot.rotation_labels(v)?;
        let d = r.len();
        (0..d).find(|&p| run.iter().enumerate().all(|(t, x)| &r[(p + t) % d] == x))
    };
    let pairs = [
        [at(j + 1), at(j + 5)],
        [at(j - 2), at(j - 8)],
        [at(j - 4), at(j + 7)],
    ];
    let positions: Vec<Option<usize>> = pairs.iter().map(|p| find_run(&at(j), p)).collect();
    for (p, pos) in pairs.iter().zip(&positions) {
        let name = format!("rotation({}) has {} {}", at(j), p[0], p[1]);
        match pos {
            Some(_) => report.check(name, true, ""),
            None => report.fail_with(name, "not consecutive", vec![format!("{}", at(j))]),
        };
    }
    if let [Some(a), Some(b), Some(c)] = positions[..] {
        let ordered = (a < b && b < c) || (b < c && c < a) || (c < a && a < b);
        report.check("pairs in cyclic order", ordered, format!("positions {a} {b} {c}"));
    }
    let triple = [at(j + 3), at(j - 8), at(j - 6)];
    let name = format!(
        "rotation({}) has {} {} {}",
        at(j + 7),
        triple[0],
        triple[1],
        triple[2]
    );
    match find_run(&at(j + 7), &triple) {
        Some(_) => report.check(name, true, ""),
        None => report.fail_with(name, "not consecutive", vec![format!("{}", at(j + 7))]),
    };
    report
}
