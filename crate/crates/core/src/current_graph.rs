//! Index-k current graphs over cyclic groups, their circuits and logs, and
//! checks of the construction principles (C1)-(C6).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::error::ParseError;
use crate::report::VerificationReport;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurrentGraphError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("not an index-{expected} embedding: traced {actual} circuits")]
    CircuitCount { expected: usize, actual: usize },
    #[error("circuit start {arc} is not traversed in the stated direction by any circuit")]
    BadStart { arc: String },
    #[error("circuit id {0} assigned twice")]
    DuplicateCircuitId(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Tail,
    Head,
}

/// One end of an arc as it appears in a node's rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArcEnd {
    pub arc: usize,
    pub end: End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub hollow: bool,
    pub vortex: Option<String>,
    pub rotation: Vec<ArcEnd>,
}

/// An arc; a `None` endpoint is an omitted degree-1 vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub id: String,
    pub tail: Option<usize>,
    pub head: Option<usize>,
    pub current: u32,
    pub endmark: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitStart {
    pub circuit: usize,
    pub arc: usize,
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrentGraph {
    pub modulus: u32,
    pub index: usize,
    pub nodes: Vec<Node>,
    pub arcs: Vec<Arc>,
    pub starts: Vec<CircuitStart>,
}

/// Traversal of one arc in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Step {
    pub arc: usize,
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub id: usize,
    pub walk: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LogEntry {
    Residue(u32),
    Letter(String),
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogEntry::Residue(r) => write!(f, "{r}"),
            LogEntry::Letter(l) => f.write_str(l),
        }
    }
}

impl FromStr for LogEntry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.chars().all(|c| c.is_ascii_digit()) && !s.is_empty() {
            s.parse().map(LogEntry::Residue).map_err(|e| format!("{s}: {e}"))
        } else if s.chars().next().is_some_and(|c| c.is_ascii_lowercase())
            && s.chars().all(|c| c.is_ascii_alphanumeric())
        {
            Ok(LogEntry::Letter(s.to_string()))
        } else {
            Err(format!("invalid log entry `{s}`"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitLog {
    pub circuit_id: usize,
    pub entries: Vec<LogEntry>,
}

impl CircuitLog {
    /// Equal up to cyclic rotation (reflection is not allowed).
    pub fn cyclically_equal(&self, other: &CircuitLog) -> bool {
        let (a, b) = (&self.entries, &other.entries);
        if a.len() != b.len() {
            return false;
        }
        if a.is_empty() {
            return true;
        }
        (0..a.len()).any(|s| (0..a.len()).all(|i| a[(i + s) % a.len()] == b[i]))
    }
}

impl fmt::Display for CircuitLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}].", self.circuit_id)?;
        for e in &self.entries {
            write!(f, " {e}")?;
        }
        Ok(())
    }
}

fn order_of(c: u32, m: u32) -> u32 {
    fn gcd(a: u32, b: u32) -> u32 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    m / gcd(c % m, m)
}

impl CurrentGraph {
    fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    fn arc_index(&self, id: &str) -> Option<usize> {
        self.arcs.iter().position(|a| a.id == id)
    }

    fn end_node(&self, arc: usize, end: End) -> Option<usize> {
        match end {
            End::Tail => self.arcs[arc].tail,
            End::Head => self.arcs[arc].head,
        }
    }

    fn effective_rotation(&self, node: usize) -> Vec<ArcEnd> {
        let n = &self.nodes[node];
        if n.hollow {
            n.rotation.iter().rev().copied().collect()
        } else {
            n.rotation.clone()
        }
    }

    /// Step following `s` along its face boundary.
    fn next_step(&self, s: Step, rotations: &[Vec<ArcEnd>]) -> Step {
        let arrive = if s.forward { End::Head } else { End::Tail };
        match self.end_node(s.arc, arrive) {
            None => Step {
                arc: s.arc,
                forward: !s.forward,
            },
            Some(w) => {
                let rot = &rotations[w];
                let here = ArcEnd {
                    arc: s.arc,
                    end: arrive,
                };
                let p = rot.iter().position(|&e| e == here).expect("validated rotation");
                let e = rot[(p + 1) % rot.len()];
                Step {
                    arc: e.arc,
                    forward: e.end == End::Tail,
                }
            }
        }
    }

    fn validate(&self) -> Result<(), ParseError> {
        if self.modulus < 2 {
            return Err(ParseError::new(1, "group modulus must be at least 2"));
        }
        if self.index < 1 {
            return Err(ParseError::new(1, "index must be at least 1"));
        }
        let mut seen: HashMap<ArcEnd, usize> = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            for &e in &n.rotation {
                if self.end_node(e.arc, e.end) != Some(i) {
                    return Err(ParseError::new(
                        0,
                        format!("node {} lists an end of arc {} it is not incident with", n.id, self.arcs[e.arc].id),
                    ));
                }
                if seen.insert(e, i).is_some() {
                    return Err(ParseError::new(
                        0,
                        format!("arc end of {} listed twice", self.arcs[e.arc].id),
                    ));
                }
            }
        }
        for (a, arc) in self.arcs.iter().enumerate() {
            if arc.current % self.modulus == 0 {
                return Err(ParseError::new(0, format!("arc {} carries the zero current", arc.id)));
            }
            for end in [End::Tail, End::Head] {
                if self.end_node(a, end).is_some() && !seen.contains_key(&ArcEnd { arc: a, end }) {
                    return Err(ParseError::new(
                        0,
                        format!("an end of arc {} is missing from its node's rotation", arc.id),
                    ));
                }
            }
            if arc.tail.is_none() && arc.head.is_none() {
                return Err(ParseError::new(0, format!("arc {} has no endpoints", arc.id)));
            }
            if (arc.tail.is_none() || arc.head.is_none()) != arc.endmark {
                return Err(ParseError::new(
                    0,
                    format!("arc {} must be endmarked exactly when one endpoint is omitted", arc.id),
                ));
            }
        }
        Ok(())
    }

    /// Parses the text format:
    /// `group Z<m> index <k>`, `node <id> [solid|hollow] [vortex <l>] rotation <a+|a->,...`,
    /// `arc <id> <tail|*> <head|*> current <c> [endmark]`, `circuit <i> starts <arc> <fwd|rev>`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut header: Option<(u32, usize)> = None;
        let mut raw_nodes: Vec<(usize, String, bool, Option<String>, Vec<String>)> = Vec::new();
        let mut raw_arcs: Vec<(usize, String, String, String, u32, bool)> = Vec::new();
        let mut raw_starts: Vec<(usize, usize, String, bool)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: &str| ParseError::new(lineno, msg.to_string());
            match toks[0] {
                "group" => {
                    if toks.len() != 4 || toks[2] != "index" || !toks[1].starts_with('Z') {
                        return Err(err("expected `group Z<m> index <k>`"));
                    }
                    let m = toks[1][1..].parse().map_err(|_| err("bad modulus"))?;
                    let k = toks[3].parse().map_err(|_| err("bad index"))?;
                    header = Some((m, k));
                }
                "node" => {
                    let id = toks.get(1).ok_or_else(|| err("node needs an id"))?.to_string();
                    let mut i = 2;
                    let mut hollow = false;
                    if let Some(&t) = toks.get(i) {
                        if t == "solid" || t == "hollow" {
                            hollow = t == "hollow";
                            i += 1;
                        }
                    }
                    let mut vortex = None;
                    if toks.get(i) == Some(&"vortex") {
                        vortex = Some(toks.get(i + 1).ok_or_else(|| err("vortex needs a letter"))?.to_string());
                        i += 2;
                    }
                    if toks.get(i) != Some(&"rotation") || toks.len() != i + 2 {
                        return Err(err("expected `rotation <arcref,...>`"));
                    }
                    let ends = toks[i + 1].split(',').map(str::to_string).collect();
                    raw_nodes.push((lineno, id, hollow, vortex, ends));
                }
                "arc" => {
                    if toks.len() < 6 || toks[4] != "current" || toks.len() > 7 {
                        return Err(err("expected `arc <id> <tail> <head> current <c> [endmark]`"));
                    }
                    let c = toks[5].parse().map_err(|_| err("bad current"))?;
                    let endmark = match toks.get(6) {
                        None => false,
                        Some(&"endmark") => true,
                        Some(_) => return Err(err("unexpected token after current")),
                    };
                    raw_arcs.push((lineno, toks[1].into(), toks[2].into(), toks[3].into(), c, endmark));
                }
                "circuit" => {
                    if toks.len() != 5 || toks[2] != "starts" {
                        return Err(err("expected `circuit <id> starts <arc> <fwd|rev>`"));
                    }
                    let id = toks[1].parse().map_err(|_| err("bad circuit id"))?;
                    let forward = match toks[4] {
                        "fwd" => true,
                        "rev" => false,
                        _ => return Err(err("direction must be fwd or rev")),
                    };
                    raw_starts.push((lineno, id, toks[3].to_string(), forward));
                }
                other => return Err(err(&format!("unknown directive `{other}`"))),
            }
        }
        let (modulus, index) = header.ok_or_else(|| ParseError::new(0, "missing `group` header"))?;
        let mut cg = CurrentGraph {
            modulus,
            index,
            nodes: raw_nodes
                .iter()
                .map(|(_, id, hollow, vortex, _)| Node {
                    id: id.clone(),
                    hollow: *hollow,
                    vortex: vortex.clone(),
                    rotation: Vec::new(),
                })
                .collect(),
            arcs: Vec::new(),
            starts: Vec::new(),
        };
        for (lineno, id, tail, head, c, endmark) in &raw_arcs {
            if cg.arc_index(id).is_some() {
                return Err(ParseError::new(*lineno, format!("arc {id} declared twice")));
            }
            let resolve = |t: &str| -> Result<Option<usize>, ParseError> {
                if t == "*" {
                    Ok(None)
                } else {
                    cg.node_index(t)
                        .map(Some)
                        .ok_or_else(|| ParseError::new(*lineno, format!("unknown node {t}")))
                }
            };
            let arc = Arc {
                id: id.clone(),
                tail: resolve(tail)?,
                head: resolve(head)?,
                current: *c,
                endmark: *endmark,
            };
            cg.arcs.push(arc);
        }
        for (ni, (lineno, _, _, _, ends)) in raw_nodes.iter().enumerate() {
            for e in ends {
                let (name, end) = if let Some(a) = e.strip_suffix('+') {
                    (a, End::Tail)
                } else if let Some(a) = e.strip_suffix('-') {
                    (a, End::Head)
                } else {
                    return Err(ParseError::new(*lineno, format!("arc end `{e}` needs a + or - suffix")));
                };
                let arc = cg
                    .arc_index(name)
                    .ok_or_else(|| ParseError::new(*lineno, format!("unknown arc {name}")))?;
                cg.nodes[ni].rotation.push(ArcEnd { arc, end });
            }
        }
        for (lineno, circuit, arc, forward) in raw_starts {
            let arc = cg
                .arc_index(&arc)
                .ok_or_else(|| ParseError::new(lineno, format!("unknown arc {arc}")))?;
            cg.starts.push(CircuitStart { circuit, arc, forward });
        }
        cg.validate()?;
        Ok(cg)
    }

    /// Face boundary walks of the embedded digraph, with ids taken from the
    /// `circuit ... starts` lines when present and trace order otherwise.
    pub fn trace_circuits(&self) -> Result<Vec<Circuit>, CurrentGraphError> {
        let rotations: Vec<Vec<ArcEnd>> = (0..self.nodes.len()).map(|i| self.effective_rotation(i)).collect();
        let mut used: HashMap<Step, usize> = HashMap::new();
        let mut walks: Vec<Vec<Step>> = Vec::new();
        for a in 0..self.arcs.len() {
            for forward in [true, false] {
                let s0 = Step { arc: a, forward };
                if used.contains_key(&s0) {
                    continue;
                }
                let mut walk = Vec::new();
                let mut s = s0;
                while !used.contains_key(&s) {
                    used.insert(s, walks.len());
                    walk.push(s);
                    s = self.next_step(s, &rotations);
                }
                walks.push(walk);
            }
        }
        if walks.len() != self.index {
            return Err(CurrentGraphError::CircuitCount {
                expected: self.index,
                actual: walks.len(),
            });
        }
        let mut ids: Vec<Option<usize>> = vec![None; walks.len()];
        let mut taken = BTreeSet::new();
        for st in &self.starts {
            let s = Step {
                arc: st.arc,
                forward: st.forward,
            };
            let w = used[&s];
            if !taken.insert(st.circuit) || st.circuit >= self.index {
                return Err(CurrentGraphError::DuplicateCircuitId(st.circuit));
            }
            let p = walks[w].iter().position(|&x| x == s).ok_or_else(|| CurrentGraphError::BadStart {
                arc: self.arcs[st.arc].id.clone(),
            })?;
            walks[w].rotate_left(p);
            ids[w] = Some(st.circuit);
        }
        let mut free = (0..self.index).filter(|i| !taken.contains(i));
        let mut out: Vec<Circuit> = walks
            .into_iter()
            .zip(ids)
            .map(|(walk, id)| Circuit {
                id: id.unwrap_or_else(|| free.next().expect("enough ids")),
                walk,
            })
            .collect();
        out.sort_by_key(|c| c.id);
        Ok(out)
    }

    fn arrival(&self, s: Step) -> Option<usize> {
        self.end_node(s.arc, if s.forward { End::Head } else { End::Tail })
    }

    /// The log of a circuit: signed currents, vortex letters at vortex nodes,
    /// and order-2 currents at omitted ends condensed to one entry.
    pub fn circuit_log(&self, c: &Circuit) -> CircuitLog {
        let m = self.modulus;
        let mut entries = Vec::new();
        let n = c.walk.len();
        let mut i = 0;
        while i < n {
            let s = c.walk[i];
            let a = &self.arcs[s.arc];
            let val = if s.forward { a.current % m } else { (m - a.current % m) % m };
            entries.push(LogEntry::Residue(val));
            match self.arrival(s) {
                None => {
                    if order_of(a.current, m) == 2 && i + 1 < n {
                        // the return step carries the same element
                        i += 1;
                    } else if order_of(a.current, m) == 2 && i + 1 == n {
                        entries.remove(0);
                    }
                }
                Some(w) => {
                    if let Some(l) = &self.nodes[w].vortex {
                        entries.push(LogEntry::Letter(l.clone()));
                    }
                }
            }
            i += 1;
        }
        CircuitLog {
            circuit_id: c.id,
            entries,
        }
    }

    pub fn logs(&self) -> Result<Vec<CircuitLog>, CurrentGraphError> {
        Ok(self.trace_circuits()?.iter().map(|c| self.circuit_log(c)).collect())
    }

    /// One report entry per principle, with witnesses for failures.
    pub fn check_principles(&self) -> VerificationReport {
        let mut report = VerificationReport::new("construction principles");
        let m = self.modulus;
        let k = self.index;

        let mut c1 = Vec::new();
        for n in &self.nodes {
            let d = n.rotation.len();
            let ok = if n.vortex.is_some() { d == k } else { d == 3 || d == 1 };
            if !ok {
                c1.push(format!("{}:degree {}", n.id, d));
            }
        }
        push(&mut report, "C1 degrees", c1);

        let mut c2 = Vec::new();
        for n in &self.nodes {
            if n.vortex.is_some() || n.rotation.len() != 3 {
                continue;
            }
            let sum = n.rotation.iter().fold(0u64, |acc, e| {
                let c = self.arcs[e.arc].current as u64 % m as u64;
                match e.end {
                    End::Head => acc + c,
                    End::Tail => acc + (m as u64 - c),
                }
            }) % m as u64;
            if sum != 0 {
                c2.push(format!("{}:sum {}", n.id, sum));
            }
        }
        push(&mut report, "C2 KCL", c2);

        let mut c3 = Vec::new();
        for a in &self.arcs {
            let ends_deg1 = a.endmark
                || [a.tail, a.head]
                    .iter()
                    .flatten()
                    .any(|&w| self.nodes[w].rotation.len() == 1 && self.nodes[w].vortex.is_none());
            if ends_deg1 {
                let o = order_of(a.current, m);
                if o != 2 && o != 3 {
                    c3.push(format!("{}:order {}", a.id, o));
                }
            }
        }
        push(&mut report, "C3 end currents", c3);

        let circuits = match self.trace_circuits() {
            Ok(c) => c,
            Err(e) => {
                report.fail_with("circuits", e.to_string(), vec![]);
                return report;
            }
        };
        let mut visits: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for c in &circuits {
            for s in &c.walk {
                if let Some(w) = self.arrival(*s) {
                    if let Some(l) = &self.nodes[w].vortex {
                        visits.entry(l.clone()).or_default().insert(c.id);
                    }
                }
            }
        }
        let mut c4 = Vec::new();
        for n in &self.nodes {
            if let Some(l) = &n.vortex {
                let seen = visits.get(l).cloned().unwrap_or_default();
                for cid in 0..k {
                    if !seen.contains(&cid) {
                        c4.push(format!("{l}:[{cid}]"));
                    }
                }
            }
        }
        push(&mut report, "C4 vortex incidence", c4);

        let logs: Vec<CircuitLog> = circuits.iter().map(|c| self.circuit_log(c)).collect();
        let letters: BTreeSet<String> = self.nodes.iter().filter_map(|n| n.vortex.clone()).collect();
        let bundle = check_log_bundle(&logs, m, k, &letters);
        report.check(
            "C5 log census",
            bundle.passed,
            if bundle.passed { String::new() } else { "see log census".into() },
        );
        report.section(bundle);

        report.push(self.check_c6(&circuits));
        report
    }

    fn check_c6(&self, circuits: &[Circuit]) -> crate::report::Check {
        let k = self.index as u32;
        let mut side: HashMap<Step, usize> = HashMap::new();
        for (ci, c) in circuits.iter().enumerate() {
            for &s in &c.walk {
                side.insert(s, ci);
            }
        }
        let violations = |ids: &[u32]| -> Vec<String> {
            let mut out = Vec::new();
            for (a, arc) in self.arcs.iter().enumerate() {
                let fa = ids[side[&Step { arc: a, forward: true }]];
                let fb = ids[side[&Step { arc: a, forward: false }]];
                if (arc.current % k) != (fb + k - fa % k) % k {
                    out.push(format!("{}:[{}]->[{}]", arc.id, fa, fb));
                }
            }
            out
        };
        let fixed: Vec<u32> = circuits.iter().map(|c| c.id as u32).collect();
        let direct = violations(&fixed);
        let assigned = self.starts.len() == self.index;
        if direct.is_empty() {
            return crate::report::Check {
                name: "C6 arc congruence".into(),
                passed: true,
                detail: String::new(),
                witness: vec![],
            };
        }
        if !assigned {
            for perm in permutations(self.index) {
                let ids: Vec<u32> = perm.iter().map(|&x| x as u32).collect();
                if violations(&ids).is_empty() {
                    let shown: Vec<String> = ids.iter().map(|i| format!("[{i}]")).collect();
                    return crate::report::Check {
                        name: "C6 arc congruence".into(),
                        passed: true,
                        detail: format!("satisfied with circuit ids {}", shown.join(" ")),
                        witness: vec![],
                    };
                }
            }
        }
        crate::report::Check {
            name: "C6 arc congruence".into(),
            passed: false,
            detail: format!("{} arcs violate the congruence", direct.len()),
            witness: direct,
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn push(report: &mut VerificationReport, name: &str, witness: Vec<String>) {
    if witness.is_empty() {
        report.check(name, true, "");
    } else {
        report.fail_with(name, format!("{} violations", witness.len()), witness);
    }
}

impl fmt::Display for CurrentGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "group Z{} index {}", self.modulus, self.index)?;
        for n in &self.nodes {
            write!(f, "node {} {}", n.id, if n.hollow { "hollow" } else { "solid" })?;
            if let Some(l) = &n.vortex {
                write!(f, " vortex {l}")?;
            }
            let ends: Vec<String> = n
                .rotation
                .iter()
                .map(|e| {
                    let s = if e.end == End::Tail { '+' } else { '-' };
                    format!("{}{}", self.arcs[e.arc].id, s)
                })
                .collect();
            writeln!(f, " rotation {}", ends.join(","))?;
        }
        let name = |x: Option<usize>| x.map_or("*".to_string(), |i| self.nodes[i].id.clone());
        for a in &self.arcs {
            write!(f, "arc {} {} {} current {}", a.id, name(a.tail), name(a.head), a.current)?;
            if a.endmark {
                write!(f, " endmark")?;
            }
            writeln!(f)?;
        }
        for s in &self.starts {
            writeln!(
                f,
                "circuit {} starts {} {}",
                s.circuit,
                self.arcs[s.arc].id,
                if s.forward { "fwd" } else { "rev" }
            )?;
        }
        Ok(())
    }
}

impl FromStr for CurrentGraph {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CurrentGraph::parse(s)
    }
}

/// Log-level consequences of (C4) and (C5): every letter once per log, every
/// nonzero residue once per log, and the involution `m/2` either once in
/// every log or absent from every log.
pub fn check_log_bundle(
    logs: &[CircuitLog],
    m: u32,
    k: usize,
    letters: &BTreeSet<String>,
) -> VerificationReport {
    let mut report = VerificationReport::new("log census");
    report.check(
        "circuit count",
        logs.len() == k,
        format!("{} logs, index {k}", logs.len()),
    );
    let half = (m % 2 == 0).then_some(m / 2);
    let mut half_present = Vec::new();
    for log in logs {
        let mut counts: BTreeMap<&LogEntry, usize> = BTreeMap::new();
        for e in &log.entries {
            *counts.entry(e).or_insert(0) += 1;
        }
        let mut witness = Vec::new();
        for e in &log.entries {
            match e {
                LogEntry::Residue(r) if *r == 0 || *r >= m => {
                    witness.push(format!("invalid {r}"));
                }
                LogEntry::Letter(l) if !letters.contains(l) => {
                    witness.push(format!("unknown {l}"));
                }
                _ => {}
            }
        }
        for r in 1..m {
            let c = counts.get(&LogEntry::Residue(r)).copied().unwrap_or(0);
            if Some(r) == half {
                if c > 1 {
                    witness.push(format!("repeated {r} x{c}"));
                }
                half_present.push((log.circuit_id, c == 1));
                continue;
            }
            match c {
                1 => {}
                0 => witness.push(format!("missing {r}")),
                _ => witness.push(format!("repeated {r} x{c}")),
            }
        }
        for l in letters {
            match counts.get(&LogEntry::Letter(l.clone())).copied().unwrap_or(0) {
                1 => {}
                0 => witness.push(format!("missing {l}")),
                c => witness.push(format!("repeated {l} x{c}")),
            }
        }
        let name = format!("log [{}]", log.circuit_id);
        if witness.is_empty() {
            report.check(name, true, format!("{} entries", log.entries.len()));
        } else {
            report.fail_with(name, format!("{} problems", witness.len()), witness);
        }
    }
    if let Some(h) = half {
        let present = half_present.iter().filter(|(_, p)| *p).count();
        if present == 0 || present == half_present.len() {
            let state = if present == 0 { "absent from every log" } else { "once in every log" };
            report.check(format!("involution {h}"), true, state);
        } else {
            let witness = half_present
                .iter()
                .map(|(id, p)| format!("[{id}]:{}", if *p { "present" } else { "absent" }))
                .collect();
            report.fail_with(format!("involution {h}"), "present in some logs only", witness);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOOP: &str = "group Z5 index 2\nnode v solid rotation a+,a-\narc a v v current 1\n";

    #[test]
    fn one_loop_on_sphere_has_two_circuits() {
        let cg: CurrentGraph = LOOP.parse().unwrap();
        let cs = cg.trace_circuits().unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cg.to_string(), LOOP);
    }

    #[test]
    fn wrong_index_is_reported() {
        let text = LOOP.replace("index 2", "index 1");
        let cg: CurrentGraph = text.parse().unwrap();
        assert_eq!(
            cg.trace_circuits(),
            Err(CurrentGraphError::CircuitCount { expected: 1, actual: 2 })
        );
    }

    #[test]
    fn reverse_traversal_negates() {
        let cg: CurrentGraph = "group Z18 index 2\nnode v solid rotation a+,a-\narc a v v current 5\n"
            .parse()
            .unwrap();
        let logs = cg.logs().unwrap();
        let all: BTreeSet<String> = logs.iter().flat_map(|l| l.entries.iter().map(|e| e.to_string())).collect();
        assert!(all.contains("13") && all.contains("5"));
    }

    #[test]
    fn order_two_end_is_condensed() {
        let text = "group Z18 index 2\nnode v solid rotation a+,a-,e+\narc a v v current 1\narc e v * current 9 endmark\n";
        let cg: CurrentGraph = text.parse().unwrap();
        let logs = cg.logs().unwrap();
        assert_eq!(logs.len(), 2);
        let nines = logs.iter().flat_map(|l| &l.entries).filter(|e| **e == LogEntry::Residue(9)).count();
        assert_eq!(nines, 1);
        assert_eq!(cg.to_string(), text);
    }

    #[test]
    fn order_three_end_is_recorded_twice() {
        let text = "group Z9 index 2\nnode v solid rotation a+,a-,e+\narc a v v current 1\narc e v * current 3 endmark\n";
        let cg: CurrentGraph = text.parse().unwrap();
        let logs = cg.logs().unwrap();
        let log = logs.iter().find(|l| l.entries.contains(&LogEntry::Residue(3))).unwrap();
        assert!(log.entries.contains(&LogEntry::Residue(6)));
    }

    #[test]
    fn kcl_at_node_with_three_incoming() {
        let text = "group Z18 index 1\n\
            node c solid rotation a-,b-,d-\n\
            node s solid rotation a+,b+,d+\n\
            arc a s c current 1\narc b s c current 6\narc d s c current 11\n";
        let cg: CurrentGraph = text.parse().unwrap();
        let r = cg.check_principles();
        assert!(r.find("C2 KCL").unwrap().passed);
    }

    #[test]
    fn vortex_of_wrong_degree_fails_c1() {
        let text = "group Z7 index 3\nnode x solid vortex x rotation a+,a-\narc a x x current 1\n";
        let cg: CurrentGraph = text.parse().unwrap();
        let r = cg.check_principles();
        let c1 = r.find("C1 degrees").unwrap();
        assert!(!c1.passed);
        assert_eq!(c1.witness, vec!["x:degree 2"]);
    }

    #[test]
    fn missing_element_witness() {
        let log = CircuitLog {
            circuit_id: 0,
            entries: [1u32, 2, 3, 4, 5, 6].iter().map(|&r| LogEntry::Residue(r)).collect(),
        };
        let r = check_log_bundle(&[log], 8, 1, &BTreeSet::new());
        let c = r.find("log [0]").unwrap();
        assert!(!c.passed);
        assert_eq!(c.witness, vec!["missing 7"]);
    }

    #[test]
    fn cyclic_equality_excludes_reflection() {
        let mk = |v: &[u32]| CircuitLog {
            circuit_id: 0,
            entries: v.iter().map(|&r| LogEntry::Residue(r)).collect(),
        };
        assert!(mk(&[1, 2, 3, 4]).cyclically_equal(&mk(&[3, 4, 1, 2])));
        assert!(!mk(&[1, 2, 3, 4]).cyclically_equal(&mk(&[4, 3, 2, 1])));
    }
}
