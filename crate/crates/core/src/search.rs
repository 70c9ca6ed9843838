//! Bounded depth-first search for handle completions.
//!
//! A handle here is a corner twist at a vertex near the anchor followed by
//! chords across the merged face. Each handle may be preceded by edge flips
//! near the anchor. Every flip diagonal and chord must be a missing pair, a
//! cost pair or an explicitly allowed extra pair.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::faces::{genus_target, stats_of, SurfaceStats};
use crate::report::VerificationReport;
use crate::rotation::RotationSystem;
use crate::surgery::{apply_op, apply_script, contract_edge, OpenEmbedding, ScriptStep, SurgeryOp, SurgeryScript};
use crate::verify::missing_pairs;
use crate::vertex::{parse_pairs, Vertex, VertexPair};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("invalid search spec: {0}")]
    Spec(String),
    #[error("anchor {0} is not a vertex of the embedding")]
    UnknownAnchor(Vertex),
    #[error("search supports at most 64 vertices, got {0}")]
    TooLarge(usize),
    #[error("input embedding: {0}")]
    Input(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchSpec {
    pub target_n: usize,
    /// Pairs the completion must add. `None` means every non-adjacent pair
    /// of the input.
    pub missing_edges: Option<BTreeSet<VertexPair>>,
    pub anchors: Vec<Vertex>,
    pub max_flips_per_handle: usize,
    /// Upper bound on the faces a handle's merged face is cut into.
    pub max_disk_faces: usize,
    pub handle_count: usize,
    pub require_restore_costs: bool,
    pub symmetry_shift: Option<u32>,
    pub modulus: u32,
    /// Exact set of missing pairs each handle must add, when given.
    pub handle_targets: Vec<Option<BTreeSet<VertexPair>>>,
    /// Target pairs left to flips and repair moves instead of chords.
    pub flip_targets: BTreeSet<VertexPair>,
    /// Upper bound on unrestored cost after each intermediate handle.
    pub max_cost: Option<usize>,
    /// Pairs that flips and chords may add besides missing and cost pairs.
    pub extra_edges: BTreeSet<VertexPair>,
    /// Edge contracted after the last handle.
    pub contract: Option<(Vertex, Vertex)>,
    /// Twists may sit at vertices within this distance of the anchor.
    pub twist_radius: usize,
    /// Flips and single chords allowed after a handle's twist and chords.
    pub max_repair_moves: usize,
    /// Flips must have both endpoints within this distance of the anchor.
    pub flip_radius: usize,
    pub exhaustive: bool,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            target_n: 0,
            missing_edges: None,
            anchors: Vec::new(),
            max_flips_per_handle: 4,
            max_disk_faces: 8,
            handle_count: 0,
            require_restore_costs: true,
            symmetry_shift: None,
            modulus: 18,
            handle_targets: Vec::new(),
            flip_targets: BTreeSet::new(),
            max_cost: None,
            extra_edges: BTreeSet::new(),
            contract: None,
            twist_radius: 1,
            max_repair_moves: 0,
            flip_radius: 1,
            exhaustive: false,
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    target_n: usize,
    #[serde(default)]
    missing_edges: Option<String>,
    #[serde(default)]
    anchors: String,
    #[serde(default = "default_flips")]
    max_flips_per_handle: usize,
    #[serde(default = "default_disk")]
    max_disk_faces: usize,
    handle_count: usize,
    #[serde(default = "default_true")]
    require_restore_costs: bool,
    #[serde(default)]
    symmetry_shift: Option<u32>,
    #[serde(default = "default_modulus")]
    modulus: u32,
    #[serde(default)]
    handle_targets: Vec<String>,
    #[serde(default)]
    flip_targets: Option<String>,
    #[serde(default)]
    max_cost: Option<usize>,
    #[serde(default)]
    extra_edges: Option<String>,
    #[serde(default)]
    contract: Option<String>,
    #[serde(default = "default_one")]
    twist_radius: usize,
    #[serde(default)]
    max_repair_moves: usize,
    #[serde(default = "default_one")]
    flip_radius: usize,
    #[serde(default)]
    exhaustive: bool,
}

fn default_flips() -> usize {
    4
}
fn default_disk() -> usize {
    8
}
fn default_true() -> bool {
    true
}
fn default_modulus() -> u32 {
    18
}
fn default_one() -> usize {
    1
}

fn pair_set(s: &str) -> Result<BTreeSet<VertexPair>, SearchError> {
    parse_pairs(s)
        .map(|v| v.into_iter().collect())
        .map_err(|e| SearchError::Spec(e.to_string()))
}

fn show_pairs(s: &BTreeSet<VertexPair>) -> String {
    s.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
}

impl SearchSpec {
    /// Parses `key = value` lines. Lists of pairs are written as
    /// `"(0,9) (1,10)"`, vertex lists as `"0 8"`, per-handle targets as an
    /// array of pair lists where `"*"` leaves a handle unconstrained.
    pub fn parse(text: &str) -> Result<Self, SearchError> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| SearchError::Spec(e.message().to_string()))?;
        let anchors = raw
            .anchors
            .split_whitespace()
            .map(|t| t.parse::<Vertex>().map_err(|e| SearchError::Spec(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let missing_edges = match raw.missing_edges.as_deref().map(str::trim) {
            None | Some("auto") => None,
            Some(s) => Some(pair_set(s)?),
        };
        let handle_targets = raw
            .handle_targets
            .iter()
            .map(|t| if t.trim() == "*" { Ok(None) } else { pair_set(t).map(Some) })
            .collect::<Result<Vec<_>, _>>()?;
        let contract = match raw.contract {
            None => None,
            Some(s) => {
                let vs: Vec<&str> = s.split_whitespace().collect();
                if vs.len() != 2 {
                    return Err(SearchError::Spec("contract takes two vertices".into()));
                }
                let p = |t: &str| t.parse::<Vertex>().map_err(|e| SearchError::Spec(e.to_string()));
                Some((p(vs[0])?, p(vs[1])?))
            }
        };
        let spec = SearchSpec {
            target_n: raw.target_n,
            missing_edges,
            anchors,
            max_flips_per_handle: raw.max_flips_per_handle,
            max_disk_faces: raw.max_disk_faces,
            handle_count: raw.handle_count,
            require_restore_costs: raw.require_restore_costs,
            symmetry_shift: raw.symmetry_shift,
            modulus: raw.modulus,
            handle_targets,
            flip_targets: raw.flip_targets.as_deref().map(pair_set).transpose()?.unwrap_or_default(),
            max_cost: raw.max_cost,
            extra_edges: raw.extra_edges.as_deref().map(pair_set).transpose()?.unwrap_or_default(),
            contract,
            twist_radius: raw.twist_radius,
            max_repair_moves: raw.max_repair_moves,
            flip_radius: raw.flip_radius,
            exhaustive: raw.exhaustive,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.anchors.len() != self.handle_count {
            return Err(SearchError::Spec(format!(
                "{} anchors for {} handles",
                self.anchors.len(),
                self.handle_count
            )));
        }
        if !self.handle_targets.is_empty() && self.handle_targets.len() != self.handle_count {
            return Err(SearchError::Spec("handle_targets needs one entry per handle".into()));
        }
        if self.max_disk_faces < 2 {
            return Err(SearchError::Spec("max_disk_faces must be at least 2".into()));
        }
        if self.symmetry_shift.is_some() && self.modulus == 0 {
            return Err(SearchError::Spec("modulus must be positive".into()));
        }
        Ok(())
    }

    fn target(&self, h: usize) -> Option<&BTreeSet<VertexPair>> {
        self.handle_targets.get(h).and_then(Option::as_ref)
    }

    pub fn bounds(&self) -> SearchBounds {
        SearchBounds {
            max_flips_per_handle: self.max_flips_per_handle,
            max_disk_faces: self.max_disk_faces,
            handle_count: self.handle_count,
            twist_radius: self.twist_radius,
            flip_radius: self.flip_radius,
            max_repair_moves: self.max_repair_moves,
        }
    }
}

impl fmt::Display for SearchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "target_n = {}", self.target_n)?;
        if let Some(m) = &self.missing_edges {
            writeln!(f, "missing_edges = \"{}\"", show_pairs(m))?;
        }
        let anchors: Vec<String> = self.anchors.iter().map(|v| v.to_string()).collect();
        writeln!(f, "anchors = \"{}\"", anchors.join(" "))?;
        writeln!(f, "max_flips_per_handle = {}", self.max_flips_per_handle)?;
        writeln!(f, "max_disk_faces = {}", self.max_disk_faces)?;
        writeln!(f, "handle_count = {}", self.handle_count)?;
        writeln!(f, "require_restore_costs = {}", self.require_restore_costs)?;
        if let Some(s) = self.symmetry_shift {
            writeln!(f, "symmetry_shift = {s}")?;
        }
        writeln!(f, "modulus = {}", self.modulus)?;
        if !self.handle_targets.is_empty() {
            let ts: Vec<String> = self
                .handle_targets
                .iter()
                .map(|t| match t {
                    Some(s) => format!("\"{}\"", show_pairs(s)),
                    None => "\"*\"".into(),
                })
                .collect();
            writeln!(f, "handle_targets = [{}]", ts.join(", "))?;
        }
        if !self.flip_targets.is_empty() {
            writeln!(f, "flip_targets = \"{}\"", show_pairs(&self.flip_targets))?;
        }
        if let Some(c) = self.max_cost {
            writeln!(f, "max_cost = {c}")?;
        }
        if !self.extra_edges.is_empty() {
            writeln!(f, "extra_edges = \"{}\"", show_pairs(&self.extra_edges))?;
        }
        if let Some((u, v)) = &self.contract {
            writeln!(f, "contract = \"{u} {v}\"")?;
        }
        writeln!(f, "twist_radius = {}", self.twist_radius)?;
        writeln!(f, "max_repair_moves = {}", self.max_repair_moves)?;
        writeln!(f, "flip_radius = {}", self.flip_radius)?;
        writeln!(f, "exhaustive = {}", self.exhaustive)
    }
}

impl FromStr for SearchSpec {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SearchSpec::parse(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchBounds {
    pub max_flips_per_handle: usize,
    pub max_disk_faces: usize,
    pub handle_count: usize,
    pub twist_radius: usize,
    pub flip_radius: usize,
    pub max_repair_moves: usize,
}

impl fmt::Display for SearchBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "handles={} flips<={} faces<={} twist_radius={} flip_radius={} repair<={}",
            self.handle_count,
            self.max_flips_per_handle,
            self.max_disk_faces,
            self.twist_radius,
            self.flip_radius,
            self.max_repair_moves
        )
    }
}

/// What one handle of a result changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HandleSummary {
    pub anchor: Vertex,
    pub twist_at: Vertex,
    pub added: Vec<VertexPair>,
    pub cost: Vec<VertexPair>,
    pub restored: Vec<VertexPair>,
    pub genus_after: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub script: SurgeryScript,
    pub final_rotation: RotationSystem,
    pub final_stats: SurfaceStats,
    pub handles: Vec<HandleSummary>,
    pub certificate: VerificationReport,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(Vec<SearchResult>),
    NotFound { bounds: SearchBounds, explored: u64 },
}

impl SearchOutcome {
    pub fn results(&self) -> &[SearchResult] {
        match self {
            SearchOutcome::Found(r) => r,
            SearchOutcome::NotFound { .. } => &[],
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found(_))
    }
}

/// Passes iff `rot` is an embedding of `K_n` on the surface of genus
/// `genus_target(n)`.
pub fn verify_completion(rot: &RotationSystem, n: usize) -> VerificationReport {
    let mut report = VerificationReport::new(format!("completion K{n}"));
    report.check(
        "vertex count",
        rot.vertex_count() == n,
        format!("{} vertices, expected {n}", rot.vertex_count()),
    );
    let missing = missing_pairs(rot);
    if missing.is_empty() {
        report.check("complete graph", true, format!("{} edges", rot.edge_count()));
    } else {
        report.fail_with(
            "complete graph",
            format!("{} missing edges", missing.len()),
            missing.iter().map(|p| p.to_string()).collect(),
        );
    }
    match (stats_of(rot), genus_target(n as i64)) {
        (Ok(s), Ok(t)) => {
            report.check("genus", s.genus == t, format!("genus {}, target {t}", s.genus));
            report = report.with_stats(s);
        }
        (Err(e), _) | (_, Err(e)) => {
            report.fail_with("genus", e.to_string(), vec![]);
        }
    }
    report
}

type Pair = (usize, usize);

fn mk(a: usize, b: usize) -> Pair {
    (a.min(b), a.max(b))
}

#[derive(Clone)]
struct Node {
    rot: Vec<Vec<usize>>,
    adj: Vec<u64>,
    missing: BTreeSet<Pair>,
    cost: BTreeSet<Pair>,
    steps: Vec<ScriptStep>,
    handles: Vec<HandleSummary>,
    handle_start: usize,
    missing_at_start: BTreeSet<Pair>,
    cost_at_start: BTreeSet<Pair>,
}

impl Node {
    fn has(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    fn succ(&self, v: usize, u: usize) -> usize {
        let r = &self.rot[v];
        let p = r.iter().position(|&x| x == u).expect("neighbor");
        r[(p + 1) % r.len()]
    }

    fn set_edge(&mut self, a: usize, b: usize, on: bool) {
        if on {
            self.adj[a] |= 1 << b;
            self.adj[b] |= 1 << a;
        } else {
            self.adj[a] &= !(1 << b);
            self.adj[b] &= !(1 << a);
        }
    }
}

/// Faces of a raw rotation, and for every dart `(u, v)` the index of its face.
fn raw_faces(rot: &[Vec<usize>]) -> (Vec<Vec<usize>>, Vec<u32>) {
    let n = rot.len();
    let mut pos = vec![u32::MAX; n * n];
    for (v, r) in rot.iter().enumerate() {
        for (p, &u) in r.iter().enumerate() {
            pos[v * n + u] = p as u32;
        }
    }
    let mut face_of = vec![u32::MAX; n * n];
    let mut faces = Vec::new();
    for s in 0..n {
        for &t in &rot[s] {
            if face_of[s * n + t] != u32::MAX {
                continue;
            }
            let id = faces.len() as u32;
            let mut walk = Vec::new();
            let (mut a, mut b) = (s, t);
            loop {
                face_of[a * n + b] = id;
                walk.push(a);
                let r = &rot[b];
                let c = r[(pos[b * n + a] as usize + 1) % r.len()];
                a = b;
                b = c;
                if a == s && b == t {
                    break;
                }
            }
            faces.push(walk);
        }
    }
    (faces, face_of)
}

fn walk_from(rot: &[Vec<usize>], a0: usize, b0: usize) -> Vec<usize> {
    let mut walk = Vec::new();
    let (mut a, mut b) = (a0, b0);
    loop {
        walk.push(a);
        let r = &rot[b];
        let p = r.iter().position(|&x| x == a).expect("dart");
        let c = r[(p + 1) % r.len()];
        a = b;
        b = c;
        if a == a0 && b == b0 {
            return walk;
        }
    }
}

fn cross(c: (usize, usize), d: (usize, usize)) -> bool {
    let ((a, b), (x, y)) = (c, d);
    (a < x && x < b && b < y) || (x < a && a < y && y < b)
}

/// Inserts non-crossing chords into the face `walk` of `rot`, chords given as
/// walk positions `(i, j)` with `i < j`.
fn insert_chords(rot: &mut [Vec<usize>], walk: &[usize], chords: &[(usize, usize)]) {
    let n = walk.len();
    let mut per: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in chords {
        per[i].push(j);
        per[j].push(i);
    }
    for (i, targets) in per.iter_mut().enumerate() {
        if targets.is_empty() {
            continue;
        }
        targets.sort_by_key(|&t| std::cmp::Reverse((t + n - i) % n));
        let u = walk[i];
        let before = walk[(i + n - 1) % n];
        let p = rot[u].iter().position(|&x| x == before).expect("corner");
        let items: Vec<usize> = targets.iter().map(|&t| walk[t]).collect();
        rot[u].splice(p + 1..p + 1, items);
    }
}

struct Ctx<'a> {
    spec: &'a SearchSpec,
    start: RotationSystem,
    n: usize,
    original: HashSet<Pair>,
    targets_all: BTreeSet<Pair>,
    extra: BTreeSet<Pair>,
    anchors: Vec<usize>,
    handle_targets: Vec<Option<BTreeSet<Pair>>>,
    flip_targets: BTreeSet<Pair>,
    explored: AtomicU64,
}

impl<'a> Ctx<'a> {
    fn label(&self, v: usize) -> &Vertex {
        self.start.label(v)
    }

    fn vp(&self, p: Pair) -> VertexPair {
        VertexPair::new(self.label(p.0).clone(), self.label(p.1).clone())
    }

    fn ix_pair(&self, p: &VertexPair) -> Result<Pair, SearchError> {
        let a = self.start.index_of(&p.0).ok_or_else(|| SearchError::UnknownAnchor(p.0.clone()))?;
        let b = self.start.index_of(&p.1).ok_or_else(|| SearchError::UnknownAnchor(p.1.clone()))?;
        Ok(mk(a, b))
    }

    fn root(&self) -> Node {
        let rot = self.start.rotations().to_vec();
        let mut adj = vec![0u64; self.n];
        for (v, r) in rot.iter().enumerate() {
            for &u in r {
                adj[v] |= 1 << u;
            }
        }
        let missing: BTreeSet<Pair> = self.targets_all.iter().copied().filter(|&(a, b)| adj[a] >> b & 1 == 0).collect();
        Node {
            rot,
            adj,
            missing: missing.clone(),
            cost: BTreeSet::new(),
            steps: Vec::new(),
            handles: Vec::new(),
            handle_start: 0,
            missing_at_start: missing,
            cost_at_start: BTreeSet::new(),
        }
    }

    fn ball(&self, node: &Node, center: usize, radius: usize) -> u64 {
        let mut set = 1u64 << center;
        for _ in 0..radius {
            let mut next = set;
            for v in 0..self.n {
                if set >> v & 1 == 1 {
                    next |= node.adj[v];
                }
            }
            set = next;
        }
        set
    }

    /// Pairs a flip or chord of handle `h` may add in this state. Flips may
    /// pass through missing pairs outside the handle's target set.
    fn allowed(&self, node: &Node, h: usize, p: Pair, flip: bool) -> bool {
        if node.cost.contains(&p) || self.extra.contains(&p) {
            return true;
        }
        if !node.missing.contains(&p) {
            return false;
        }
        match &self.handle_targets[h] {
            Some(t) => flip || t.contains(&p),
            None => true,
        }
    }

    fn on_remove(&self, node: &mut Node, p: Pair) {
        if self.original.contains(&p) {
            node.cost.insert(p);
        } else if self.targets_all.contains(&p) {
            node.missing.insert(p);
        }
    }

    fn on_add(&self, node: &mut Node, p: Pair) {
        node.missing.remove(&p);
        node.cost.remove(&p);
    }

    /// All states reachable by up to the flip bound, in breadth-first order.
    fn flip_states(&self, node: &Node, h: usize) -> Vec<Node> {
        let region = self.ball(node, self.anchors[h], self.spec.flip_radius);
        let mut seen: HashSet<Vec<Vec<usize>>> = HashSet::new();
        seen.insert(node.rot.clone());
        let mut out = vec![node.clone()];
        let mut layer = vec![node.clone()];
        for _ in 0..self.spec.max_flips_per_handle {
            let mut next = Vec::new();
            for st in &layer {
                for a in 0..self.n {
                    if region >> a & 1 == 0 {
                        continue;
                    }
                    for b in a + 1..self.n {
                        if region >> b & 1 == 0 || !st.has(a, b) {
                            continue;
                        }
                        if let Some(child) = self.try_flip(st, h, a, b) {
                            if seen.insert(child.rot.clone()) {
                                next.push(child);
                            }
                        }
                    }
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    fn try_flip(&self, st: &Node, h: usize, a: usize, b: usize) -> Option<Node> {
        let c = st.succ(b, a);
        let d = st.succ(a, b);
        if c == d || st.succ(c, b) != a || st.succ(a, c) != b || st.succ(d, a) != b || st.succ(b, d) != a {
            return None;
        }
        if st.has(c, d) || st.rot[a].len() <= 3 || st.rot[b].len() <= 3 {
            return None;
        }
        let p = mk(c, d);
        if !self.allowed(st, h, p, true) {
            return None;
        }
        let mut child = st.clone();
        let r = &mut child.rot;
        r[a].retain(|&x| x != b);
        r[b].retain(|&x| x != a);
        let pc = r[c].iter().position(|&x| x == b).expect("corner");
        r[c].insert(pc + 1, d);
        let pd = r[d].iter().position(|&x| x == a).expect("corner");
        r[d].insert(pd + 1, c);
        child.set_edge(a, b, false);
        child.set_edge(c, d, true);
        self.on_remove(&mut child, mk(a, b));
        self.on_add(&mut child, p);
        child.steps.push(ScriptStep {
            op: SurgeryOp::Flip(self.label(a).clone(), self.label(b).clone()),
            note: Some(format!("handle {}: flip to {}", h + 1, self.vp(p))),
        });
        Some(child)
    }

    fn twist_vertices(&self, node: &Node, h: usize) -> Vec<usize> {
        let ball = self.ball(node, self.anchors[h], self.spec.twist_radius);
        let mut vs = vec![self.anchors[h]];
        vs.extend((0..self.n).filter(|&v| v != self.anchors[h] && ball >> v & 1 == 1));
        vs
    }

    /// Pairs that must appear among the chords of handle `h`.
    fn required(&self, node: &Node, h: usize) -> BTreeSet<Pair> {
        let last = h + 1 == self.spec.handle_count;
        let mut req: BTreeSet<Pair> = match &self.handle_targets[h] {
            Some(t) => t.intersection(&node.missing).copied().collect(),
            None if last => node.missing.clone(),
            None => BTreeSet::new(),
        };
        if last && self.spec.require_restore_costs {
            req.extend(node.cost.iter().copied());
        }
        req.retain(|p| !self.flip_targets.contains(p));
        req
    }

    /// Depth-first over twists and chord sets for handle `h` from a flip state.
    fn expand(&self, st: &Node, h: usize, out: &mut Vec<Node>) {
        let req = self.required(st, h);
        let req_vertices: u64 = req.iter().fold(0, |m, &(a, b)| m | 1 << a | 1 << b);
        let (faces, face_of) = raw_faces(&st.rot);
        let n = self.n;
        for v in self.twist_vertices(st, h) {
            if req_vertices & !st.adj[v] != 0 {
                continue;
            }
            let r = st.rot[v].clone();
            let d = r.len();
            let corner_face: Vec<usize> = (0..d).map(|p| face_of[r[(p + d - 1) % d] * n + v] as usize).collect();
            let face_mask: Vec<u64> = corner_face
                .iter()
                .map(|&f| faces[f].iter().fold(0u64, |m, &x| m | 1 << x))
                .collect();
            for p0 in 0..d {
                for p1 in p0 + 1..d {
                    if corner_face[p1] == corner_face[p0] {
                        continue;
                    }
                    for p2 in p1 + 1..d {
                        let (f0, f1, f2) = (corner_face[p0], corner_face[p1], corner_face[p2]);
                        if f2 == f0 || f2 == f1 {
                            continue;
                        }
                        if req_vertices & !(face_mask[p0] | face_mask[p1] | face_mask[p2]) != 0 {
                            continue;
                        }
                        if [f0, f1, f2].iter().any(|&f| faces[f].iter().filter(|&&x| x == v).count() != 1) {
                            continue;
                        }
                        let total = faces[f0].len() + faces[f1].len() + faces[f2].len();
                        let mut tw = st.clone();
                        let mut nr = r[p0..p1].to_vec();
                        nr.extend_from_slice(&r[p2..]);
                        nr.extend_from_slice(&r[..p0]);
                        nr.extend_from_slice(&r[p1..p2]);
                        tw.rot[v] = nr;
                        let walk = walk_from(&tw.rot, v, tw.rot[v][0]);
                        if walk.len() != total {
                            continue;
                        }
                        tw.steps.push(ScriptStep {
                            op: SurgeryOp::Twist {
                                at: self.label(v).clone(),
                                starts: [self.label(r[p0]).clone(), self.label(r[p1]).clone(), self.label(r[p2]).clone()],
                            },
                            note: Some(format!("handle {}: merge three faces at {}", h + 1, self.label(v))),
                        });
                        self.chords(&tw, h, v, &walk, &req, out);
                        if !self.spec.exhaustive && !out.is_empty() {
                            return;
                        }
                    }
                }
            }
        }
    }

    fn chords(&self, tw: &Node, h: usize, v: usize, walk: &[usize], req: &BTreeSet<Pair>, out: &mut Vec<Node>) {
        let len = walk.len();
        let mut cands: Vec<(usize, usize, Pair)> = Vec::new();
        for i in 0..len {
            for j in i + 2..len {
                if i == 0 && j == len - 1 {
                    continue;
                }
                let (a, b) = (walk[i], walk[j]);
                if a == b || tw.has(a, b) {
                    continue;
                }
                let p = mk(a, b);
                if self.allowed(tw, h, p, false) {
                    cands.push((i, j, p));
                }
            }
        }
        let max = (self.spec.max_disk_faces - 1).min(len.saturating_sub(3));
        let lo = req.len().max(1);
        let mut chosen: Vec<usize> = Vec::new();
        for k in lo..=max {
            self.choose(tw, h, v, walk, &cands, req, k, 0, &mut chosen, out);
            if !self.spec.exhaustive && !out.is_empty() {
                return;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn choose(
        &self,
        tw: &Node,
        h: usize,
        v: usize,
        walk: &[usize],
        cands: &[(usize, usize, Pair)],
        req: &BTreeSet<Pair>,
        k: usize,
        from: usize,
        chosen: &mut Vec<usize>,
        out: &mut Vec<Node>,
    ) {
        if chosen.len() == k {
            self.explored.fetch_add(1, Ordering::Relaxed);
            if let Some(node) = self.leaf(tw, h, v, walk, cands, chosen, req) {
                out.push(node);
            }
            return;
        }
        let need = req.iter().filter(|p| !chosen.iter().any(|&c| cands[c].2 == **p)).count();
        if need > k - chosen.len() {
            return;
        }
        for t in from..cands.len() {
            if cands.len() - t < k - chosen.len() {
                break;
            }
            let c = cands[t];
            if chosen.iter().any(|&x| cands[x].2 == c.2 || cross((cands[x].0, cands[x].1), (c.0, c.1))) {
                continue;
            }
            chosen.push(t);
            self.choose(tw, h, v, walk, cands, req, k, t + 1, chosen, out);
            chosen.pop();
            if !self.spec.exhaustive && !out.is_empty() {
                return;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn leaf(
        &self,
        tw: &Node,
        h: usize,
        _v: usize,
        walk: &[usize],
        cands: &[(usize, usize, Pair)],
        chosen: &[usize],
        req: &BTreeSet<Pair>,
    ) -> Option<Node> {
        let pairs: BTreeSet<Pair> = chosen.iter().map(|&c| cands[c].2).collect();
        if !req.is_subset(&pairs) {
            return None;
        }
        let mut node = tw.clone();
        let positions: Vec<(usize, usize)> = chosen.iter().map(|&c| (cands[c].0, cands[c].1)).collect();
        let before = node.rot.clone();
        insert_chords(&mut node.rot, walk, &positions);
        for &c in chosen {
            let (i, j, p) = cands[c];
            node.set_edge(p.0, p.1, true);
            self.on_add(&mut node, p);
            let (u, w) = (walk[i], walk[j]);
            let after_u = self.after_at_insertion(&before, &node.rot, u, w, chosen, cands, walk, c);
            let after_w = self.after_at_insertion(&before, &node.rot, w, u, chosen, cands, walk, c);
            let verb = if tw.cost.contains(&p) { "restore" } else { "add" };
            node.steps.push(ScriptStep {
                op: SurgeryOp::Chord {
                    u: self.label(u).clone(),
                    v: self.label(w).clone(),
                    after_u: self.label(after_u).clone(),
                    after_v: self.label(after_w).clone(),
                },
                note: Some(format!("handle {}: {verb} {}", h + 1, self.vp(p))),
            });
        }
        self.settle(node, h, self.spec.max_repair_moves)
    }

    /// Accepts the handle, or searches breadth-first through up to `budget`
    /// further flips and chords in non-triangular faces that keep the
    /// deficit at or below its starting value. Only leaves whose deficit is
    /// one, or no more than the flip targets still missing, are repaired.
    fn settle(&self, node: Node, h: usize, budget: usize) -> Option<Node> {
        if let Some(r) = self.accept(node.clone(), h) {
            return Some(r);
        }
        let bound = self.deficit(&node, h);
        let leftover = self.flip_targets.intersection(&node.missing).count();
        if bound > leftover.max(1) {
            return None;
        }
        let mut seen: HashSet<Vec<Vec<usize>>> = HashSet::new();
        seen.insert(node.rot.clone());
        let mut layer = vec![node];
        for _ in 0..budget {
            let mut next = Vec::new();
            for st in &layer {
                for child in self.repair_moves(st, h) {
                    if self.deficit(&child, h) > bound || !seen.insert(child.rot.clone()) {
                        continue;
                    }
                    if let Some(r) = self.accept(child.clone(), h) {
                        return Some(r);
                    }
                    next.push(child);
                }
            }
            if next.is_empty() {
                break;
            }
            layer = next;
        }
        None
    }

    /// Cost still to restore plus target pairs still to add and non-target
    /// pairs added so far. Repair moves never raise it.
    fn deficit(&self, node: &Node, h: usize) -> usize {
        let last = h + 1 == self.spec.handle_count;
        let pending = match &self.handle_targets[h] {
            Some(t) => {
                let stray = node
                    .missing_at_start
                    .difference(&node.missing)
                    .filter(|p| !t.contains(p))
                    .count();
                t.intersection(&node.missing).count() + stray
            }
            None if last => node.missing.len(),
            None => 0,
        };
        pending + node.cost.len()
    }

    fn repair_moves(&self, node: &Node, h: usize) -> Vec<Node> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                if !node.has(a, b) {
                    continue;
                }
                if let Some(mut child) = self.try_flip(node, h, a, b) {
                    if let Some(st) = child.steps.last_mut() {
                        st.note = st.note.take().map(|n| n.replacen(": flip", ": repair flip", 1));
                    }
                    out.push(child);
                }
            }
        }
        let (faces, _) = raw_faces(&node.rot);
        for f in faces.iter().filter(|f| f.len() > 3) {
            let len = f.len();
            for i in 0..len {
                for j in i + 2..len {
                    if i == 0 && j == len - 1 {
                        continue;
                    }
                    let (u, w) = (f[i], f[j]);
                    let p = mk(u, w);
                    if u == w || node.has(u, w) || !self.allowed(node, h, p, false) {
                        continue;
                    }
                    let mut child = node.clone();
                    insert_chords(&mut child.rot, f, &[(i, j)]);
                    child.set_edge(u, w, true);
                    let verb = if node.cost.contains(&p) { "restore" } else { "add" };
                    self.on_add(&mut child, p);
                    child.steps.push(ScriptStep {
                        op: SurgeryOp::Chord {
                            u: self.label(u).clone(),
                            v: self.label(w).clone(),
                            after_u: self.label(f[(i + len - 1) % len]).clone(),
                            after_v: self.label(f[j - 1]).clone(),
                        },
                        note: Some(format!("handle {}: repair {verb} {}", h + 1, self.vp(p))),
                    });
                    out.push(child);
                }
            }
        }
        out
    }

    /// The neighbor after which `target` is inserted at `u` when the chords
    /// are applied one at a time in `chosen` order.
    #[allow(clippy::too_many_arguments)]
    fn after_at_insertion(
        &self,
        before: &[Vec<usize>],
        fin: &[Vec<usize>],
        u: usize,
        target: usize,
        chosen: &[usize],
        cands: &[(usize, usize, Pair)],
        walk: &[usize],
        current: usize,
    ) -> usize {
        let k = chosen.iter().position(|&c| c == current).expect("chosen");
        let present: HashSet<usize> = chosen[..k]
            .iter()
            .filter_map(|&c| {
                let (i, j, _) = cands[c];
                if walk[i] == u {
                    Some(walk[j])
                } else if walk[j] == u {
                    Some(walk[i])
                } else {
                    None
                }
            })
            .collect();
        let r = &fin[u];
        let d = r.len();
        let p = r.iter().position(|&x| x == target).expect("inserted");
        let mut q = (p + d - 1) % d;
        loop {
            let x = r[q];
            if before[u].contains(&x) || present.contains(&x) {
                return x;
            }
            q = (q + d - 1) % d;
        }
    }

    fn close_handle(&self, node: &mut Node, h: usize, twist_at: usize) {
        let added: Vec<VertexPair> = node.missing_at_start.difference(&node.missing).map(|&p| self.vp(p)).collect();
        let restored: Vec<VertexPair> = node.cost_at_start.difference(&node.cost).map(|&p| self.vp(p)).collect();
        let cost: Vec<VertexPair> = node.cost.iter().map(|&p| self.vp(p)).collect();
        let genus = {
            let (faces, _) = raw_faces(&node.rot);
            let e: usize = node.rot.iter().map(Vec::len).sum::<usize>() / 2;
            let chi = self.n as i64 - e as i64 + faces.len() as i64;
            (2 - chi) / 2
        };
        node.handles.push(HandleSummary {
            anchor: self.label(self.anchors[h]).clone(),
            twist_at: self.label(twist_at).clone(),
            added,
            cost,
            restored,
            genus_after: genus,
        });
        node.handle_start = node.steps.len();
        node.missing_at_start = node.missing.clone();
        node.cost_at_start = node.cost.clone();
    }

    fn twist_vertex_of(&self, node: &Node) -> usize {
        node.steps[node.handle_start..]
            .iter()
            .find_map(|s| match &s.op {
                SurgeryOp::Twist { at, .. } => self.start.index_of(at),
                _ => None,
            })
            .unwrap_or(self.anchors[0])
    }

    /// Checks a finished handle and continues with the next one.
    fn accept(&self, mut node: Node, h: usize) -> Option<Node> {
        if let Some(t) = &self.handle_targets[h] {
            let added: BTreeSet<Pair> = node.missing_at_start.difference(&node.missing).copied().collect();
            if &added != t {
                return None;
            }
        } else if node.missing.len() >= node.missing_at_start.len() && !node.missing_at_start.is_empty() {
            return None;
        }
        let last = h + 1 == self.spec.handle_count;
        if !last {
            if let Some(mc) = self.spec.max_cost {
                if node.cost.len() > mc {
                    return None;
                }
            }
        } else if !node.missing.is_empty() || (self.spec.require_restore_costs && !node.cost.is_empty()) {
            return None;
        }
        let tv = self.twist_vertex_of(&node);
        self.close_handle(&mut node, h, tv);
        if last {
            return self.finish(node);
        }
        self.next_handle(node, h + 1)
    }

    fn next_handle(&self, node: Node, h: usize) -> Option<Node> {
        if let Some(s) = self.spec.symmetry_shift {
            return self.shifted_handle(node, h, s);
        }
        for st in self.flip_states(&node, h) {
            let mut out = Vec::new();
            self.expand(&st, h, &mut out);
            if let Some(n) = out.into_iter().next() {
                return Some(n);
            }
        }
        None
    }

    /// Replays the first handle shifted by `h * s`, leaving out its repair
    /// moves and skipping operations whose effect is already present.
    fn shifted_handle(&self, node: Node, h: usize, s: u32) -> Option<Node> {
        let first: Vec<ScriptStep> = node
            .steps
            .iter()
            .filter(|st| {
                st.note
                    .as_deref()
                    .is_some_and(|n| n.starts_with("handle 1:") && !n.contains(": repair"))
            })
            .cloned()
            .collect();
        let shift = (s as u64 * h as u64 % self.spec.modulus as u64) as u32;
        let mut rs = RotationSystem::from_parts_unchecked(self.start.labels().to_vec(), node.rot.clone());
        let mut out = node.clone();
        for st in &first {
            let op = st.op.shifted(shift, self.spec.modulus);
            let Ok((next, eff)) = apply_op(&OpenEmbedding::closed(rs.clone()), &op) else {
                continue;
            };
            rs = next.rotation_system;
            let note = match (&op, eff.added.first()) {
                (SurgeryOp::Twist { at, .. }, _) => format!("handle {}: merge three faces at {at}", h + 1),
                (SurgeryOp::Flip(..), Some(p)) => format!("handle {}: flip to {p}", h + 1),
                (_, Some(p)) => {
                    let verb = if self.ix_pair(p).is_ok_and(|ip| out.cost.contains(&ip)) { "restore" } else { "add" };
                    format!("handle {}: {verb} {p}", h + 1)
                }
                _ => format!("handle {}", h + 1),
            };
            for p in &eff.removed {
                let ip = self.ix_pair(p).ok()?;
                out.set_edge(ip.0, ip.1, false);
                self.on_remove(&mut out, ip);
            }
            for p in &eff.added {
                let ip = self.ix_pair(p).ok()?;
                out.set_edge(ip.0, ip.1, true);
                self.on_add(&mut out, ip);
            }
            out.steps.push(ScriptStep {
                op,
                note: Some(format!("{note} (shift +{shift})")),
            });
        }
        out.rot = rs.rotations().to_vec();
        self.accept(out, h)
    }

    fn finish(&self, node: Node) -> Option<Node> {
        let mut steps = node.steps.clone();
        if let Some((u, v)) = &self.spec.contract {
            steps.push(ScriptStep {
                op: SurgeryOp::Contract(u.clone(), v.clone()),
                note: Some("contract".into()),
            });
            let rs = RotationSystem::from_parts_unchecked(self.start.labels().to_vec(), node.rot.clone());
            let (c, _) = contract_edge(&rs, u, v).ok()?;
            if !verify_completion(&c, self.spec.target_n).passed {
                return None;
            }
        } else {
            let rs = RotationSystem::from_parts_unchecked(self.start.labels().to_vec(), node.rot.clone());
            if !verify_completion(&rs, self.spec.target_n).passed {
                return None;
            }
        }
        Some(Node { steps, ..node })
    }

    fn to_result(&self, node: Node) -> Result<SearchResult, SearchError> {
        let script = SurgeryScript { steps: node.steps };
        let applied = apply_script(&self.start, &script).map_err(|e| SearchError::Input(e.to_string()))?;
        let fin = applied.rotation_system().clone();
        let certificate = verify_completion(&fin, self.spec.target_n);
        let final_stats = stats_of(&fin).map_err(|e| SearchError::Input(e.to_string()))?;
        Ok(SearchResult {
            script,
            final_rotation: fin,
            final_stats,
            handles: node.handles,
            certificate,
        })
    }
}

/// Searches for completions of `rot` within the bounds of `spec`.
pub fn search_completion(rot: &RotationSystem, spec: &SearchSpec) -> Result<SearchOutcome, SearchError> {
    spec.validate()?;
    rot.validate().map_err(|e| SearchError::Input(e.to_string()))?;
    let start = rot.canonical();
    let n = start.vertex_count();
    if n > 64 {
        return Err(SearchError::TooLarge(n));
    }
    let targets: BTreeSet<VertexPair> = match &spec.missing_edges {
        Some(m) => m.clone(),
        None => missing_pairs(&start),
    };
    let mut ctx = Ctx {
        spec,
        n,
        original: start.edges().into_iter().collect(),
        targets_all: BTreeSet::new(),
        extra: BTreeSet::new(),
        anchors: Vec::new(),
        handle_targets: Vec::new(),
        flip_targets: BTreeSet::new(),
        explored: AtomicU64::new(0),
        start,
    };
    ctx.targets_all = targets.iter().map(|p| ctx.ix_pair(p)).collect::<Result<_, _>>()?;
    ctx.flip_targets = spec.flip_targets.iter().map(|p| ctx.ix_pair(p)).collect::<Result<_, _>>()?;
    ctx.extra = spec.extra_edges.iter().map(|p| ctx.ix_pair(p)).collect::<Result<_, _>>()?;
    ctx.anchors = spec
        .anchors
        .iter()
        .map(|a| ctx.start.index_of(a).ok_or_else(|| SearchError::UnknownAnchor(a.clone())))
        .collect::<Result<_, _>>()?;
    ctx.handle_targets = (0..spec.handle_count)
        .map(|h| {
            spec.target(h)
                .map(|t| t.iter().map(|p| ctx.ix_pair(p)).collect::<Result<BTreeSet<_>, _>>())
                .transpose()
        })
        .collect::<Result<_, _>>()?;
    let root = ctx.root();
    if spec.handle_count == 0 {
        if !root.missing.is_empty() {
            return Ok(SearchOutcome::NotFound {
                bounds: spec.bounds(),
                explored: 0,
            });
        }
        return Ok(SearchOutcome::Found(vec![ctx.to_result(root)?]));
    }
    let tops = ctx.flip_states(&root, 0);
    let run = |st: &Node| {
        let mut out = Vec::new();
        ctx.expand(st, 0, &mut out);
        out
    };
    let nodes: Vec<Node> = if spec.exhaustive {
        tops.par_iter().flat_map_iter(run).collect()
    } else {
        tops.par_iter().find_map_first(|st| run(st).into_iter().next()).into_iter().collect()
    };
    if nodes.is_empty() {
        return Ok(SearchOutcome::NotFound {
            bounds: spec.bounds(),
            explored: ctx.explored.load(Ordering::Relaxed),
        });
    }
    let mut results = nodes.into_iter().map(|nd| ctx.to_result(nd)).collect::<Result<Vec<_>, _>>()?;
    results.sort_by_key(|r| r.script.to_string());
    results.dedup_by(|a, b| a.script == b.script);
    Ok(SearchOutcome::Found(results))
}
