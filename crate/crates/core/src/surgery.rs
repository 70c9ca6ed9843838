//! Local surgery on rotation systems: flips, disk excision, annulus gluing,
//! contraction, corner twists and chords, and scripts built from them.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::error::{EmbeddingError, ParseError};
use crate::faces::{stats_of, trace_faces, Face};
use crate::rotation::RotationSystem;
use crate::vertex::{Vertex, VertexPair};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurgeryError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("flip ({0},{1}): the face on the {2} side is not a triangle")]
    FlipNotTriangle(Vertex, Vertex, &'static str),
    #[error("flip ({0},{1}): both sides have the same third vertex {2}")]
    FlipSameApex(Vertex, Vertex, Vertex),
    #[error("flip ({0},{1}): diagonal ({2},{3}) already present")]
    FlipDuplicate(Vertex, Vertex, Vertex, Vertex),
    #[error("({0},{1}) is already an edge")]
    DuplicateEdge(Vertex, Vertex),
    #[error("{0} is not a face of the current embedding")]
    NotAFace(String),
    #[error("excised faces do not form a disk: {0}")]
    NotADisk(String),
    #[error("no open boundary matches {0}")]
    UnknownBoundary(String),
    #[error("boundaries share vertex {0}")]
    BoundariesMeet(Vertex),
    #[error("merge sequence needs {0} ones and {1} twos")]
    BadMerge(usize, usize),
    #[error("merge sequence draws no cross edge, so the annulus stays open")]
    UndrawnMerge,
    #[error("contract ({0},{1}): common neighbor {2} is not the apex of a triangle on the edge")]
    ContractDuplicate(Vertex, Vertex, Vertex),
    #[error("twist at {0}: {1}")]
    BadTwist(Vertex, String),
    #[error("chord ({0},{1}): the corners are on different faces")]
    ChordFaces(Vertex, Vertex),
    #[error("{0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MergeStep {
    /// `false` advances along the first boundary, `true` along the second.
    pub second: bool,
    /// Whether the cross edge this step creates is drawn.
    pub drawn: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SurgeryOp {
    Flip(Vertex, Vertex),
    Excise(Vec<Vec<Vertex>>),
    Glue {
        b1: Vec<Vertex>,
        b2: Vec<Vertex>,
        merge: Vec<MergeStep>,
    },
    Contract(Vertex, Vertex),
    /// Splits the rotation at `at` just before `starts[0..3]` and swaps the
    /// second and third blocks.
    Twist { at: Vertex, starts: [Vertex; 3] },
    /// Adds `(u, v)` with `v` right after `after_u` at `u` and `u` right
    /// after `after_v` at `v`.
    Chord {
        u: Vertex,
        v: Vertex,
        after_u: Vertex,
        after_v: Vertex,
    },
}

fn join(vs: &[Vertex]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl SurgeryOp {
    pub fn shifted(&self, s: u32, m: u32) -> SurgeryOp {
        let sh = |v: &Vertex| v.shifted(s, m);
        let shv = |vs: &[Vertex]| vs.iter().map(sh).collect::<Vec<_>>();
        match self {
            SurgeryOp::Flip(a, b) => SurgeryOp::Flip(sh(a), sh(b)),
            SurgeryOp::Excise(fs) => SurgeryOp::Excise(fs.iter().map(|f| shv(f)).collect()),
            SurgeryOp::Glue { b1, b2, merge } => SurgeryOp::Glue {
                b1: shv(b1),
                b2: shv(b2),
                merge: merge.clone(),
            },
            SurgeryOp::Contract(u, v) => SurgeryOp::Contract(sh(u), sh(v)),
            SurgeryOp::Twist { at, starts } => SurgeryOp::Twist {
                at: sh(at),
                starts: [sh(&starts[0]), sh(&starts[1]), sh(&starts[2])],
            },
            SurgeryOp::Chord {
                u,
                v,
                after_u,
                after_v,
            } => SurgeryOp::Chord {
                u: sh(u),
                v: sh(v),
                after_u: sh(after_u),
                after_v: sh(after_v),
            },
        }
    }
}

impl fmt::Display for SurgeryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurgeryOp::Flip(a, b) => write!(f, "flip {a} {b}"),
            SurgeryOp::Excise(fs) => {
                write!(f, "excise")?;
                for face in fs {
                    write!(f, " f({})", join(face))?;
                }
                Ok(())
            }
            SurgeryOp::Glue { b1, b2, merge } => {
                write!(f, "glue B1=({}) B2=({}) merge=", join(b1), join(b2))?;
                for s in merge {
                    write!(f, "{}", if s.second { '2' } else { '1' })?;
                    if !s.drawn {
                        write!(f, ".")?;
                    }
                }
                Ok(())
            }
            SurgeryOp::Contract(u, v) => write!(f, "contract {u} {v}"),
            SurgeryOp::Twist { at, starts } => {
                write!(f, "twist {at} {} {} {}", starts[0], starts[1], starts[2])
            }
            SurgeryOp::Chord {
                u,
                v,
                after_u,
                after_v,
            } => write!(f, "chord {u} {v} after {after_u} {after_v}"),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<Vertex>, String> {
    let inner = s
        .strip_prefix('(')
        .and_then(|x| x.strip_suffix(')'))
        .ok_or_else(|| format!("expected a parenthesized list, got `{s}`"))?;
    inner
        .split(',')
        .map(|t| t.trim().parse::<Vertex>().map_err(|e| e.to_string()))
        .collect()
}

impl FromStr for SurgeryOp {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let v = |t: &str| t.parse::<Vertex>().map_err(|e| e.to_string());
        let want = |n: usize| {
            if toks.len() == n {
                Ok(())
            } else {
                Err(format!("`{}` takes {} arguments", toks[0], n - 1))
            }
        };
        match toks.first().copied() {
            Some("flip") => {
                want(3)?;
                Ok(SurgeryOp::Flip(v(toks[1])?, v(toks[2])?))
            }
            Some("contract") => {
                want(3)?;
                Ok(SurgeryOp::Contract(v(toks[1])?, v(toks[2])?))
            }
            Some("twist") => {
                want(5)?;
                Ok(SurgeryOp::Twist {
                    at: v(toks[1])?,
                    starts: [v(toks[2])?, v(toks[3])?, v(toks[4])?],
                })
            }
            Some("chord") => {
                want(6)?;
                if toks[3] != "after" {
                    return Err("expected `chord u v after x y`".into());
                }
                Ok(SurgeryOp::Chord {
                    u: v(toks[1])?,
                    v: v(toks[2])?,
                    after_u: v(toks[4])?,
                    after_v: v(toks[5])?,
                })
            }
            Some("excise") => {
                if toks.len() < 2 {
                    return Err("excise needs at least one face".into());
                }
                let faces = toks[1..]
                    .iter()
                    .map(|t| {
                        t.strip_prefix('f')
                            .ok_or_else(|| format!("expected f(...), got `{t}`"))
                            .and_then(parse_list)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(SurgeryOp::Excise(faces))
            }
            Some("glue") => {
                want(4)?;
                let b1 = toks[1]
                    .strip_prefix("B1=")
                    .ok_or("expected B1=(...)")
                    .map_err(str::to_string)
                    .and_then(parse_list)?;
                let b2 = toks[2]
                    .strip_prefix("B2=")
                    .ok_or("expected B2=(...)")
                    .map_err(str::to_string)
                    .and_then(parse_list)?;
                let code = toks[3].strip_prefix("merge=").ok_or("expected merge=...")?;
                let mut merge: Vec<MergeStep> = Vec::new();
                for c in code.chars() {
                    match c {
                        '1' | '2' => merge.push(MergeStep {
                            second: c == '2',
                            drawn: true,
                        }),
                        '.' => match merge.last_mut() {
                            Some(s) if s.drawn => s.drawn = false,
                            _ => return Err("misplaced `.` in merge sequence".into()),
                        },
                        _ => return Err(format!("bad merge character `{c}`")),
                    }
                }
                Ok(SurgeryOp::Glue { b1, b2, merge })
            }
            Some(other) => Err(format!("unknown operation `{other}`")),
            None => Err("empty operation".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScriptStep {
    pub op: SurgeryOp,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SurgeryScript {
    pub steps: Vec<ScriptStep>,
}

impl SurgeryScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, op: SurgeryOp, note: Option<&str>) {
        self.steps.push(ScriptStep {
            op,
            note: note.map(str::to_string),
        });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn extend(&mut self, other: &SurgeryScript) {
        self.steps.extend(other.steps.iter().cloned());
    }

    pub fn shifted(&self, s: u32, m: u32) -> SurgeryScript {
        SurgeryScript {
            steps: self
                .steps
                .iter()
                .map(|st| ScriptStep {
                    op: st.op.shifted(s, m),
                    note: st.note.clone(),
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut steps = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let (body, note) = match raw.split_once('#') {
                Some((b, n)) => (b.trim(), Some(n.trim().to_string())),
                None => (raw.trim(), None),
            };
            if body.is_empty() {
                continue;
            }
            let op = body
                .parse::<SurgeryOp>()
                .map_err(|e| ParseError::new(lineno + 1, e))?;
            steps.push(ScriptStep { op, note });
        }
        Ok(SurgeryScript { steps })
    }
}

impl fmt::Display for SurgeryScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for st in &self.steps {
            write!(f, "{}", st.op)?;
            if let Some(n) = &st.note {
                write!(f, "  # {n}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for SurgeryScript {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SurgeryScript::parse(s)
    }
}

/// A rotation system with open boundaries left by excisions. Each boundary
/// is the walk of a face that has not yet been refilled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenEmbedding {
    pub rotation_system: RotationSystem,
    pub boundaries: Vec<Vec<Vertex>>,
}

impl OpenEmbedding {
    pub fn closed(rs: RotationSystem) -> Self {
        OpenEmbedding {
            rotation_system: rs,
            boundaries: Vec::new(),
        }
    }
}

/// What one operation changed.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct OpEffect {
    pub added: Vec<VertexPair>,
    pub removed: Vec<VertexPair>,
    pub removed_vertices: Vec<Vertex>,
}

fn pair(rs: &RotationSystem, a: usize, b: usize) -> VertexPair {
    VertexPair::new(rs.label(a).clone(), rs.label(b).clone())
}

fn insert_after(rot: &mut Vec<usize>, after: usize, items: &[usize]) {
    let p = rot.iter().position(|&x| x == after).expect("corner neighbor present");
    for (k, &it) in items.iter().enumerate() {
        rot.insert(p + 1 + k, it);
    }
}

fn remove_neighbor(rot: &mut Vec<usize>, x: usize) {
    if let Some(p) = rot.iter().position(|&y| y == x) {
        rot.remove(p);
    }
}

fn face_is_triangle_from(rs: &RotationSystem, a: usize, b: usize) -> Option<usize> {
    let c = rs.succ(b, a)?;
    (rs.succ(c, b)? == a && rs.succ(a, c)? == b).then_some(c)
}

/// Replaces edge `(a, b)` by the other diagonal of its two triangles.
/// Returns the new edge's endpoints.
pub fn flip_in_place(rs: &mut RotationSystem, a: usize, b: usize) -> Result<(usize, usize), SurgeryError> {
    let la = || rs.label(a).clone();
    let lb = || rs.label(b).clone();
    if !rs.has_edge(a, b) {
        return Err(EmbeddingError::MissingEdge(la(), lb()).into());
    }
    let c = face_is_triangle_from(rs, a, b).ok_or_else(|| SurgeryError::FlipNotTriangle(la(), lb(), "left"))?;
    let d = face_is_triangle_from(rs, b, a).ok_or_else(|| SurgeryError::FlipNotTriangle(la(), lb(), "right"))?;
    if c == d {
        return Err(SurgeryError::FlipSameApex(la(), lb(), rs.label(c).clone()));
    }
    if rs.has_edge(c, d) {
        return Err(SurgeryError::FlipDuplicate(
            la(),
            lb(),
            rs.label(c).clone(),
            rs.label(d).clone(),
        ));
    }
    if rs.degree(a) <= 2 || rs.degree(b) <= 2 {
        return Err(EmbeddingError::LowDegree(la(), rs.degree(a).min(rs.degree(b)) - 1).into());
    }
    let rots = rs.rotations_mut();
    remove_neighbor(&mut rots[a], b);
    remove_neighbor(&mut rots[b], a);
    insert_after(&mut rots[c], b, &[d]);
    insert_after(&mut rots[d], a, &[c]);
    Ok((c, d))
}

pub fn flip_edge(rs: &RotationSystem, a: &Vertex, b: &Vertex) -> Result<RotationSystem, SurgeryError> {
    let mut out = rs.clone();
    let (ia, ib) = (rs.require(a)?, rs.require(b)?);
    flip_in_place(&mut out, ia, ib)?;
    Ok(out)
}

/// Adds the edge `(u, v)` through the corner after `after_u` at `u` and the
/// corner after `after_v` at `v`, which must lie on one face.
pub fn chord_in_place(
    rs: &mut RotationSystem,
    u: usize,
    v: usize,
    after_u: usize,
    after_v: usize,
) -> Result<(), SurgeryError> {
    if u == v {
        return Err(EmbeddingError::Loop(rs.label(u).clone()).into());
    }
    if rs.has_edge(u, v) {
        return Err(SurgeryError::DuplicateEdge(rs.label(u).clone(), rs.label(v).clone()));
    }
    if !rs.has_edge(u, after_u) || !rs.has_edge(v, after_v) {
        return Err(SurgeryError::ChordFaces(rs.label(u).clone(), rs.label(v).clone()));
    }
    // walk the face through the corner at u and look for the corner at v
    let (mut a, mut b) = (after_u, u);
    let mut found = false;
    loop {
        if a == after_v && b == v {
            found = true;
            break;
        }
        let c = rs.succ(b, a).expect("valid rotation");
        a = b;
        b = c;
        if a == after_u && b == u {
            break;
        }
    }
    if !found {
        return Err(SurgeryError::ChordFaces(rs.label(u).clone(), rs.label(v).clone()));
    }
    let rots = rs.rotations_mut();
    insert_after(&mut rots[u], after_u, &[v]);
    insert_after(&mut rots[v], after_v, &[u]);
    Ok(())
}

/// Reorders the rotation at `v` from `[s0..s1)[s1..s2)[s2..s0)` to
/// `[s0..s1)[s2..s0)[s1..s2)`. The three corners before the starts must
/// lie on three different faces, which become one face.
pub fn twist_in_place(rs: &mut RotationSystem, v: usize, starts: [usize; 3]) -> Result<(), SurgeryError> {
    let lv = rs.label(v).clone();
    let r = rs.rotation(v).to_vec();
    let d = r.len();
    let mut pos = [0usize; 3];
    for (k, s) in starts.iter().enumerate() {
        pos[k] = r
            .iter()
            .position(|x| x == s)
            .ok_or_else(|| SurgeryError::BadTwist(lv.clone(), format!("{} is not a neighbor", rs.label(*s))))?;
    }
    let rel = |p: usize| (p + d - pos[0]) % d;
    if !(rel(pos[1]) > 0 && rel(pos[1]) < rel(pos[2])) {
        return Err(SurgeryError::BadTwist(lv, "starts must be distinct and in rotation order".into()));
    }
    let faces = trace_faces(rs)?;
    let mut ids = Vec::new();
    for &p in &pos {
        let before = r[(p + d - 1) % d];
        let id = faces
            .faces
            .iter()
            .position(|f| f.darts().any(|(x, y)| x == before && y == v))
            .expect("every dart lies on a face");
        ids.push(id);
    }
    if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
        return Err(SurgeryError::BadTwist(lv, "two corners lie on the same face".into()));
    }
    let seg = |from: usize, to: usize| -> Vec<usize> {
        let mut out = Vec::new();
        let mut p = from;
        while p != to {
            out.push(r[p]);
            p = (p + 1) % d;
        }
        out
    };
    let mut new_rot = seg(pos[0], pos[1]);
    new_rot.extend(seg(pos[2], pos[0]));
    new_rot.extend(seg(pos[1], pos[2]));
    rs.rotations_mut()[v] = new_rot;
    Ok(())
}

/// Locates a face given as a vertex walk and returns its darts.
fn locate_face(rs: &RotationSystem, walk: &[usize]) -> Option<Vec<(usize, usize)>> {
    let k = walk.len();
    if k < 3 {
        return None;
    }
    let mut darts = Vec::with_capacity(k);
    for i in 0..k {
        let (a, b, c) = (walk[i], walk[(i + 1) % k], walk[(i + 2) % k]);
        if !rs.has_edge(a, b) || rs.succ(b, a)? != c {
            return None;
        }
        darts.push((a, b));
    }
    Some(darts)
}

/// Removes the interior of a disk made of faces. Interior edges and vertices
/// are returned in the effect; the boundary becomes an open face.
pub fn excise_disk(
    open: &OpenEmbedding,
    faces: &[Vec<Vertex>],
) -> Result<(OpenEmbedding, OpEffect), SurgeryError> {
    let rs = &open.rotation_system;
    let mut region: HashSet<(usize, usize)> = HashSet::new();
    let mut face_darts = Vec::new();
    for f in faces {
        let idx: Vec<usize> = f.iter().map(|v| rs.require(v)).collect::<Result<_, _>>()?;
        let darts = locate_face(rs, &idx).ok_or_else(|| SurgeryError::NotAFace(format!("f({})", join(f))))?;
        for &d in &darts {
            if !region.insert(d) {
                return Err(SurgeryError::NotADisk(format!("face f({}) listed twice", join(f))));
            }
        }
        face_darts.push(darts);
    }
    for b in &open.boundaries {
        let idx: Vec<usize> = b.iter().map(|v| rs.require(v)).collect::<Result<_, _>>()?;
        let k = idx.len();
        for i in 0..k {
            if region.contains(&(idx[i], idx[(i + 1) % k])) {
                return Err(SurgeryError::NotADisk("an open boundary cannot be excised".into()));
            }
        }
    }
    // edge-connectivity of the chosen faces
    let n = face_darts.len();
    let mut comp: Vec<usize> = (0..n).collect();
    fn root(c: &mut Vec<usize>, x: usize) -> usize {
        let mut x = x;
        while c[x] != x {
            c[x] = c[c[x]];
            x = c[x];
        }
        x
    }
    let owner: std::collections::HashMap<(usize, usize), usize> = face_darts
        .iter()
        .enumerate()
        .flat_map(|(i, ds)| ds.iter().map(move |&d| (d, i)))
        .collect();
    let mut interior_edges = BTreeSet::new();
    for (&(a, b), &i) in &owner {
        if let Some(&j) = owner.get(&(b, a)) {
            let (ri, rj) = (root(&mut comp, i), root(&mut comp, j));
            comp[ri] = rj;
            interior_edges.insert((a.min(b), a.max(b)));
        }
    }
    let r0 = root(&mut comp, 0);
    if (0..n).any(|i| root(&mut comp, i) != r0) {
        return Err(SurgeryError::NotADisk("faces are not edge-connected".into()));
    }
    let boundary: Vec<(usize, usize)> = region.iter().copied().filter(|&(a, b)| !region.contains(&(b, a))).collect();
    if boundary.is_empty() {
        return Err(SurgeryError::NotADisk("the faces cover a closed surface".into()));
    }
    let mut next_of = std::collections::HashMap::new();
    for &(a, b) in &boundary {
        if next_of.insert(a, b).is_some() {
            return Err(SurgeryError::NotADisk(format!("boundary is pinched at {}", rs.label(a))));
        }
    }
    let start = boundary.iter().min().expect("nonempty").0;
    let mut cycle = vec![start];
    let mut x = next_of[&start];
    while x != start {
        cycle.push(x);
        x = *next_of.get(&x).ok_or_else(|| SurgeryError::NotADisk("boundary is not closed".into()))?;
        if cycle.len() > boundary.len() {
            return Err(SurgeryError::NotADisk("boundary is not a simple cycle".into()));
        }
    }
    if cycle.len() != boundary.len() {
        return Err(SurgeryError::NotADisk("boundary has several components".into()));
    }
    let boundary_vertices: BTreeSet<usize> = cycle.iter().copied().collect();
    let touched: BTreeSet<usize> = region.iter().map(|d| d.0).collect();
    let interior_vertices: Vec<usize> = touched.difference(&boundary_vertices).copied().collect();
    for &v in &interior_vertices {
        if rs.rotation(v).iter().any(|&u| !region.contains(&(u, v))) {
            return Err(SurgeryError::NotADisk(format!(
                "vertex {} is pinched against the boundary",
                rs.label(v)
            )));
        }
    }
    let euler = interior_vertices.len() as i64 - interior_edges.len() as i64 + n as i64;
    if euler != 1 {
        return Err(SurgeryError::NotADisk(format!("interior Euler count is {euler}, not 1")));
    }
    let mut effect = OpEffect::default();
    let mut rots = rs.rotations().to_vec();
    for &(a, b) in &interior_edges {
        effect.removed.push(pair(rs, a, b));
        remove_neighbor(&mut rots[a], b);
        remove_neighbor(&mut rots[b], a);
    }
    effect.removed.sort();
    let keep: Vec<usize> = (0..rs.vertex_count()).filter(|v| !interior_vertices.contains(v)).collect();
    let mut new_index = vec![usize::MAX; rs.vertex_count()];
    for (ni, &v) in keep.iter().enumerate() {
        new_index[v] = ni;
    }
    let labels: Vec<Vertex> = keep.iter().map(|&v| rs.label(v).clone()).collect();
    let new_rots: Vec<Vec<usize>> = keep
        .iter()
        .map(|&v| rots[v].iter().map(|&u| new_index[u]).collect())
        .collect();
    effect.removed_vertices = interior_vertices.iter().map(|&v| rs.label(v).clone()).collect();
    let new_rs = RotationSystem::from_indexed(labels, new_rots)?;
    let mut boundaries = open.boundaries.clone();
    boundaries.push(cycle.iter().map(|&v| rs.label(v).clone()).collect());
    Ok((
        OpenEmbedding {
            rotation_system: new_rs,
            boundaries,
        },
        effect,
    ))
}

fn rotation_match(walk: &[Vertex], target: &[Vertex]) -> bool {
    let n = walk.len();
    n == target.len() && (0..n).any(|s| (0..n).all(|i| walk[(i + s) % n] == target[i]))
}

/// Cross edges of a merge sequence as `(index in b1, index in b2)`, in
/// creation order starting from `(0, 0)`, with their drawn flags.
pub fn merge_cross_edges(p: usize, q: usize, merge: &[MergeStep]) -> Vec<(usize, usize, bool)> {
    let n = merge.len();
    let mut out = Vec::with_capacity(n);
    let (mut i, mut j) = (0usize, 0usize);
    let mut coords = vec![(0usize, 0usize)];
    for s in merge.iter().take(n.saturating_sub(1)) {
        if s.second {
            j = (j + q - 1) % q;
        } else {
            i = (i + 1) % p;
        }
        coords.push((i, j));
    }
    for (t, &(i, j)) in coords.iter().enumerate() {
        // edge t is created by step t, edge 0 by the final step
        let step = if t == 0 { n - 1 } else { t - 1 };
        out.push((i, j, merge[step].drawn));
    }
    out
}

/// Cross neighbors of each boundary vertex in creation order, starting at the
/// edge that arrives at it.
fn arrival_order(n: usize, members: &[usize]) -> Vec<usize> {
    let set: HashSet<usize> = members.iter().copied().collect();
    let start = members
        .iter()
        .copied()
        .find(|&t| !set.contains(&((t + n - 1) % n)))
        .unwrap_or(0);
    let mut out: Vec<usize> = members.to_vec();
    out.sort_by_key(|&t| (t + n - start) % n);
    out
}

/// Connects two open boundaries with a triangulated annulus described by a
/// merge sequence. `b1` is read along its boundary walk and `b2` against it.
pub fn glue_annulus(
    open: &OpenEmbedding,
    b1: &[Vertex],
    b2: &[Vertex],
    merge: &[MergeStep],
) -> Result<(OpenEmbedding, OpEffect), SurgeryError> {
    let rs = &open.rotation_system;
    let find = |b: &[Vertex]| {
        open.boundaries
            .iter()
            .position(|w| rotation_match(w, b))
            .ok_or_else(|| SurgeryError::UnknownBoundary(format!("({})", join(b))))
    };
    let (h1, h2) = (find(b1)?, find(b2)?);
    if h1 == h2 {
        return Err(SurgeryError::UnknownBoundary("B1 and B2 are the same boundary".into()));
    }
    for v in b1 {
        if b2.contains(v) {
            return Err(SurgeryError::BoundariesMeet(v.clone()));
        }
    }
    let (p, q) = (b1.len(), b2.len());
    let ones = merge.iter().filter(|s| !s.second).count();
    if ones != p || merge.len() != p + q {
        return Err(SurgeryError::BadMerge(p, q));
    }
    if !merge.iter().any(|s| s.drawn) {
        return Err(SurgeryError::UndrawnMerge);
    }
    let i1: Vec<usize> = b1.iter().map(|v| rs.require(v)).collect::<Result<_, _>>()?;
    let i2: Vec<usize> = b2.iter().map(|v| rs.require(v)).collect::<Result<_, _>>()?;
    let edges = merge_cross_edges(p, q, merge);
    let n = edges.len();
    let mut effect = OpEffect::default();
    let mut drawn_pairs = HashSet::new();
    for &(i, j, drawn) in &edges {
        if !drawn {
            continue;
        }
        let (a, b) = (i1[i], i2[j]);
        if rs.has_edge(a, b) || !drawn_pairs.insert((a, b)) {
            return Err(SurgeryError::DuplicateEdge(rs.label(a).clone(), rs.label(b).clone()));
        }
        effect.added.push(pair(rs, a, b));
    }
    let mut rots = rs.rotations().to_vec();
    for (i, &a) in i1.iter().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&t| edges[t].0 == i).collect();
        let order = arrival_order(n, &members);
        let items: Vec<usize> = order.iter().filter(|&&t| edges[t].2).map(|&t| i2[edges[t].1]).collect();
        insert_after(&mut rots[a], i1[(i + p - 1) % p], &items);
    }
    for (j, &b) in i2.iter().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&t| edges[t].1 == j).collect();
        let order = arrival_order(n, &members);
        let items: Vec<usize> = order.iter().rev().filter(|&&t| edges[t].2).map(|&t| i1[edges[t].0]).collect();
        insert_after(&mut rots[b], i2[(j + q - 1) % q], &items);
    }
    let new_rs = RotationSystem::from_indexed(rs.labels().to_vec(), rots)?;
    let mut boundaries = open.boundaries.clone();
    boundaries.remove(h1.max(h2));
    boundaries.remove(h1.min(h2));
    effect.added.sort();
    Ok((
        OpenEmbedding {
            rotation_system: new_rs,
            boundaries,
        },
        effect,
    ))
}

/// Contracts edge `(u, v)` into `u`.
pub fn contract_edge(rs: &RotationSystem, u: &Vertex, v: &Vertex) -> Result<(RotationSystem, OpEffect), SurgeryError> {
    let (iu, iv) = (rs.require(u)?, rs.require(v)?);
    if !rs.has_edge(iu, iv) {
        return Err(EmbeddingError::MissingEdge(u.clone(), v.clone()).into());
    }
    let apexes: BTreeSet<usize> = [face_is_triangle_from(rs, iu, iv), face_is_triangle_from(rs, iv, iu)]
        .into_iter()
        .flatten()
        .collect();
    for &w in rs.rotation(iu) {
        if w != iv && rs.has_edge(iv, w) && !apexes.contains(&w) {
            return Err(SurgeryError::ContractDuplicate(u.clone(), v.clone(), rs.label(w).clone()));
        }
    }
    let ru = rs.rotation(iu);
    let rv = rs.rotation(iv);
    let pu = rs.position(iu, iv).expect("adjacent");
    let pv = rs.position(iv, iu).expect("adjacent");
    let mut merged: Vec<usize> = Vec::new();
    for k in 1..ru.len() {
        merged.push(ru[(pu + k) % ru.len()]);
    }
    for k in 1..rv.len() {
        merged.push(rv[(pv + k) % rv.len()]);
    }
    let mut spliced: Vec<usize> = Vec::new();
    for x in merged {
        if spliced.last() != Some(&x) {
            spliced.push(x);
        }
    }
    while spliced.len() > 1 && spliced.first() == spliced.last() {
        spliced.pop();
    }
    let mut effect = OpEffect {
        removed: vec![pair(rs, iu, iv)],
        ..Default::default()
    };
    let mut rots = rs.rotations().to_vec();
    rots[iu] = spliced;
    for w in 0..rs.vertex_count() {
        if w == iu || w == iv {
            continue;
        }
        if let Some(p) = rots[w].iter().position(|&x| x == iv) {
            if rots[w].contains(&iu) {
                rots[w].remove(p);
                effect.removed.push(pair(rs, iv, w));
            } else {
                rots[w][p] = iu;
            }
        }
    }
    let keep: Vec<usize> = (0..rs.vertex_count()).filter(|&x| x != iv).collect();
    let mut new_index = vec![usize::MAX; rs.vertex_count()];
    for (ni, &x) in keep.iter().enumerate() {
        new_index[x] = ni;
    }
    let labels = keep.iter().map(|&x| rs.label(x).clone()).collect();
    let new_rots = keep
        .iter()
        .map(|&x| rots[x].iter().map(|&y| new_index[y]).collect())
        .collect();
    effect.removed_vertices.push(v.clone());
    effect.removed.sort();
    Ok((RotationSystem::from_indexed(labels, new_rots)?, effect))
}

/// Applies one operation, checking its local genus bookkeeping.
pub fn apply_op(open: &OpenEmbedding, op: &SurgeryOp) -> Result<(OpenEmbedding, OpEffect), SurgeryError> {
    let rs = &open.rotation_system;
    let before = stats_of(rs)?;
    let ix = |v: &Vertex| rs.require(v);
    let (out, effect, genus_delta, face_delta): (OpenEmbedding, OpEffect, i64, Option<i64>) = match op {
        SurgeryOp::Flip(a, b) => {
            let mut r = rs.clone();
            let (c, d) = flip_in_place(&mut r, ix(a)?, ix(b)?)?;
            let eff = OpEffect {
                added: vec![pair(rs, c, d)],
                removed: vec![VertexPair::new(a.clone(), b.clone())],
                removed_vertices: vec![],
            };
            (
                OpenEmbedding {
                    rotation_system: r,
                    boundaries: open.boundaries.clone(),
                },
                eff,
                0,
                Some(0),
            )
        }
        SurgeryOp::Chord { u, v, after_u, after_v } => {
            let mut r = rs.clone();
            chord_in_place(&mut r, ix(u)?, ix(v)?, ix(after_u)?, ix(after_v)?)?;
            let eff = OpEffect {
                added: vec![VertexPair::new(u.clone(), v.clone())],
                ..Default::default()
            };
            let boundaries = open.boundaries.clone();
            (
                OpenEmbedding {
                    rotation_system: r,
                    boundaries,
                },
                eff,
                0,
                Some(1),
            )
        }
        SurgeryOp::Twist { at, starts } => {
            let mut r = rs.clone();
            twist_in_place(&mut r, ix(at)?, [ix(&starts[0])?, ix(&starts[1])?, ix(&starts[2])?])?;
            (
                OpenEmbedding {
                    rotation_system: r,
                    boundaries: open.boundaries.clone(),
                },
                OpEffect::default(),
                1,
                Some(-2),
            )
        }
        SurgeryOp::Contract(u, v) => {
            if open.boundaries.iter().any(|b| b.contains(u) || b.contains(v)) {
                return Err(SurgeryError::Invariant("cannot contract an edge on an open boundary".into()));
            }
            let (r, eff) = contract_edge(rs, u, v)?;
            (
                OpenEmbedding {
                    rotation_system: r,
                    boundaries: open.boundaries.clone(),
                },
                eff,
                0,
                None,
            )
        }
        SurgeryOp::Excise(faces) => {
            let (o, eff) = excise_disk(open, faces)?;
            (o, eff, 0, None)
        }
        SurgeryOp::Glue { b1, b2, merge } => {
            let (o, eff) = glue_annulus(open, b1, b2, merge)?;
            (o, eff, 1, None)
        }
    };
    let after = stats_of(&out.rotation_system)?;
    if after.genus != before.genus + genus_delta {
        return Err(SurgeryError::Invariant(format!(
            "`{op}` moved genus from {} to {}",
            before.genus, after.genus
        )));
    }
    if let Some(df) = face_delta {
        if after.f_count as i64 != before.f_count as i64 + df {
            return Err(SurgeryError::Invariant(format!(
                "`{op}` changed the face count by {}",
                after.f_count as i64 - before.f_count as i64
            )));
        }
    }
    Ok((out, effect))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerEntry {
    pub index: usize,
    pub op: String,
    pub genus_before: i64,
    pub genus_after: i64,
    pub added: Vec<VertexPair>,
    pub removed: Vec<VertexPair>,
    /// Original edges re-added by this step.
    pub restored: Vec<VertexPair>,
    /// Original edges absent after this step.
    pub cost: Vec<VertexPair>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applied {
    pub result: OpenEmbedding,
    pub ledger: Vec<LedgerEntry>,
}

impl Applied {
    pub fn rotation_system(&self) -> &RotationSystem {
        &self.result.rotation_system
    }

    /// Original edges removed and never restored.
    pub fn outstanding_cost(&self) -> Vec<VertexPair> {
        self.ledger.last().map(|e| e.cost.clone()).unwrap_or_default()
    }

    /// Every original edge that was removed at some point.
    pub fn all_costs(&self) -> BTreeSet<VertexPair> {
        let mut out = BTreeSet::new();
        for e in &self.ledger {
            out.extend(e.cost.iter().cloned());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {index} (`{op}`): {source}")]
pub struct ScriptError {
    pub index: usize,
    pub op: String,
    pub source: SurgeryError,
}

/// Applies a script in order, recording genus changes and the cost ledger.
pub fn apply_script(rs: &RotationSystem, script: &SurgeryScript) -> Result<Applied, ScriptError> {
    let original = rs.edge_set();
    let mut open = OpenEmbedding::closed(rs.clone());
    let mut cost: BTreeSet<VertexPair> = BTreeSet::new();
    let mut ledger = Vec::new();
    for (index, st) in script.steps.iter().enumerate() {
        let wrap = |e: SurgeryError| ScriptError {
            index,
            op: st.op.to_string(),
            source: e,
        };
        let g0 = stats_of(&open.rotation_system).map_err(|e| wrap(e.into()))?.genus;
        let (next, eff) = apply_op(&open, &st.op).map_err(wrap)?;
        let g1 = stats_of(&next.rotation_system).map_err(|e| wrap(e.into()))?.genus;
        let mut restored = Vec::new();
        for p in &eff.removed {
            // edges at a contracted-away vertex survive on the vertex it merged into
            if original.contains(p) && !eff.removed_vertices.iter().any(|v| p.contains(v)) {
                cost.insert(p.clone());
            }
        }
        for p in &eff.added {
            if cost.remove(p) {
                restored.push(p.clone());
            }
        }
        ledger.push(LedgerEntry {
            index,
            op: st.op.to_string(),
            genus_before: g0,
            genus_after: g1,
            added: eff.added,
            removed: eff.removed,
            restored,
            cost: cost.iter().cloned().collect(),
        });
        open = next;
    }
    Ok(Applied { result: open, ledger })
}

/// Walk of the face containing the corner after `after` at `v`.
pub fn face_at_corner(rs: &RotationSystem, v: usize, after: usize) -> Face {
    let mut walk = Vec::new();
    let (mut a, mut b) = (after, v);
    loop {
        walk.push(b);
        let c = rs.succ(b, a).expect("valid rotation");
        a = b;
        b = c;
        if a == after && b == v {
            break;
        }
    }
    let n = walk.len();
    walk.rotate_right(1 % n.max(1));
    Face { walk }
}
