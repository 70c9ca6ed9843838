use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::EmbeddingError;
use crate::rotation::RotationSystem;
use crate::vertex::Vertex;

/// One face as the cyclic list of vertices met along its boundary walk. The
/// directed edges are `(walk[i], walk[i + 1])`, wrapping at the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub walk: Vec<usize>,
}

impl Face {
    pub fn len(&self) -> usize {
        self.walk.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walk.is_empty()
    }

    pub fn darts(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.walk.len();
        (0..n).map(move |i| (self.walk[i], self.walk[(i + 1) % n]))
    }

    pub fn contains(&self, v: usize) -> bool {
        self.walk.contains(&v)
    }

    pub fn labels(&self, rot: &RotationSystem) -> Vec<Vertex> {
        self.walk.iter().map(|&v| rot.label(v).clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceSet {
    pub faces: Vec<Face>,
}

impl FaceSet {
    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn all_triangles(&self) -> bool {
        self.faces.iter().all(|f| f.len() == 3)
    }

    /// Face length -> number of faces of that length.
    pub fn length_census(&self) -> BTreeMap<usize, usize> {
        let mut census = BTreeMap::new();
        for f in &self.faces {
            *census.entry(f.len()).or_insert(0) += 1;
        }
        census
    }

    pub fn total_length(&self) -> usize {
        self.faces.iter().map(Face::len).sum()
    }
}

/// Dense lookup from a directed edge to the position of its tail in the
/// head's rotation.
pub(crate) struct PositionTable {
    n: usize,
    pos: Vec<u32>,
}

impl PositionTable {
    pub(crate) fn new(rot: &RotationSystem) -> Self {
        let n = rot.vertex_count();
        let mut pos = vec![u32::MAX; n * n];
        for (v, r) in rot.rotations().iter().enumerate() {
            for (p, &u) in r.iter().enumerate() {
                pos[v * n + u] = p as u32;
            }
        }
        PositionTable { n, pos }
    }

    pub(crate) fn get(&self, v: usize, u: usize) -> Option<usize> {
        match self.pos[v * self.n + u] {
            u32::MAX => None,
            p => Some(p as usize),
        }
    }
}

/// Traces every face with the successor rule.
pub fn trace_faces(rot: &RotationSystem) -> Result<FaceSet, EmbeddingError> {
    let n = rot.vertex_count();
    let table = PositionTable::new(rot);
    let mut offset = Vec::with_capacity(n + 1);
    offset.push(0usize);
    for v in 0..n {
        offset.push(offset[v] + rot.degree(v));
    }
    let mut used = vec![false; offset[n]];
    let mut faces = Vec::new();
    for u in 0..n {
        for (p, &v) in rot.rotation(u).iter().enumerate() {
            if used[offset[u] + p] {
                continue;
            }
            let mut walk = Vec::new();
            let (mut a, mut b, mut pa) = (u, v, p);
            loop {
                used[offset[a] + pa] = true;
                walk.push(a);
                let back = table
                    .get(b, a)
                    .ok_or_else(|| EmbeddingError::Asymmetric(rot.label(a).clone(), rot.label(b).clone()))?;
                let rb = rot.rotation(b);
                let next_pos = (back + 1) % rb.len();
                let c = rb[next_pos];
                a = b;
                b = c;
                pa = next_pos;
                if used[offset[a] + pa] {
                    break;
                }
            }
            faces.push(Face { walk });
        }
    }
    Ok(FaceSet { faces })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SurfaceStats {
    pub v_count: usize,
    pub e_count: usize,
    pub f_count: usize,
    pub euler_characteristic: i64,
    pub genus: i64,
}

pub fn surface_stats(rot: &RotationSystem, faces: &FaceSet) -> Result<SurfaceStats, EmbeddingError> {
    let v = rot.vertex_count();
    let e = rot.edge_count();
    let f = faces.len();
    let chi = v as i64 - e as i64 + f as i64;
    if chi % 2 != 0 {
        return Err(EmbeddingError::OddEulerCharacteristic(chi));
    }
    Ok(SurfaceStats {
        v_count: v,
        e_count: e,
        f_count: f,
        euler_characteristic: chi,
        genus: (2 - chi) / 2,
    })
}

/// Traces and counts in one step.
pub fn stats_of(rot: &RotationSystem) -> Result<SurfaceStats, EmbeddingError> {
    surface_stats(rot, &trace_faces(rot)?)
}

/// Genus of a triangular embedding with the given counts.
pub fn triangular_genus(v_count: i64, e_count: i64) -> Result<i64, EmbeddingError> {
    let x = e_count - 3 * v_count + 6;
    if x < 0 || x % 6 != 0 {
        return Err(EmbeddingError::NotTriangular(x));
    }
    Ok(x / 6)
}

/// The genus of the complete graph on `n` vertices.
pub fn genus_target(n: i64) -> Result<i64, EmbeddingError> {
    if n < 3 {
        return Err(EmbeddingError::Domain(n));
    }
    let p = (n - 3) * (n - 4);
    Ok((p + 11).div_euclid(12))
}
