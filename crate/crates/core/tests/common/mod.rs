#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use genus_core::derivation::{derive_embedding, LogBundle};
use genus_core::surgery::{flip_edge, SurgeryOp, SurgeryScript};
use genus_core::{RotationSystem, Vertex};
use proptest::prelude::*;

pub mod props;

pub const K18_LOGS: &str = include_str!("../../../../data/k18.logs");
pub const K20_LOGS: &str = include_str!("../../../../data/k20.logs");
pub const K23_LOGS: &str = include_str!("../../../../data/k23.logs");

pub fn derived(logs: &str) -> RotationSystem {
    let b: LogBundle = logs.parse().unwrap();
    derive_embedding(&b).unwrap().rotation_system
}

/// Faces traced from scratch: each face is its list of darts.
pub fn oracle_faces(rs: &RotationSystem) -> Vec<Vec<(usize, usize)>> {
    let mut next: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for b in 0..rs.vertex_count() {
        let r = rs.rotation(b);
        for (i, &a) in r.iter().enumerate() {
            next.insert((a, b), (b, r[(i + 1) % r.len()]));
        }
    }
    let mut seen = HashSet::new();
    let mut faces = Vec::new();
    let mut darts: Vec<(usize, usize)> = next.keys().copied().collect();
    darts.sort();
    for d in darts {
        if seen.contains(&d) {
            continue;
        }
        let mut face = Vec::new();
        let mut x = d;
        while seen.insert(x) {
            face.push(x);
            x = next[&x];
        }
        faces.push(face);
    }
    faces
}

pub fn oracle_genus(rs: &RotationSystem) -> i64 {
    let v = rs.vertex_count() as i64;
    let e = rs.edge_count() as i64;
    let f = oracle_faces(rs).len() as i64;
    (2 - (v - e + f)) / 2
}

fn build(n: usize, adj: &[BTreeSet<usize>], keys: &[u32]) -> RotationSystem {
    let labels: Vec<Vertex> = (0..n as u32).map(Vertex::Num).collect();
    let rots = (0..n)
        .map(|v| {
            let mut r: Vec<usize> = adj[v].iter().copied().collect();
            r.sort_by_key(|&u| (keys[(v * 31 + u) % keys.len()], u));
            r
        })
        .collect();
    RotationSystem::from_indexed(labels, rots).unwrap()
}

/// A connected graph on 4..=9 vertices containing a Hamiltonian cycle, with
/// arbitrary rotations.
pub fn arb_rotation() -> impl Strategy<Value = RotationSystem> {
    (4usize..=9)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(any::<bool>(), n * (n - 1) / 2),
                proptest::collection::vec(any::<u32>(), 64),
            )
        })
        .prop_map(|(n, mask, keys)| {
            let mut adj = vec![BTreeSet::new(); n];
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if mask[k] || v == u + 1 || (u == 0 && v == n - 1) {
                        adj[u].insert(v);
                        adj[v].insert(u);
                    }
                    k += 1;
                }
            }
            build(n, &adj, &keys)
        })
}

/// Inserts a new vertex into the face entered by dart `(x, y)`.
pub fn stellar(rs: &RotationSystem, x: usize, y: usize) -> Option<RotationSystem> {
    let z = rs.succ(y, x)?;
    if rs.succ(z, y)? != x {
        return None;
    }
    let w = rs.vertex_count();
    let mut rots: Vec<Vec<usize>> = rs.rotations().to_vec();
    for (at, after) in [(y, x), (z, y), (x, z)] {
        let p = rots[at].iter().position(|&u| u == after)?;
        rots[at].insert(p + 1, w);
    }
    rots.push(vec![y, x, z]);
    let mut labels = rs.labels().to_vec();
    labels.push(Vertex::Num(w as u32));
    RotationSystem::from_indexed(labels, rots).ok()
}

pub fn tetra() -> RotationSystem {
    "0. 1 2 3\n1. 0 3 2\n2. 0 1 3\n3. 0 2 1\n".parse().unwrap()
}

/// A triangulation grown from `base` by stellar insertions and flips driven
/// by `moves`.
pub fn grow(base: RotationSystem, moves: &[(bool, u16)]) -> RotationSystem {
    let mut rs = base;
    for &(insert, pick) in moves {
        let edges = rs.edges();
        let (a, b) = edges[pick as usize % edges.len()];
        if insert {
            if let Some(next) = stellar(&rs, a, b) {
                rs = next;
            }
        } else if let Ok(next) = flip_edge(&rs, rs.label(a), rs.label(b)) {
            rs = next;
        }
    }
    rs
}

/// Triangulated spheres on 4 to about 16 vertices, numbered from 0.
pub fn arb_sphere_triangulation() -> impl Strategy<Value = RotationSystem> {
    proptest::collection::vec((any::<bool>(), any::<u16>()), 0..24).prop_map(|m| grow(tetra(), &m))
}

/// Triangulations of spheres or of the K18 surface.
pub fn arb_triangulation() -> impl Strategy<Value = RotationSystem> {
    prop_oneof![
        3 => arb_sphere_triangulation(),
        1 => proptest::collection::vec((Just(false), any::<u16>()), 0..12)
            .prop_map(|m| grow(derived(K18_LOGS), &m)),
    ]
}

/// Legal flips picked by `picks`, as a script.
pub fn random_flips(rs: &RotationSystem, picks: &[u16]) -> SurgeryScript {
    let mut cur = rs.clone();
    let mut s = SurgeryScript::new();
    for &p in picks {
        let edges = cur.edges();
        let (a, b) = edges[p as usize % edges.len()];
        let (la, lb) = (cur.label(a).clone(), cur.label(b).clone());
        if let Ok(next) = flip_edge(&cur, &la, &lb) {
            cur = next;
            s.push(SurgeryOp::Flip(la, lb), None);
        }
    }
    s
}

/// Relabels numbered vertex `i` as `perm[i]`.
pub fn relabel(rs: &RotationSystem, perm: &[u32]) -> RotationSystem {
    let labels = rs
        .labels()
        .iter()
        .map(|v| Vertex::Num(perm[v.as_num().unwrap() as usize]))
        .collect();
    RotationSystem::from_indexed(labels, rs.rotations().to_vec()).unwrap()
}

/// The planar embedding of K5 minus the edge `(perm[0], perm[4])`: a
/// tetrahedron with a fifth vertex in the face opposite vertex 0.
pub fn k5_minus_edge(perm: &[u32; 5], mirror: bool) -> RotationSystem {
    let t = tetra();
    let (x, y) = [(1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)]
        .into_iter()
        .find(|&(x, y)| t.succ(y, x) != Some(0) && t.succ(y, x).is_some())
        .unwrap();
    let rs = relabel(&stellar(&t, x, y).unwrap(), perm);
    if mirror {
        rs.reversed()
    } else {
        rs
    }
}
