//! Property bodies shared by the property suites and the acceptance runner.

use std::collections::BTreeSet;

use genus_core::search::{search_completion, SearchSpec};
use genus_core::surgery::{
    apply_script, contract_edge, excise_disk, flip_edge, glue_annulus, merge_cross_edges, MergeStep, OpenEmbedding,
    SurgeryError, SurgeryOp, SurgeryScript,
};
use genus_core::verify::verify_rule_r_star;
use genus_core::{stats_of, trace_faces, RotationSystem, Vertex};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use super::*;

pub type Outcome = Result<(), TestCaseError>;

pub fn face_partition(rs: &RotationSystem) -> Outcome {
    let faces = trace_faces(rs).unwrap();
    let mut darts = BTreeSet::new();
    for f in &faces.faces {
        for d in f.darts() {
            prop_assert!(rs.has_edge(d.0, d.1));
            prop_assert!(darts.insert(d), "dart {:?} in two faces", d);
        }
    }
    prop_assert_eq!(darts.len(), 2 * rs.edge_count());
    let oracle = oracle_faces(rs);
    prop_assert_eq!(faces.len(), oracle.len());
    let mut a: Vec<usize> = faces.faces.iter().map(|f| f.len()).collect();
    let mut b: Vec<usize> = oracle.iter().map(Vec::len).collect();
    a.sort();
    b.sort();
    prop_assert_eq!(a, b);
    prop_assert_eq!(stats_of(rs).unwrap().genus, oracle_genus(rs));
    Ok(())
}

pub fn reversal_invariance(rs: &RotationSystem) -> Outcome {
    let r = rs.reversed();
    let (s, t) = (stats_of(rs).unwrap(), stats_of(&r).unwrap());
    prop_assert_eq!(s, t);
    let census = |x: &RotationSystem| trace_faces(x).unwrap().length_census();
    prop_assert_eq!(census(rs), census(&r));
    prop_assert_eq!(&r.reversed(), rs);
    Ok(())
}

/// Flips and contractions keep the genus; a flip keeps every face a
/// triangle; a contraction fails exactly when a common neighbor is not an
/// apex of the edge.
pub fn flip_contract_genus(rs: &RotationSystem, pick: u16) -> Outcome {
    let g = oracle_genus(rs);
    let edges = rs.edges();
    let (a, b) = edges[pick as usize % edges.len()];
    let (la, lb) = (rs.label(a), rs.label(b));
    let c = rs.succ(b, a).unwrap();
    let d = rs.succ(a, b).unwrap();
    match flip_edge(rs, la, lb) {
        Ok(f) => {
            prop_assert_eq!(oracle_genus(&f), g);
            prop_assert_eq!(f.edge_count(), rs.edge_count());
            prop_assert!(trace_faces(&f).unwrap().all_triangles());
            prop_assert!(f.has_edge(c, d) && !f.has_edge(a, b));
        }
        Err(e) => {
            prop_assert!(rs.has_edge(c, d) || c == d, "flip refused: {}", e);
        }
    }
    let bad = rs.rotation(a).iter().any(|&w| w != b && rs.has_edge(b, w) && w != c && w != d);
    match contract_edge(rs, la, lb) {
        Ok((k, _)) => {
            prop_assert!(!bad);
            prop_assert_eq!(oracle_genus(&k), g);
            prop_assert_eq!(k.vertex_count(), rs.vertex_count() - 1);
        }
        Err(SurgeryError::ContractDuplicate(..)) => prop_assert!(bad),
        Err(e) => {
            // contracting would leave a vertex of degree below 2
            prop_assert!(!bad, "unexpected error {}", e);
        }
    }
    Ok(())
}

/// Excising two disjoint triangles and gluing their boundaries adds one to
/// the genus.
pub fn excise_glue(rs: &RotationSystem, pick: (u16, u16), order: u8, drop: u8) -> Outcome {
    let faces = trace_faces(rs).unwrap().faces;
    let i = pick.0 as usize % faces.len();
    let fi = &faces[i];
    let others: Vec<_> = faces.iter().filter(|f| f.walk.iter().all(|v| !fi.contains(*v))).collect();
    prop_assume!(!others.is_empty());
    let fj = others[pick.1 as usize % others.len()];
    let lab = |f: &genus_core::faces::Face| -> Vec<Vertex> { f.labels(rs) };
    let open = OpenEmbedding::closed(rs.clone());
    let (open, _) = excise_disk(&open, &[lab(fi)]).unwrap();
    let (open, _) = excise_disk(&open, &[lab(fj)]).unwrap();
    let (b1, b2) = (open.boundaries[0].clone(), open.boundaries[1].clone());
    let shapes: Vec<u32> = (0u32..64).filter(|m| m.count_ones() == 3).collect();
    let shape = shapes[order as usize % shapes.len()];
    let mut merge: Vec<MergeStep> = (0..6).map(|k| MergeStep { second: shape >> k & 1 == 1, drawn: true }).collect();
    let ix = |v: &Vertex| open.rotation_system.index_of(v).unwrap();
    let mut seen = BTreeSet::new();
    for (t, (p, q, _)) in merge_cross_edges(3, 3, &merge).into_iter().enumerate() {
        let (u, w) = (ix(&b1[p]), ix(&b2[q]));
        let step = if t == 0 { 5 } else { t - 1 };
        merge[step].drawn = !open.rotation_system.has_edge(u, w) && seen.insert((u, w)) && drop >> t & 1 == 0;
    }
    prop_assume!(merge.iter().any(|s| s.drawn));
    let (g, eff) = glue_annulus(&open, &b1, &b2, &merge).unwrap();
    prop_assert!(g.boundaries.is_empty());
    prop_assert_eq!(oracle_genus(&g.rotation_system), oracle_genus(rs) + 1);
    prop_assert_eq!(g.rotation_system.edge_count(), rs.edge_count() + eff.added.len());
    Ok(())
}

pub fn r_star_iff_triangles(rs: &RotationSystem) -> Outcome {
    let tri = oracle_faces(rs).iter().all(|f| f.len() == 3);
    prop_assert_eq!(verify_rule_r_star(rs).passed, tri);
    Ok(())
}

/// Applying a shifted script to a shifted embedding equals shifting the
/// result.
pub fn shift_equivariance(rs: &RotationSystem, picks: &[u16], s: u32) -> Outcome {
    let m = rs.vertex_count() as u32;
    let script = random_flips(rs, picks);
    let direct = apply_script(rs, &script).unwrap();
    let moved = apply_script(&rs.shifted(s % m, m), &script.shifted(s % m, m)).unwrap();
    prop_assert_eq!(
        direct.rotation_system().shifted(s % m, m).canonical(),
        moved.rotation_system().canonical()
    );
    Ok(())
}

/// Plants a one-handle completion of K5 minus an edge and checks that the
/// exhaustive search finds that exact embedding.
pub fn planted_rediscovery(perm: [u32; 5], mirror: bool, hub: u8, skip: u8) -> Outcome {
    let base = k5_minus_edge(&perm, mirror);
    let (a, b) = (Vertex::Num(perm[0]), Vertex::Num(perm[4]));
    let hub = Vertex::Num(perm[1 + hub as usize % 3]);
    let h = base.index_of(&hub).unwrap();
    let rot: Vec<Vertex> = base.rotation(h).iter().map(|&u| base.label(u).clone()).collect();
    let skip = skip as usize % 4;
    let starts: Vec<Vertex> = (0..4).filter(|&k| k != skip).map(|k| rot[k].clone()).collect();
    let mut planted = SurgeryScript::new();
    planted.push(
        SurgeryOp::Twist {
            at: hub.clone(),
            starts: [starts[0].clone(), starts[1].clone(), starts[2].clone()],
        },
        None,
    );
    let twisted = apply_script(&base, &planted).unwrap().rotation_system().clone();
    let (ia, ib) = (twisted.index_of(&a).unwrap(), twisted.index_of(&b).unwrap());
    let face = oracle_faces(&twisted).into_iter().find(|f| f.len() == 9).unwrap();
    let walk: Vec<usize> = face.iter().map(|d| d.0).collect();
    let before = |v: usize| walk[(walk.iter().position(|&x| x == v).unwrap() + 8) % 9];
    planted.push(
        SurgeryOp::Chord {
            u: a.clone(),
            v: b.clone(),
            after_u: twisted.label(before(ia)).clone(),
            after_v: twisted.label(before(ib)).clone(),
        },
        None,
    );
    let fin = apply_script(&base, &planted).unwrap().rotation_system().clone();
    prop_assert_eq!(fin.edge_count(), 10);
    prop_assert_eq!(oracle_genus(&fin), 1);
    let spec = SearchSpec {
        target_n: 5,
        anchors: vec![hub],
        handle_count: 1,
        max_flips_per_handle: 0,
        exhaustive: true,
        ..SearchSpec::default()
    };
    let found = search_completion(&base, &spec).unwrap();
    let finals: Vec<RotationSystem> = found.results().iter().map(|r| r.final_rotation.canonical()).collect();
    prop_assert!(finals.contains(&fin.canonical()), "planted completion not rediscovered");
    Ok(())
}

pub fn arb_perm5() -> impl Strategy<Value = [u32; 5]> {
    Just(vec![0u32, 1, 2, 3, 4])
        .prop_shuffle()
        .prop_map(|v| [v[0], v[1], v[2], v[3], v[4]])
}

/// Larger spheres, so that disjoint faces exist.
pub fn arb_big_sphere() -> impl Strategy<Value = RotationSystem> {
    (
        proptest::collection::vec((Just(true), any::<u16>()), 6..12),
        proptest::collection::vec((Just(false), any::<u16>()), 0..12),
    )
        .prop_map(|(ins, flips)| grow(grow(tetra(), &ins), &flips))
}

fn s<T: std::fmt::Debug>(e: proptest::test_runner::TestError<T>) -> String {
    e.to_string()
}

/// Runs every suite with `cases` instances, reporting each by name.
pub fn run_all(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    let cfg = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let run = |name: &'static str, f: &dyn Fn(&mut TestRunner) -> Result<(), String>| {
        let mut runner = TestRunner::new(cfg.clone());
        (name, f(&mut runner))
    };
    vec![
        run("face partition", &|r| r.run(&arb_rotation(), |x| face_partition(&x)).map_err(s)),
        run("reversal invariance", &|r| r.run(&arb_rotation(), |x| reversal_invariance(&x)).map_err(s)),
        run("flip/contract genus", &|r| {
            r.run(&(arb_triangulation(), any::<u16>()), |(x, p)| flip_contract_genus(&x, p))
                .map_err(s)
        }),
        run("excise+excise+glue adds a handle", &|r| {
            r.run(
                &(arb_big_sphere(), any::<(u16, u16)>(), any::<u8>(), any::<u8>()),
                |(x, p, o, d)| excise_glue(&x, p, o, d),
            )
            .map_err(s)
        }),
        run("R* iff triangles", &|r| {
            r.run(&prop_oneof![arb_rotation(), arb_triangulation()], |x| r_star_iff_triangles(&x))
                .map_err(s)
        }),
        run("shift-equivariance", &|r| {
            r.run(
                &(arb_sphere_triangulation(), proptest::collection::vec(any::<u16>(), 0..8), any::<u32>()),
                |(x, p, k)| shift_equivariance(&x, &p, k),
            )
            .map_err(s)
        }),
        run("planted script rediscovery", &|r| {
            r.run(
                &(arb_perm5(), any::<bool>(), any::<u8>(), any::<u8>()),
                |(p, m, h, k)| planted_rediscovery(p, m, h, k),
            )
            .map_err(s)
        }),
    ]
}
