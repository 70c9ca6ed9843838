mod common;

use std::collections::BTreeSet;
use std::fs;

use common::*;
use genus_core::casebook::{case_spec, run_case, CaseName, Completion};
use genus_core::search::{search_completion, SearchOutcome, SearchResult, SearchSpec};
use genus_core::surgery::{apply_script, SurgeryOp};
use genus_core::{Vertex, VertexPair};

fn pairs(s: &str) -> BTreeSet<VertexPair> {
    genus_core::vertex::parse_pairs(s).unwrap().into_iter().collect()
}

fn found(name: CaseName) -> SearchResult {
    let c = case_spec(name).unwrap();
    let rs = derived(match name {
        CaseName::K18 => K18_LOGS,
        CaseName::K20 => K20_LOGS,
        CaseName::K23 => K23_LOGS,
    });
    match search_completion(&rs, &c.search).unwrap() {
        SearchOutcome::Found(mut r) => r.remove(0),
        other => panic!("{name}: {other:?}"),
    }
}

#[test]
fn stored_scripts_replay_to_genus_embeddings() {
    for (name, genus) in [(CaseName::K18, 18), (CaseName::K20, 23), (CaseName::K23, 32)] {
        let run = run_case(&case_spec(name).unwrap(), Completion::Replay, None).unwrap();
        assert!(run.report.passed, "{}", run.report);
        let fin = run.final_rotation.unwrap();
        assert_eq!(oracle_genus(&fin), genus);
        let n = fin.vertex_count();
        assert_eq!(fin.edge_count(), n * (n - 1) / 2);
    }
}

#[test]
fn running_a_case_twice_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let spec = case_spec(CaseName::K23).unwrap();
    let a = run_case(&spec, Completion::Replay, Some(dir.path())).unwrap();
    let snap: Vec<(std::path::PathBuf, Vec<u8>, std::time::SystemTime)> = a
        .written
        .iter()
        .map(|p| (p.clone(), fs::read(p).unwrap(), fs::metadata(p).unwrap().modified().unwrap()))
        .collect();
    assert_eq!(snap.len(), 5);
    let b = run_case(&spec, Completion::Replay, Some(dir.path())).unwrap();
    assert_eq!(a.written, b.written);
    for (p, bytes, t) in snap {
        assert_eq!(fs::read(&p).unwrap(), bytes);
        assert_eq!(fs::metadata(&p).unwrap().modified().unwrap(), t, "{} rewritten", p.display());
    }
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("k23/report.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], serde_json::Value::Bool(true));
}

#[test]
fn searched_scripts_match_the_stored_ones() {
    for name in CaseName::ALL {
        let c = case_spec(name).unwrap();
        let r = found(name);
        let mut s = r.script.clone();
        for op in &c.post_ops {
            if s.steps.last().map(|x| &x.op) != Some(op) {
                s.push(op.clone(), Some("post"));
            }
        }
        assert_eq!(s.to_string(), c.stored_script.unwrap().to_string(), "{name}");
    }
}

#[test]
fn k18_second_handle_is_the_first_shifted_by_eight() {
    let r = found(CaseName::K18);
    assert_eq!(r.handles.len(), 2);
    assert_eq!(r.final_stats.genus, 18);
    let h1 = &r.handles[0];
    let added: BTreeSet<VertexPair> = h1.added.iter().cloned().collect();
    let want = pairs("(1,10) (3,12) (5,14) (7,16) (8,17)");
    assert!(want.is_subset(&added), "{added:?}");
    let missing: BTreeSet<VertexPair> = (0..9).map(|i| VertexPair::new(Vertex::Num(i), Vertex::Num(i + 9))).collect();
    assert_eq!(added.intersection(&missing).cloned().collect::<BTreeSet<_>>(), want);
    assert!(h1.cost.is_empty());
    // (8,17) is the one target reached by a flip
    let chords: BTreeSet<VertexPair> = r
        .script
        .steps
        .iter()
        .filter_map(|s| match &s.op {
            SurgeryOp::Chord { u, v, .. } => Some(VertexPair::new(u.clone(), v.clone())),
            _ => None,
        })
        .collect();
    assert!(!chords.contains(&VertexPair::new(Vertex::Num(8), Vertex::Num(17))));
    let first: Vec<SurgeryOp> = r
        .script
        .steps
        .iter()
        .filter(|s| s.note.as_deref().is_some_and(|n| n.starts_with("handle 1:") && !n.contains("repair")))
        .map(|s| s.op.shifted(8, 18))
        .collect();
    let second: Vec<SurgeryOp> = r
        .script
        .steps
        .iter()
        .filter(|s| s.note.as_deref().is_some_and(|n| n.starts_with("handle 2:")))
        .map(|s| s.op.clone())
        .collect();
    assert_eq!(first, second);
}

#[test]
fn k18_is_not_found_at_default_bounds() {
    let c = case_spec(CaseName::K18).unwrap();
    let narrow = SearchSpec {
        flip_targets: BTreeSet::new(),
        max_repair_moves: SearchSpec::default().max_repair_moves,
        ..c.search.clone()
    };
    let out = search_completion(&derived(K18_LOGS), &narrow).unwrap();
    assert!(!out.is_found());
}

#[test]
fn k20_needs_one_handle_and_the_contraction() {
    let r = found(CaseName::K20);
    assert_eq!(r.handles.len(), 1);
    assert_eq!(r.final_stats.genus, 23);
    assert_eq!(r.final_rotation.vertex_count(), 20);
    assert_eq!(
        r.script.steps.last().unwrap().op,
        SurgeryOp::Contract(Vertex::letter("y0"), Vertex::letter("y1"))
    );
}

#[test]
fn k23_first_handle_costs_four_edges_at_zero_and_the_second_restores_them() {
    let r = found(CaseName::K23);
    assert_eq!(r.handles.len(), 2);
    assert_eq!(r.final_stats.genus, 32);
    let (h1, h2) = (&r.handles[0], &r.handles[1]);
    assert_eq!(h1.anchor, Vertex::Num(0));
    assert_eq!(h2.anchor, Vertex::Num(11));
    assert_eq!(h1.cost.len(), 4);
    assert!(h1.cost.iter().all(|p| p.contains(&Vertex::Num(0))));
    let restored: BTreeSet<&VertexPair> = h2.restored.iter().collect();
    assert!(h1.cost.iter().all(|p| restored.contains(p)));
    assert!(h2.cost.is_empty());
    let applied = apply_script(&derived(K23_LOGS), &r.script).unwrap();
    assert_eq!(applied.all_costs(), h1.cost.iter().cloned().collect());
    assert!(applied.outstanding_cost().is_empty());
}
