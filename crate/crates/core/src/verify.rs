use std::collections::BTreeSet;

use crate::faces::{stats_of, trace_faces};
use crate::report::VerificationReport;
use crate::rotation::RotationSystem;
use crate::vertex::VertexPair;

fn show(pairs: &BTreeSet<VertexPair>) -> Vec<String> {
    pairs.iter().map(|p| p.to_string()).collect()
}

/// Non-adjacent vertex pairs of the underlying graph.
pub fn missing_pairs(rot: &RotationSystem) -> BTreeSet<VertexPair> {
    let n = rot.vertex_count();
    let mut out = BTreeSet::new();
    for u in 0..n {
        for v in u + 1..n {
            if !rot.has_edge(u, v) {
                out.insert(VertexPair::new(rot.label(u).clone(), rot.label(v).clone()));
            }
        }
    }
    out
}

/// Checks that the graph is complete on its `n` vertices apart from exactly
/// `expected_missing`.
pub fn verify_graph_structure(
    rot: &RotationSystem,
    n: usize,
    expected_missing: &BTreeSet<VertexPair>,
) -> VerificationReport {
    let mut report = VerificationReport::new("graph structure");
    report.check(
        "vertex count",
        rot.vertex_count() == n,
        format!("{} vertices, expected {n}", rot.vertex_count()),
    );
    let actual = missing_pairs(rot);
    let unexpected: BTreeSet<_> = actual.difference(expected_missing).cloned().collect();
    let present: BTreeSet<_> = expected_missing.difference(&actual).cloned().collect();
    if unexpected.is_empty() {
        report.check(
            "no unexpected non-edges",
            true,
            format!("{} pairs missing", actual.len()),
        );
    } else {
        report.fail_with(
            "no unexpected non-edges",
            format!("{} pairs missing that should be edges", unexpected.len()),
            show(&unexpected),
        );
    }
    if present.is_empty() {
        report.check("expected non-edges absent", true, "");
    } else {
        report.fail_with(
            "expected non-edges absent",
            format!("{} expected non-edges are present", present.len()),
            show(&present),
        );
    }
    if let Ok(s) = stats_of(rot) {
        report = report.with_stats(s);
    }
    report
}

/// Rule R*: whenever `rotation(i)` contains consecutive `j k l`, the rotation
/// at `k` contains consecutive `l i j`.
pub fn verify_rule_r_star(rot: &RotationSystem) -> VerificationReport {
    let mut report = VerificationReport::new("rule R*");
    let mut bad = 0usize;
    let mut first: Option<Vec<String>> = None;
    for i in 0..rot.vertex_count() {
        let r = rot.rotation(i);
        let d = r.len();
        for p in 0..d {
            let (j, k, l) = (r[(p + d - 1) % d], r[p], r[(p + 1) % d]);
            let ok = rot.pred(k, i) == Some(l) && rot.succ(k, i) == Some(j);
            if !ok {
                bad += 1;
                if first.is_none() {
                    let name = |x: usize| rot.label(x).to_string();
                    first = Some(vec![
                        format!("edge ({},{})", name(i), name(k)),
                        format!("rotation({}) has {} {} {}", name(i), name(j), name(k), name(l)),
                        format!(
                            "rotation({}) lacks {} {} {}",
                            name(k),
                            name(l),
                            name(i),
                            name(j)
                        ),
                    ]);
                }
            }
        }
    }
    match first {
        None => {
            report.check("all directed edges", true, format!("{} checked", 2 * rot.edge_count()));
        }
        Some(w) => {
            report.fail_with("all directed edges", format!("{bad} directed edges violate the rule"), w);
        }
    }
    if let Ok(s) = stats_of(rot) {
        report = report.with_stats(s);
    }
    report
}

/// Validity, face census and genus of a rotation system, optionally checking
/// that it is a genus embedding of `K_n`.
pub fn verify_embedding(rot: &RotationSystem, complete: Option<usize>) -> VerificationReport {
    let mut report = VerificationReport::new("embedding");
    match rot.validate() {
        Ok(()) => report.check("rotation system valid", true, ""),
        Err(e) => report.fail_with("rotation system valid", e.to_string(), vec![]),
    };
    let faces = match trace_faces(rot) {
        Ok(f) => f,
        Err(e) => {
            report.fail_with("face trace", e.to_string(), vec![]);
            return report;
        }
    };
    let census: Vec<String> = faces
        .length_census()
        .iter()
        .map(|(len, count)| format!("{count}x{len}"))
        .collect();
    report.check("face census", true, census.join(" "));
    match crate::faces::surface_stats(rot, &faces) {
        Ok(s) => report = report.with_stats(s),
        Err(e) => {
            report.fail_with("euler characteristic", e.to_string(), vec![]);
        }
    }
    if let Some(n) = complete {
        report.section(crate::search::verify_completion(rot, n));
    }
    report
}
