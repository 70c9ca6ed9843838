use genus_core::casebook::{case_files, case_spec, CaseName};
use genus_core::current_graph::{check_log_bundle, LogEntry};
use genus_core::derivation::LogBundle;
use genus_core::search::SearchSpec;
use genus_core::surgery::SurgeryScript;
use sha2::{Digest, Sha256};

const FROZEN: [(&str, &str); 9] = [
    ("k18.logs", "e74debb7d8a22779447120fa368869e219e7b9fbd2179ed0b9da895661f692ee"),
    ("k18.search.toml", "27cc9d33a64afe9079586df227df7ec3435a4abdaad314598f97b879a592f101"),
    ("k18.script", "ffc008b454d85bfc513364635d7ae057f29944dcbd24baf8eabf70b45dc9cf07"),
    ("k20.logs", "7094a5c0830692cc7c51fa89c230d4899cc2cf4bb18e3a0f6f8a8c5e3c189f83"),
    ("k20.search.toml", "9a766bf95374b07c98c9e79e1c1d6bc074db65ea18b6c4215f679a2860b713a6"),
    ("k20.script", "657d11a5ac034327dc1d791843564599c73e6795409d848e869faf96e1d10f92"),
    ("k23.logs", "03467650482e50650e0815effc2aaf4bcd0e62430726513fd233c3d9fb06adfe"),
    ("k23.search.toml", "4ec516399f50fd09a47875de4da117029921a5a52ac187991a2d03da6e1ede99"),
    ("k23.script", "27af6cbacfde53f76a10872661074f0b6fe3662f29db33c92d8a58793aae8e92"),
];

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn shipped_data_matches_frozen_checksums() {
    let files: Vec<(&str, &str)> = CaseName::ALL.iter().flat_map(|&n| case_files(n)).collect();
    assert_eq!(files.len(), FROZEN.len());
    for ((name, text), (fname, sum)) in files.iter().zip(FROZEN) {
        assert_eq!(*name, fname);
        assert_eq!(hex(&Sha256::digest(text.as_bytes())), sum, "{name} changed");
    }
}

#[test]
fn logs_and_scripts_round_trip_byte_exactly() {
    for name in CaseName::ALL {
        let [(lf, logs), _, (pf, script)] = case_files(name);
        let b: LogBundle = logs.parse().unwrap();
        assert_eq!(b.to_string(), logs, "{lf}");
        let s: SurgeryScript = script.parse().unwrap();
        assert_eq!(s.to_string(), script, "{pf}");
    }
}

#[test]
fn search_specs_survive_printing() {
    for name in CaseName::ALL {
        let [_, (sf, text), _] = case_files(name);
        let spec: SearchSpec = text.parse().unwrap();
        let again: SearchSpec = spec.to_string().parse().unwrap();
        assert_eq!(again, spec, "{sf}");
    }
}

#[test]
fn shipped_bundles_pass_the_census() {
    for name in CaseName::ALL {
        let b = case_spec(name).unwrap().bundle;
        let r = check_log_bundle(&b.logs, b.m, b.k, &b.letter_set());
        assert!(r.passed, "{name}: {r}");
    }
}

fn census_witness(b: &LogBundle) -> Vec<String> {
    let r = check_log_bundle(&b.logs, b.m, b.k, &b.letter_set());
    assert!(!r.passed);
    r.failures().iter().flat_map(|c| c.witness.clone()).collect()
}

#[test]
fn deleting_an_entry_is_reported_missing() {
    for name in CaseName::ALL {
        let mut b = case_spec(name).unwrap().bundle;
        let gone = b.logs[0].entries.remove(2);
        assert_eq!(census_witness(&b), vec![format!("missing {gone}")], "{name}");
    }
}

#[test]
fn duplicating_an_entry_is_reported_repeated() {
    for name in CaseName::ALL {
        let mut b = case_spec(name).unwrap().bundle;
        let e = b.logs[0].entries[3].clone();
        b.logs[0].entries.insert(0, e.clone());
        assert_eq!(census_witness(&b), vec![format!("repeated {e} x2")], "{name}");
    }
}

#[test]
fn swapping_entries_across_logs_is_reported() {
    for name in CaseName::ALL {
        let mut b = case_spec(name).unwrap().bundle;
        if b.logs.len() < 2 {
            continue;
        }
        // a residue that the second log holds at a different position
        let i = 1;
        let x = b.logs[0].entries[i].clone();
        let j = b.logs[1].entries.iter().position(|e| e != &x && matches!(e, LogEntry::Residue(_))).unwrap();
        let y = b.logs[1].entries[j].clone();
        b.logs[0].entries[i] = y.clone();
        b.logs[1].entries[j] = x.clone();
        let w = census_witness(&b);
        for want in [format!("missing {x}"), format!("repeated {y} x2"), format!("missing {y}"), format!("repeated {x} x2")] {
            assert!(w.contains(&want), "{name}: {want} not in {w:?}");
        }
    }
}
