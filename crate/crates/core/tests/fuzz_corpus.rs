//! Replays the checked-in fuzz seeds through the parser entry points on stable.
use std::fs;
use std::path::Path;

use afc_memory::figures::{Analysis, FigureId};
use afc_memory::scenario::{parse_storage_times, Scenario};
use afc_memory::timebin_qubit::QubitLabel;

fn seeds(target: &str) -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| fs::read_to_string(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn scenario_seeds() {
    let ok = seeds("scenario_parse")
        .iter()
        .filter(|t| Scenario::from_toml_str(t).is_ok())
        .count();
    assert!(ok >= 1);
}

#[test]
fn storage_time_seeds() {
    for t in seeds("storage_times") {
        if let Ok(v) = parse_storage_times(&t) {
            assert!(v.iter().all(|x| x.is_finite() && *x >= 0.0), "{t}");
        }
    }
}

#[test]
fn label_seeds() {
    for t in seeds("qubit_label") {
        if let Ok(l) = t.parse::<QubitLabel>() {
            assert_eq!(l.to_string().parse::<QubitLabel>().unwrap(), l);
        }
    }
    for t in seeds("figure_id") {
        if let Ok(id) = t.parse::<FigureId>() {
            assert_eq!(id.to_string().parse::<FigureId>().unwrap(), id);
        }
        let _ = t.parse::<Analysis>();
    }
}
