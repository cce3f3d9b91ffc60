use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use afc_memory::scenario::DEFAULT_SCENARIO;

fn afcmem(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afcmem"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Default scenario with a short correlation run.
fn quick_scenario(dir: &Path) -> String {
    let path = dir.join("quick.toml");
    fs::write(&path, DEFAULT_SCENARIO.replace("windows = 8000000", "windows = 200000")).unwrap();
    path.display().to_string()
}

#[test]
fn store_writes_trace_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = afcmem(&["store", "--out", "trace.csv", "--out-dir", "run"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("time_ns,intensity_norm\n"));
    let manifest = fs::read_to_string(dir.path().join("run/manifest.csv")).unwrap();
    assert!(manifest.contains("seed,7"));
    assert!(manifest.contains("store_echoes.csv"));
}

#[test]
fn bad_mirror_is_reported_by_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, DEFAULT_SCENARIO.replace("r1 = 0.40", "r1 = 1.4")).unwrap();
    let o = afcmem(&["--scenario", path.to_str().unwrap(), "comb"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("R1 in [0,1]"), "{}", stderr(&o));
}

#[test]
fn missing_comb_names_the_section() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nocomb.toml");
    fs::write(&path, "[cavity]\nr1 = 0.4\nr2 = 0.99\nlength_cm = 0.4\nrefractive_index = 1.82\nexcess_loss = 0.0\nresonance_ghz = -4.0\n").unwrap();
    let o = afcmem(&["--scenario", path.to_str().unwrap(), "store"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("[afc]"), "{}", stderr(&o));
}

#[test]
fn parse_errors_carry_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    fs::write(&path, "[grid]\nbins = \"many\"\n").unwrap();
    let o = afcmem(&["--scenario", path.to_str().unwrap(), "comb"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn figure_three_repeats_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = quick_scenario(dir.path());
    for out in ["a", "b"] {
        let o = afcmem(&["--scenario", &scenario, "--seed", "9", "--out-dir", out, "figure", "3"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 2);
    for name in names {
        if name == "manifest.csv" {
            continue;
        }
        let a = fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = fs::read(dir.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?}");
    }
}

#[test]
fn g2_takes_storage_times() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = quick_scenario(dir.path());
    let o = afcmem(&["--scenario", &scenario, "g2", "--storage-times", "25,50ns", "--seed", "3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/g2_vs_storage.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "storage_time_ns,g2,stderr,violated");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("50.000,"));

    let o = afcmem(&["g2", "--storage-times", "25,50"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unit"), "{}", stderr(&o));
}

#[test]
fn qubit_and_tomography_commands() {
    let dir = tempfile::tempdir().unwrap();
    let o = afcmem(&["qubit", "--state", "X+", "--analysis", "double-comb"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("out/qubit_fidelity.csv")).unwrap();
    assert!(report.starts_with("F_z,F_xy,F_avg,classical_bound,verdict\n"));

    let o = afcmem(&["qubit", "--state", "W+"], dir.path());
    assert!(!o.status.success());

    let scenario = quick_scenario(dir.path());
    let o = afcmem(&["tomography", "--channel", &scenario, "--shots", "5000", "--seed", "7"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let chi = fs::read_to_string(dir.path().join("out/process_matrix.csv")).unwrap();
    assert_eq!(chi.lines().count(), 17);
}

#[test]
fn resolution_scale_must_keep_powers_of_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = afcmem(&["--resolution-scale", "1.5", "comb"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("resolution_scale"), "{}", stderr(&o));
}
