//! End-to-end checks of the experiment runner binary.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;

fn spinotto() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spinotto"))
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("cannot read {path:?}: {e}"))
}

#[test]
fn list_presets_names_every_preset() {
    let out = spinotto().arg("list-presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "qubit-cycle",
        "qubit-limit-cycle",
        "collective-cycle",
        "power-vs-tth",
        "power-vs-j",
        "tT-vs-j",
        "meanfield-vs-numeric",
        "lmg-cycles",
        "tstar-dip-vs-j",
        "work-vs-tu",
        "work-vs-gammabar",
    ] {
        assert!(text.contains(name), "missing preset {name}");
    }
}

#[test]
fn unknown_preset_is_a_validation_error_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = spinotto()
        .args(["run", "no-such-preset", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists(), "no files may be written on rejection");
}

#[test]
fn invalid_override_is_rejected_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = spinotto()
        .args(["run", "qubit-cycle", "--lambda-f", "0.5", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists());
}

#[test]
fn qubit_cycle_outputs_match_closed_forms_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let status = spinotto()
            .args(["run", "qubit-cycle", "--out"])
            .arg(out_dir)
            .status()
            .unwrap();
        assert!(status.success());
    }

    let summary: serde_json::Value =
        serde_json::from_str(&read(&out_a.join("summary.json"))).unwrap();
    let w_prime = summary["w_prime"].as_f64().unwrap();
    assert!((w_prime - 0.27678).abs() < 1e-4);
    assert!((summary["eta"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-9);

    // Bit-identical CSV/JSON across runs.
    for name in ["trajectory.csv", "summary.json"] {
        assert_eq!(
            fs::read(out_a.join(name)).unwrap(),
            fs::read(out_b.join(name)).unwrap(),
            "{name} must be deterministic"
        );
    }
}

fn parse_manifest_files(manifest: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut in_files = false;
    for line in manifest.lines() {
        if line == "files:" {
            in_files = true;
            continue;
        }
        if in_files {
            if let Some(rest) = line.strip_prefix("  ") {
                if let Some((digest, name)) = rest.split_once("  ") {
                    out.push((digest.to_string(), name.to_string()));
                }
            }
        }
    }
    out
}

fn walk(root: &Path, dir: &Path, out: &mut BTreeSet<String>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            walk(root, &path, out);
        } else {
            out.insert(
                path.strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .to_string(),
            );
        }
    }
}

#[test]
fn manifest_is_complete_with_matching_digests() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let status = spinotto()
        .args(["run", "qubit-cycle", "--out"])
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());

    let manifest = read(&out_dir.join("manifest.txt"));
    let listed = parse_manifest_files(&manifest);
    assert!(!listed.is_empty());

    let mut on_disk = BTreeSet::new();
    walk(&out_dir, &out_dir, &mut on_disk);
    on_disk.remove("manifest.txt");
    let listed_names: BTreeSet<String> = listed.iter().map(|(_, n)| n.clone()).collect();
    assert_eq!(listed_names, on_disk, "every emitted file must be listed");

    for (digest, name) in &listed {
        let bytes = fs::read(out_dir.join(name)).unwrap();
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let actual = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>();
        assert_eq!(&actual, digest, "digest mismatch for {name}");
    }
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    fs::write(&config, "t_h = 6.0\nlambda_f = 2.0\n").unwrap();
    let out_dir = dir.path().join("results");
    let status = spinotto()
        .args(["run", "qubit-cycle", "--lambda-f", "4.0", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = read(&out_dir.join("manifest.txt"));
    assert!(manifest.contains("lambda_f: 4.0"), "flag beats config file");
    assert!(manifest.contains("t_h: 6.0"), "config beats preset default");
}

#[test]
fn sweep_singleton_matches_run_and_records_failures() {
    let dir = tempfile::tempdir().unwrap();

    // Reference run with the same override.
    let run_dir = dir.path().join("run");
    assert!(spinotto()
        .args(["run", "qubit-cycle", "--t-h", "6.0", "--out"])
        .arg(&run_dir)
        .status()
        .unwrap()
        .success());

    // Sweep over a grid with one good and one invalid point.
    let grid = dir.path().join("grid.json");
    fs::write(&grid, r#"{"t_h": [6.0, 0.5]}"#).unwrap();
    let sweep_dir = dir.path().join("sweep");
    assert!(spinotto()
        .args(["sweep", "qubit-cycle", "--workers", "2", "--grid"])
        .arg(&grid)
        .arg("--out")
        .arg(&sweep_dir)
        .status()
        .unwrap()
        .success());

    let sweep_csv = read(&sweep_dir.join("sweep.csv"));
    let mut lines = sweep_csv.lines();
    assert_eq!(lines.next().unwrap(), "t_h,status,out_dir");
    let first = lines.next().unwrap();
    let second = lines.next().unwrap();
    assert!(first.starts_with("6,ok,"), "good point: {first}");
    assert!(second.contains("error:"), "bad point recorded: {second}");

    // The singleton good point reproduces the plain run bit-for-bit.
    for name in ["trajectory.csv", "summary.json"] {
        assert_eq!(
            fs::read(run_dir.join(name)).unwrap(),
            fs::read(sweep_dir.join("point_000").join(name)).unwrap(),
            "sweep point must equal run output for {name}"
        );
    }
}

#[test]
fn empty_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    fs::write(&grid, r#"{}"#).unwrap();
    let out = spinotto()
        .args(["sweep", "qubit-cycle", "--grid"])
        .arg(&grid)
        .arg("--out")
        .arg(dir.path().join("sweep"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
