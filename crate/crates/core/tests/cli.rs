use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adiabatic")).args(args).output().unwrap()
}

fn run_with(dir: &Path, cmd: &str, cfg: &str) -> Output {
    let path = dir.join("run.cfg");
    std::fs::write(&path, cfg).unwrap();
    let out = dir.join("out");
    bin(&[cmd, "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn default_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["verify", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("checks passed"));
}

#[test]
fn coarse_grid_fails_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "verify", "model = mode\nn = 1\nN = 4\neps_count = 3\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAILED"));
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    for (cfg, line) in [
        ("m = 1\nN = 3\n", 2),
        ("m = 1\n# comment\nbogus = 4\n", 3),
        ("eps_count = 0\n", 1),
        ("n = 0.5\n", 1),
        ("m = 1\nm = 2\n", 2),
    ] {
        let o = run_with(dir.path(), "sweep", cfg);
        assert_eq!(o.status.code(), Some(2), "{cfg:?}");
        assert!(stderr(&o).contains(&format!("line {line}")), "{cfg:?}: {}", stderr(&o));
    }
}

#[test]
fn missing_config_and_unwritable_out_exit_3() {
    let o = bin(&["verify", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(o.status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let o = bin(&["rumin", "--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn manifest_hashes_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "sweep", "model = invariant\ndegree = 1\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sweep");
    let files = manifest["files"].as_array().unwrap();
    assert!(files.len() >= 3);
    for f in files {
        let bytes = std::fs::read(out.join(f["name"].as_str().unwrap())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), f["sha256"].as_str().unwrap());
    }
}

#[test]
fn invariant_sweep_tracks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "sweep", "model = invariant\ndegree = 1\n");
    assert_eq!(o.status.code(), Some(0));
    let tracks = std::fs::read_to_string(dir.path().join("out/tracks.csv")).unwrap();
    let rows: Vec<&str> = tracks.lines().skip(1).collect();
    assert_eq!(rows.len(), 3, "{tracks}");
    assert_eq!(rows.iter().filter(|r| r.contains("kernel")).count(), 2);
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = bin(&["verify", "--seed", "42", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 42);
}

#[test]
fn mode_ranges_write_sector_directories() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "sweep", "model = mode\nn = 0..1\nN = 8\ndegree = 0\neps_count = 4\nK = 4\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for s in ["n0", "n1"] {
        assert!(dir.path().join("out").join(s).join("eigenvalues.csv").exists());
    }
}

#[test]
fn rumin_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "rumin", "model = invariant\nm = 2\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = std::fs::read_to_string(dir.path().join("out/rumin.csv")).unwrap();
    let dims: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(dims, ["1", "4", "5", "5", "4", "1"]);
}
