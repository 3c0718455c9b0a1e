//! End-to-end checks of the `ness-ent` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
schema_version = 1
experiment = "vnee_scaling"

[scatterer]
eps0_over_t = 1.0

[window]
k_fr = { pi = 0.5 }
dk = [0.1, 0.3]

[sweep]
l = [20, 40]

[output]
path = "out.FORMAT"
format = "FORMAT"
"#;

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ness-ent-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn ness_ent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ness-ent")).args(args).output().unwrap()
}

fn write_config(dir: &Path, format: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, SMALL.replace("FORMAT", format)).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = scratch_dir("determinism");
    let config = write_config(&dir, "csv");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = ness_ent(&["run", &config]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read(dir.join("out.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert!(text.contains("# config_sha256: ") && text.contains("# tool_version: "));
    // Header plus one row per (window, L).
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);
}

#[test]
fn json_output_is_meta_and_rows() {
    let dir = scratch_dir("json");
    let config = write_config(&dir, "json");
    assert!(ness_ent(&["run", &config]).status.success());
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("out.json")).unwrap()).unwrap();
    assert_eq!(doc["meta"]["experiment"], "vnee_scaling");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn invalid_config_lists_fields_and_fails() {
    let dir = scratch_dir("invalid");
    let path = dir.join("bad.toml");
    fs::write(
        &path,
        SMALL.replace("FORMAT", "csv").replace("schema_version = 1", "schema_version = 7").replace("l = [20, 40]", "l = [0]"),
    )
    .unwrap();
    let out = ness_ent(&["validate", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("schema_version") && err.contains("sweep.l[0]"), "{err}");
}

#[test]
fn lists_every_experiment() {
    let out = ness_ent(&["list-experiments"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["vnee_scaling", "coefficient_sweep", "resolved_profile", "equipartition", "genfun_deviation", "friedel", "two_scatterer"] {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
}
