use std::path::PathBuf;
use std::process::Command;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stefan() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stefan"))
}

#[test]
fn lemma_suite_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = stefan()
        .args(["lemma-suite", "--config"])
        .arg(configs().join("lemma.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("properties passed"));
    assert!(dir.path().join("lemma_suite.csv").exists());
}

#[test]
fn seeds_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = stefan()
        .args(["simulate", "--config"])
        .arg(configs().join("heat.toml"))
        .arg("--out")
        .arg(dir.path())
        .args(["--seeds", "2..4", "--jobs", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("n_inf/seed_2/trajectory.csv").exists());
    assert!(dir.path().join("n_inf/seed_3/trajectory.csv").exists());
    assert!(!dir.path().join("n_inf/seed_0").exists());
}

#[test]
fn bad_input_is_rejected() {
    let bad_range = stefan()
        .args(["simulate", "--config"])
        .arg(configs().join("heat.toml"))
        .args(["--seeds", "4..2"])
        .output()
        .unwrap();
    assert!(!bad_range.status.success());
    let missing = stefan().args(["converge", "--config", "no/such/file.toml"]).output().unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no/such/file.toml"));
}
