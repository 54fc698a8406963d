use std::path::PathBuf;
use std::process::{Command, Output};

fn kpmsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpmsym")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kpmsym-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn verify_equivalence_passes_and_writes_manifest() {
    let dir = scratch("equiv");
    let out = kpmsym(&["verify-equivalence", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("manifest.txt")).unwrap();
    assert!(text.contains("passed"));
    assert_eq!(String::from_utf8_lossy(&out.stdout), text);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn short_run_writes_snapshots_and_manifest() {
    let dir = scratch("run");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "# short line-soliton run\nscenario = line_soliton\ndomain = 0,12,0,2\nt_end = 0.2\nsnapshot_every = 10\n",
    )
    .unwrap();
    let out_dir = dir.join("out");
    let out = kpmsym(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = std::fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("final.crest_intercept"));
    assert!(out_dir.join("u_k000020.csv").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn bad_config_exits_with_error() {
    let dir = scratch("bad");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "dx = -1\n").unwrap();
    let out = kpmsym(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let missing = dir.join("nope.cfg");
    let out = kpmsym(&["verify-conservation", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn convergence_needs_two_levels() {
    let dir = scratch("levels");
    let out = kpmsym(&["convergence", "--levels", "1", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}
