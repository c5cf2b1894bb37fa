use std::process::Command;

mod common;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rta-lab"))
}

#[test]
fn validate_reports_counts_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.toml");
    std::fs::write(&p, common::TINY).unwrap();
    let o = bin().args(["validate", "--config"]).arg(&p).output().unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok: 2 specs, 4 runs");

    std::fs::write(&p, "version = 1\n[[experiment]]\nenv = \"pendulum\"\nfilter = \"explicit_asif\"\nconfig = \"baseline\"\nalgorithm = \"ppo\"\n").unwrap();
    let o = bin().args(["validate", "--config"]).arg(&p).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn run_with_env_out_and_seed_override_then_tables() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.toml");
    std::fs::write(&p, common::TINY).unwrap();
    let out = dir.path().join("study");
    let o = bin()
        .args(["run", "--quiet", "--seeds", "5", "--config"])
        .arg(&p)
        .env("RTA_LAB_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_dir(out.join("runs")).unwrap().count(), 2);

    let o = bin().args(["run", "--quiet", "--resume", "--seeds", "5", "--out"]).arg(&out).arg("--config").arg(&p).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 completed, 2 skipped"));

    let o = bin().arg("tables").arg("--out").arg(&out).output().unwrap();
    let t = String::from_utf8_lossy(&o.stdout);
    assert!(t.contains("| rta_punishment | off |"), "{t}");

    let o = bin().arg("curves").env("RTA_LAB_OUT", &out).output().unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 4);
}

#[test]
fn small_filter_audit() {
    let o = bin().args(["filters-audit", "--episodes", "3"]).output().unwrap();
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    assert_eq!(s.lines().count(), 11);
    assert!(s.lines().skip(1).take(9).all(|l| l.split(',').nth(5) == Some("0")), "{s}");
}
