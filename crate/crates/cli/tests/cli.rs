use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mmrelay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmrelay"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_is_byte_identical_for_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "snr.conf",
        "experiment = rate-vs-snr\nsweep = -10, 0, 10\nM = 32\nK = 4\nT_c = 20\nL = 3\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = mmrelay(&[
            "run",
            &cfg,
            "--seed",
            "0x2a",
            "--trials",
            "20",
            "--montecarlo",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("# seed=42"));
    assert!(text.contains("# trials=20"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 4);
}

#[test]
fn csv_goes_to_stdout_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "pairs.conf",
        "experiment = rate-vs-pairs\nsweep = 1, 2, 3\n",
    );
    let o = mmrelay(&["run", &cfg]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().any(|l| l.starts_with("experiment,sweep_value")));
    assert!(out.lines().any(|l| l.starts_with("rate-vs-pairs,3,")));
}

#[test]
fn unknown_key_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.conf", "antennas = 64\n");
    let o = mmrelay(&["validate", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("antennas"));
    let o = mmrelay(&["run", &cfg]);
    assert!(!o.status.success());
}

#[test]
fn type_error_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.conf", "M = abc\n");
    let o = mmrelay(&["validate", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("M"));
}

#[test]
fn validate_prints_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.conf", "");
    let o = mmrelay(&["validate", &cfg]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().any(|l| l == "M=128"));
    assert!(out.lines().any(|l| l == "experiment=rate-vs-snr"));
}

#[test]
fn missing_file_and_unwritable_output_fail() {
    assert!(!mmrelay(&["validate", "/nonexistent/x.conf"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", "sweep = 0\n");
    let o = mmrelay(&["run", &cfg, "--out", "/nonexistent/dir/out.csv"]);
    assert!(!o.status.success());
}
