use std::path::Path;
use std::process::Command;

use cfsim::harness::CSV_HEADER;

fn cfsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cfsim"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn calib_run_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", "[calib]\nsizes = [8, 16]\n");
    let out = dir.path().join("calib.csv");
    let run = cfsim()
        .args([
            "calib",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ])
        .args(["--trials", "2", "--threads", "1"])
        .output()
        .unwrap();
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    // 2 sizes x 2 schemes x 2 metrics.
    assert_eq!(lines.count(), 8);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("calib.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["seed"], 3);
    assert_eq!(sidecar["config"]["calib"]["trials"], 2);
    // Stdout holds progress only, no CSV rows.
    assert!(!String::from_utf8_lossy(&run.stdout).contains("residual_error"));
}

#[test]
fn same_seed_gives_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.toml", "[calib]\nsizes = [8]\n");
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "2"].into_iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let status = cfsim()
            .args([
                "calib",
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                "5",
                "--out",
                out.to_str().unwrap(),
            ])
            .args(["--trials", "3", "--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    let unknown = write(dir.path(), "unknown.toml", "[calib]\nbogus = 1\n");
    let invalid = write(dir.path(), "invalid.toml", "[calib]\nsizes = [1]\n");
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "calib",
            "--config",
            "/nonexistent/cfg.toml",
            "--seed",
            "1",
            "--out",
            out,
        ],
        vec![
            "calib",
            "--config",
            unknown.to_str().unwrap(),
            "--seed",
            "1",
            "--out",
            out,
        ],
        vec![
            "calib",
            "--config",
            invalid.to_str().unwrap(),
            "--seed",
            "1",
            "--out",
            out,
        ],
        vec![
            "calib",
            "--config",
            invalid.to_str().unwrap(),
            "--seed",
            "1",
            "--out",
            out,
            "--trials",
            "0",
        ],
        vec![
            "bogus",
            "--config",
            invalid.to_str().unwrap(),
            "--seed",
            "1",
            "--out",
            out,
        ],
        vec!["calib", "--seed", "1", "--out", out],
    ];
    for args in cases {
        let run = cfsim().args(&args).output().unwrap();
        assert_eq!(run.status.code(), Some(1), "{args:?}");
    }
    assert!(!Path::new(out).exists());
}

#[test]
fn help_exits_with_zero() {
    let run = cfsim().arg("--help").output().unwrap();
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&run.stdout).contains("fig3"));
}
