//! End-to-end tests of the `sknj` binary: exit codes, the generate/convert/
//! join flows, output determinism, and bench report shape.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sknj() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sknj"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = sknj().args(args).output().expect("spawning sknj");
    assert!(
        out.status.success(),
        "sknj {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn generate(dir: &Path, name: &str, count: u32, seed: u64) -> PathBuf {
    let path = dir.join(name);
    run_ok(&[
        "generate",
        "--count",
        &count.to_string(),
        "--dims",
        "400",
        "--features",
        "8:24",
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    path
}

#[test]
fn exit_codes() {
    let help = sknj().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));

    let usage = sknj().args(["join", "--no-such-flag"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(1));

    let runtime = sknj()
        .args(["join", "--r", "missing.sknj", "--s", "missing.sknj"])
        .output()
        .unwrap();
    assert_eq!(runtime.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&runtime.stderr);
    assert!(stderr.starts_with("error:"), "stderr was {stderr:?}");
}

#[test]
fn join_emits_ranked_tsv() {
    let dir = TempDir::new().unwrap();
    let r = generate(dir.path(), "r.sknj", 40, 1);
    let s = generate(dir.path(), "s.sknj", 60, 2);

    let out = run_ok(&[
        "join",
        "--r",
        r.to_str().unwrap(),
        "--s",
        s.to_str().unwrap(),
        "--k",
        "3",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.is_empty());

    let mut last: Option<(u64, u64, f64)> = None;
    for line in text.lines() {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 4, "line {line:?}");
        let r_id: u64 = fields[0].parse().unwrap();
        let rank: u64 = fields[1].parse().unwrap();
        let _s_id: u64 = fields[2].parse().unwrap();
        let score: f64 = fields[3].parse().unwrap();
        assert!((1..=3).contains(&rank));
        assert!(score > 0.0);
        if let Some((pr, prank, pscore)) = last {
            if pr == r_id {
                assert_eq!(rank, prank + 1, "ranks must be consecutive");
                assert!(score <= pscore, "scores must not increase within a group");
            } else {
                assert!(r_id > pr, "outer ids must appear in file order");
                assert_eq!(rank, 1);
            }
        }
        last = Some((r_id, rank, score));
    }
}

#[test]
fn identical_flags_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let r = generate(dir.path(), "r.sknj", 50, 11);
    let s = generate(dir.path(), "s.sknj", 70, 12);

    let mut outputs = Vec::new();
    for algo in ["bf", "iib", "iiib"] {
        for threads in ["1", "3"] {
            let out = run_ok(&[
                "join",
                "--r",
                r.to_str().unwrap(),
                "--s",
                s.to_str().unwrap(),
                "--k",
                "4",
                "--algo",
                algo,
                "--threads",
                threads,
            ]);
            outputs.push(out.stdout);
        }
    }
    for other in &outputs[1..] {
        assert_eq!(
            &outputs[0], other,
            "every kernel and thread count must emit identical results"
        );
    }

    // And a second process with the same flags reproduces the first exactly.
    let again = run_ok(&[
        "join",
        "--r",
        r.to_str().unwrap(),
        "--s",
        s.to_str().unwrap(),
        "--k",
        "4",
        "--algo",
        "bf",
        "--threads",
        "1",
    ]);
    assert_eq!(outputs[0], again.stdout);
}

#[test]
fn generate_is_seed_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = generate(dir.path(), "a.sknj", 30, 5);
    let b = generate(dir.path(), "b.sknj", 30, 5);
    let c = generate(dir.path(), "c.sknj", 30, 6);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn convert_discretizes_spectra() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("tiny.spectra");
    std::fs::write(
        &input,
        "# 10\n100.0 5.0\n234.56 77.3\n\n# 11\n50.01 4.5\n50.04 9.0\n2050.0 1.0\n",
    )
    .unwrap();
    let out_path = dir.path().join("tiny.sknj");
    let out = run_ok(&[
        "convert",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("2 vectors"), "stdout was {stdout:?}");
    assert!(stdout.contains("dropped 1"), "stdout was {stdout:?}");

    let (header, vectors) = sknj_core::format::read_dataset(&out_path).unwrap();
    assert_eq!(header.dims, 20_000);
    assert_eq!(vectors.len(), 2);
    assert_eq!(vectors[0].id(), 10);
    assert_eq!(vectors[0].dims(), &[1000, 2346]);
    // The two peaks near m/z 50.0 collide on dimension 500; the larger wins,
    // and the peak past the cap is gone.
    assert_eq!(vectors[1].id(), 11);
    assert_eq!(vectors[1].dims(), &[500]);
    assert_eq!(vectors[1].weights(), &[9.0]);
}

#[test]
fn bench_emits_one_record_per_run() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.jsonl");
    run_ok(&[
        "bench",
        "--axis",
        "k",
        "--values",
        "1,2,5,9",
        "--algos",
        "bf,iib",
        "--repeat",
        "2",
        "--r-count",
        "40",
        "--s-count",
        "50",
        "--dims",
        "300",
        "--features",
        "5:15",
        "--seed",
        "21",
        "--report",
        report.to_str().unwrap(),
        "--keep-data",
        dir.path().join("data").to_str().unwrap(),
    ]);

    let text = std::fs::read_to_string(&report).unwrap();
    let records: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 4 * 2 * 2, "4 cells x 2 algorithms x 2 repeats");
    for rec in &records {
        assert_eq!(rec["axis"], "k");
        assert!(rec["counters"]["s_blocks_read"].as_u64().unwrap() > 0);
        assert!(rec["cpu_time_s"].as_f64().unwrap() >= 0.0);
    }
    let ks: Vec<u64> = records.iter().map(|r| r["k"].as_u64().unwrap()).collect();
    assert!(ks.contains(&1) && ks.contains(&9));
    // Shared datasets for this axis: the generated files stay in --keep-data.
    assert!(dir.path().join("data").join("base-r.sknj").exists());
}

#[test]
fn join_report_appends_json() {
    let dir = TempDir::new().unwrap();
    let r = generate(dir.path(), "r.sknj", 25, 3);
    let s = generate(dir.path(), "s.sknj", 25, 4);
    let report = dir.path().join("runs.jsonl");

    for _ in 0..2 {
        run_ok(&[
            "join",
            "--r",
            r.to_str().unwrap(),
            "--s",
            s.to_str().unwrap(),
            "--out",
            dir.path().join("out.tsv").to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ]);
    }
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "each run appends one record");
    for line in lines {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(rec["command"], "join");
        assert_eq!(rec["algorithm"], "iiib");
        assert_eq!(rec["r_vectors"], 25);
    }
}
