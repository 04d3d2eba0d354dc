use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lratm::io::{parse_sweep_summary, read_log, read_mask, read_report, read_tensor};
use lratm::tensor::relative_error;

fn lratm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lratm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = lratm(dir, args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Writes `truth.tnsr` and `mask.tnsr`. The truth doubles as the observed
/// tensor since the solver projects onto the mask anyway.
fn problem(dir: &Path, shape: &str, ranks: &str, sr: &str) -> PathBuf {
    ok(dir, &["synth", "--shape", shape, "--ranks", ranks, "--seed", "7", "--out", "truth.tnsr"]);
    ok(dir, &["mask", "--shape", shape, "--sr", sr, "--seed", "3", "--out", "mask.tnsr"]);
    dir.join("truth.tnsr")
}

#[test]
fn synth_is_deterministic_and_low_rank() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--shape", "12x10x8", "--ranks", "1,1,1", "--seed", "7", "--out", "a.tnsr"]);
    ok(d, &["synth", "--shape", "12x10x8", "--ranks", "1,1,1", "--seed", "7", "--out", "b.tnsr"]);
    assert_eq!(fs::read(d.join("a.tnsr")).unwrap(), fs::read(d.join("b.tnsr")).unwrap());
    let out = ok(d, &["estimate-rank", "--tensor", "a.tnsr"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1,1,1");
    let out = ok(d, &["estimate-rank", "--tensor", "a.tnsr", "--fraction", "0.5"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "6,5,4");
    assert_eq!(code(&lratm(d, &["estimate-rank", "--tensor", "a.tnsr", "--fraction", "1.5"])), 1);
}

#[test]
fn mask_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (sr, want) in [("0.05", 50), ("1", 1000), ("0", 0)] {
        ok(d, &["mask", "--shape", "10x10x10", "--sr", sr, "--out", "m.tnsr"]);
        assert_eq!(read_mask(d.join("m.tnsr")).unwrap().count(), want, "sr {sr}");
    }
    assert_eq!(code(&lratm(d, &["mask", "--shape", "10x10", "--sr", "2", "--out", "m.tnsr"])), 1);
}

#[test]
fn complete_full_observation_returns_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let truth = problem(d, "8x7x6", "2,2,2", "1");
    fs::write(d.join("cfg.txt"), "ranks = 2\n").unwrap();
    ok(d, &["complete", "--observed", "truth.tnsr", "--mask", "mask.tnsr", "--config", "cfg.txt", "--out", "c.tnsr", "--log", "log.csv"]);
    assert_eq!(read_tensor(d.join("c.tnsr")).unwrap(), read_tensor(&truth).unwrap());
    let log = read_log(d.join("log.csv")).unwrap();
    assert!(!log.is_empty());
    assert_eq!(log.last().unwrap().iter, log.len());
}

#[test]
fn complete_recovers_and_reports_iteration_limit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let truth = problem(d, "40x40x40", "3,3,3", "0.3");
    fs::write(d.join("cfg.txt"), "ranks = 3,3,3\n").unwrap();
    let args = ["complete", "--observed", "truth.tnsr", "--mask", "mask.tnsr", "--config", "cfg.txt", "--log", "log.csv"];
    ok(d, &[&args[..], &["--out", "c.tnsr"]].concat());
    let truth = read_tensor(&truth).unwrap();
    let est = read_tensor(d.join("c.tnsr")).unwrap();
    assert!(relative_error(&est, &truth).unwrap() <= 1e-2);
    let iterations = read_log(d.join("log.csv")).unwrap().len();
    assert!(iterations < 500);

    ok(d, &[&args[..], &["--out", "t.tnsr", "--baseline", "tmac"]].concat());
    assert!(relative_error(&read_tensor(d.join("t.tnsr")).unwrap(), &truth).unwrap() <= 1e-2);

    fs::write(d.join("short.txt"), "ranks = 3\nmax_iter = 3\n").unwrap();
    let out = lratm(d, &["complete", "--observed", "truth.tnsr", "--mask", "mask.tnsr", "--config", "short.txt", "--out", "s.tnsr", "--log", "s.csv"]);
    assert_eq!(code(&out), 2);
    assert_eq!(read_log(d.join("s.csv")).unwrap().len(), 3);
}

#[test]
fn complete_accepts_index_list_masks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--shape", "4x3x2", "--ranks", "1,1,1", "--out", "t.tnsr"]);
    let mut all = String::new();
    for k in 1..=2 {
        for j in 1..=3 {
            for i in 1..=4 {
                all += &format!("{i},{j},{k}\n");
            }
        }
    }
    fs::write(d.join("idx.txt"), format!("# every entry\n{all}")).unwrap();
    fs::write(d.join("cfg.txt"), "ranks = 1\n").unwrap();
    ok(d, &["complete", "--observed", "t.tnsr", "--mask", "idx.txt", "--config", "cfg.txt", "--out", "c.tnsr", "--log", "l.csv"]);
    assert_eq!(read_tensor(d.join("c.tnsr")).unwrap(), read_tensor(d.join("t.tnsr")).unwrap());
    fs::write(d.join("bad.txt"), "1,1,1\n9,1,1\n").unwrap();
    let out = lratm(d, &["complete", "--observed", "t.tnsr", "--mask", "bad.txt", "--out", "c.tnsr", "--log", "l.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn metrics_command() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--shape", "16x16x3", "--ranks", "2,2,2", "--seed", "1", "--out", "a.tnsr"]);
    ok(d, &["metrics", "--ref", "a.tnsr", "--est", "a.tnsr", "--out", "r.csv"]);
    let report = read_report(d.join("r.csv")).unwrap();
    assert_eq!(report.per_slice_ssim, vec![1.0; 3]);
    assert_eq!(report.mean_psnr, f64::INFINITY);
    ok(d, &["synth", "--shape", "16x16x4", "--ranks", "2,2,2", "--out", "b.tnsr"]);
    assert_eq!(code(&lratm(d, &["metrics", "--ref", "a.tnsr", "--est", "b.tnsr", "--out", "r.csv"])), 1);
}

#[test]
fn sweep_matches_single_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    problem(d, "12x12x12", "2,2,2", "0.4");
    fs::write(d.join("cfg.txt"), "ranks = 2\nmax_iter = 60\ngamma_A = 1.5\n").unwrap();
    let sweep = ["sweep", "--observed", "truth.tnsr", "--mask", "mask.tnsr", "--config", "cfg.txt", "--ref", "truth.tnsr"];
    let sweep_code = code(&lratm(d, &[&sweep[..], &["--gamma-list", "1.5,3", "--out-dir", "sw"]].concat()));
    assert!(sweep_code == 0 || sweep_code == 2);
    let rows = parse_sweep_summary(fs::File::open(d.join("sw/summary.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].gamma, 3.0);
    assert!(rows.iter().all(|r| r.rel_err.is_finite() && r.mean_ssim <= 1.0));

    lratm(d, &["complete", "--observed", "truth.tnsr", "--mask", "mask.tnsr", "--config", "cfg.txt", "--out", "c.tnsr", "--log", "c.csv"]);
    assert_eq!(read_tensor(d.join("c.tnsr")).unwrap(), read_tensor(d.join("sw/gamma_1.5.tnsr")).unwrap());

    lratm(d, &[&sweep[..], &["--gamma-list", "1.5,3", "--out-dir", "again"]].concat());
    for name in ["gamma_1.5.tnsr", "gamma_3.tnsr"] {
        assert_eq!(fs::read(d.join("sw").join(name)).unwrap(), fs::read(d.join("again").join(name)).unwrap());
    }
}

#[test]
fn usage_and_io_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&lratm(d, &[])), 1);
    assert_eq!(code(&lratm(d, &["synth", "--shape", "4x0", "--ranks", "1", "--out", "x"])), 1);
    assert_eq!(code(&lratm(d, &["complete", "--observed", "missing.tnsr", "--mask", "m", "--out", "o", "--log", "l"])), 1);
    fs::write(d.join("junk.tnsr"), b"TNSR\x07").unwrap();
    let out = lratm(d, &["estimate-rank", "--tensor", "junk.tnsr"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte 4"));
    assert_eq!(code(&lratm(d, &["--help"])), 0);
}
