//! End-to-end checks of the `ecgrad` binary: artifacts on disk, exit codes,
//! reproducibility of the resolved-config echo, and thread-count invariance.

use std::path::Path;
use std::process::{Command, Output};

fn ecgrad(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecgrad"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("missing artifact {name}: {e}"))
}

#[test]
fn run_writes_trace_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecgrad(&["run", "--config", "preset:scalar-example", "--out", "a"], dir.path());
    assert_eq!(code(&out), 0, "{out:?}");
    let trace = read(dir.path(), "a/trace.csv");
    assert!(trace.starts_with("k,dist,gap,gradsq,mingradsq,avg_gap,errnorm,accres,bits\n"));
    assert_eq!(trace.lines().count(), 102); // header + k = 0..=100

    // the echo re-runs to byte-identical output
    let echo = dir.path().join("a/resolved-config.cfg");
    let out2 = ecgrad(&["run", "--config", echo.to_str().unwrap(), "--out", "b"], dir.path());
    assert_eq!(code(&out2), 0);
    assert_eq!(trace, read(dir.path(), "b/trace.csv"));
}

#[test]
fn flag_overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecgrad(
        &["run", "--config", "preset:scalar-example", "--iters", "7", "--out", "o"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert_eq!(read(dir.path(), "o/trace.csv").lines().count(), 9); // header + 0..=7
    assert!(read(dir.path(), "o/resolved-config.cfg").contains("iters = 7\n"));
}

#[test]
fn bad_compressor_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecgrad(
        &["run", "--config", "preset:scalar-example", "--compressor", "rounding:-1", "--out", "x"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rounding"));
}

#[test]
fn step_rule_violation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecgrad(
        &["run", "--config", "preset:thm4", "--gamma-rule", "10/L", "--out", "x"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("thm4"));
}

#[test]
fn divergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecgrad(
        &["run", "--config", "preset:scalar-example", "--gamma-rule", "1.5", "--out", "x"],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}

#[test]
fn thread_count_does_not_change_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for (threads, sub) in [("1", "t1"), ("4", "t4")] {
        let out = Command::new(env!("CARGO_BIN_EXE_ecgrad"))
            .args(["run", "--config", "preset:quadratic-smoke", "--out", sub])
            .env("ECGRAD_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{out:?}");
    }
    assert_eq!(read(dir.path(), "t1/trace.csv"), read(dir.path(), "t4/trace.csv"));
}

#[test]
fn compare_writes_per_scheme_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "problem = quad-kappa\nd = 4\nkappa = 20\nproblem_seed = 9\n\
               compressor = epsball:0.2\nschemes = direct,ec:hessian\n\
               gamma_rule = 1/L\niters = 300\nx0 = slow:1.0\n";
    std::fs::write(dir.path().join("cmp.cfg"), cfg).unwrap();
    let out = ecgrad(&["compare", "--config", "cmp.cfg", "--out", "c"], dir.path());
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(dir.path().join("c/trace-direct.csv").exists());
    assert!(dir.path().join("c/trace-ec-hessian.csv").exists());
    let summary = read(dir.path(), "c/summary.csv");
    assert!(summary.starts_with("label,final_dist,final_gap,floor_dist,floor_gap\n"));
    assert_eq!(summary.lines().count(), 3);
    // stdout reports the pairwise floor ratios
    assert!(String::from_utf8_lossy(&out.stdout).contains("floor_dist[direct+epsball:0.2]"));
}

#[test]
fn bounds_csvs_align_to_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecgrad(&["bounds", "--config", "preset:bounds-demo", "--out", "b"], dir.path());
    assert_eq!(code(&out), 0, "{out:?}");
    let thm1 = read(dir.path(), "b/bounds-thm1.csv");
    assert!(thm1.starts_with("k,bound,floor\n"));
    assert_eq!(thm1.lines().count(), 102); // header + k = 0..=100
    assert!(dir.path().join("b/bounds-thm5.csv").exists());

    // exact compressor: eps = 0, so the floor column is identically zero
    let out = ecgrad(
        &["bounds", "--config", "preset:bounds-demo", "--compressor", "exact", "--out", "z"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    for line in read(dir.path(), "z/bounds-thm1.csv").lines().skip(1) {
        assert_eq!(line.split(',').nth(2), Some("0"));
    }
}

#[test]
fn thm7b_without_beta_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "problem = synth-ls\nn_samples = 40\nd = 4\nnoise = 0.2\nproblem_seed = 5\n\
               lambda = 0.1\nworkers = 2\ncompressor = rounding:0.5\n\
               gamma_rule = 0.1/L\niters = 50\nbatch = 4\nthms = thm7b\n";
    std::fs::write(dir.path().join("b.cfg"), cfg).unwrap();
    let out = ecgrad(&["bounds", "--config", "b.cfg", "--out", "x"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));
}

#[test]
fn verify_report_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecgrad(&["verify", "lower-bound"], dir.path());
    assert_eq!(code(&out), 0, "{out:?}");
    for line in String::from_utf8_lossy(&out.stdout).lines() {
        let v: serde_json::Value = serde_json::from_str(line).expect("JSON lines");
        assert_eq!(v["suite"], "lower-bound");
    }

    // the deliberately broken suite must be reported and exit nonzero
    let out = ecgrad(&["verify", "self-test-fail"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"passed\":false"));

    let out = ecgrad(&["verify", "no-such-suite"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ecgrad(&[], dir.path())), 2);
    assert_eq!(code(&ecgrad(&["frobnicate"], dir.path())), 2);
    assert_eq!(code(&ecgrad(&["run", "--out", "x"], dir.path())), 2); // no --config
    assert_eq!(code(&ecgrad(&["run", "--config"], dir.path())), 2); // missing value
}
