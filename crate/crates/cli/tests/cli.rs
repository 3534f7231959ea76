//! End-to-end runs of the `rwre` binary: config errors, reproducibility and
//! resuming an interrupted run.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const ENSEMBLE: &str = r#"
scenario = "ensemble"
seed = 11

[budget]
environments = 12
walks = 2
steps = 5000

[[laws]]
kind = "two_point_sites"
alpha = 0.8
beta = 0.7

[[laws]]
kind = "discrete_sites"
atoms = [{ value = 0.6, weight = 1.0 }]
"#;

fn rwre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwre")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn validate_accepts_a_good_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "ok.toml", ENSEMBLE);
    let o = rwre(&["validate", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("scenario ensemble"));
}

#[test]
fn syntax_errors_point_at_line_and_column() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "scenario = \"ensemble\"\nseed = \n");
    let o = rwre(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.toml:2:"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected_with_location() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "typo.toml", "scenario = \"ensemble\"\n\n[budget]\nwalkers = 3\n");
    let o = rwre(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("typo.toml:4:") && err.contains("walkers"), "{err}");
}

#[test]
fn out_of_range_law_is_invalid() {
    let tmp = TempDir::new().unwrap();
    let text = ENSEMBLE.replace("alpha = 0.8", "alpha = 1.5");
    let cfg = write(tmp.path(), "range.toml", &text);
    let o = rwre(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));
}

#[test]
fn unknown_preset_is_an_error() {
    let o = rwre(&["preset", "no-such-preset"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no-such-preset"));
}

#[test]
fn shown_presets_validate() {
    let list = rwre(&["preset", "--list"]);
    let names: Vec<String> =
        String::from_utf8_lossy(&list.stdout).lines().filter_map(|l| l.split_whitespace().next().map(str::to_string)).collect();
    assert!(names.iter().any(|n| n == "selftest"), "{names:?}");
    let tmp = TempDir::new().unwrap();
    for name in &names {
        let shown = rwre(&["preset", name, "--show"]);
        assert!(shown.status.success(), "{name}: {}", stderr(&shown));
        let cfg = write(tmp.path(), &format!("{name}.toml"), &String::from_utf8_lossy(&shown.stdout));
        let o = rwre(&["validate", &cfg]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}

#[test]
fn runs_are_byte_reproducible_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "e.toml", ENSEMBLE);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(format!("t{threads}"));
        let o = rwre(&["run", &cfg, "--threads", threads, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push((read(&out, "summary.json"), read(&out, "law1_checkpoints.csv"), read(&out, "mean_displacement.svg")));
    }
    assert_eq!(outputs[0], outputs[1]);

    let summary: serde_json::Value = serde_json::from_str(&outputs[0].0).unwrap();
    assert_eq!(summary["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    let csv = &outputs[0].1;
    assert!(csv.contains("\r\n") && csv.lines().nth(1).unwrap().contains('e'), "{csv}");
}

#[test]
fn a_different_seed_changes_the_results() {
    let tmp = TempDir::new().unwrap();
    let a = write(tmp.path(), "a.toml", ENSEMBLE);
    let b = write(tmp.path(), "b.toml", &ENSEMBLE.replace("seed = 11", "seed = 12"));
    for (cfg, out) in [(&a, "a"), (&b, "b")] {
        assert!(rwre(&["run", cfg, "--out", tmp.path().join(out).to_str().unwrap()]).status.success());
    }
    assert_ne!(read(&tmp.path().join("a"), "law1_checkpoints.csv"), read(&tmp.path().join("b"), "law1_checkpoints.csv"));
}

#[test]
fn exhausted_budget_resumes_to_the_uninterrupted_result() {
    let tmp = TempDir::new().unwrap();
    let full = write(tmp.path(), "full.toml", ENSEMBLE);
    let full_out = tmp.path().join("full");
    assert!(rwre(&["run", &full, "--out", full_out.to_str().unwrap()]).status.success());

    // 12 environments x 2 walks x 5000 steps per law: stop inside the first law
    let limited = ENSEMBLE.replace("steps = 5000", "steps = 5000\nstep_budget = 50000");
    let limited = write(tmp.path(), "limited.toml", &limited);
    let out = tmp.path().join("limited");
    let o = rwre(&["run", &limited, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--resume"), "{}", stderr(&o));
    let partial = out.join("partial.json");
    assert!(partial.exists());

    // a config for other laws cannot pick it up
    let other = write(tmp.path(), "other.toml", &ENSEMBLE.replace("beta = 0.7", "beta = 0.65"));
    let o = rwre(&["run", &other, "--resume", partial.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("different config"), "{}", stderr(&o));

    // each resume gets a fresh budget of five environments
    let mut rounds = 0;
    loop {
        rounds += 1;
        let o = rwre(&["run", &limited, "--resume", partial.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        if o.status.success() {
            break;
        }
        assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
        assert!(rounds < 10, "no progress after {rounds} resumes");
    }
    assert!(!partial.exists(), "stale partial.json left behind");
    for name in ["law1_checkpoints.csv", "law2_checkpoints.csv", "mean_displacement.csv"] {
        assert_eq!(read(&full_out, name), read(&out, name), "{name}");
    }
}
