//! Reproduction harness: runs every preset once and prints one PASS/FAIL
//! line per acceptance criterion.
//!
//! `RWRE_ACCEPTANCE_ONLY=1,5,14` restricts the run to some criteria.
//! `RWRE_ACCEPTANCE_STRICT=1` turns any FAIL into a non-zero exit.
//! `RWRE_ACCEPTANCE_OUT=dir` keeps the preset outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use rwre_cli::{execute, preset, ExperimentConfig, Report};
use rwre_core::{Atom, EnvironmentLaw, JumpAtom};

struct Criterion {
    id: u32,
    title: &'static str,
    /// `(preset, check-name prefixes)`; no prefixes means every check of the preset.
    parts: &'static [(&'static str, &'static [&'static str])],
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "phase diagram", parts: &[("phase-diagram", &[])] },
    Criterion { id: 2, title: "velocity formula", parts: &[("velocity", &["law"])] },
    Criterion { id: 3, title: "slowdown paradoxes", parts: &[("velocity", &["zero_speed.", "drift_paradox."])] },
    Criterion { id: 4, title: "critical exponent", parts: &[("kappa", &[])] },
    Criterion { id: 5, title: "stable scaling", parts: &[("stable-scaling", &[])] },
    Criterion { id: 6, title: "Gaussian regime", parts: &[("clt", &[])] },
    Criterion { id: 7, title: "Sinai regime", parts: &[("sinai", &[])] },
    Criterion { id: 8, title: "diode oscillations and LLN", parts: &[("figure2", &[]), ("diode-lln", &[])] },
    Criterion { id: 9, title: "environment seen from the walker", parts: &[("velocity", &["walker_view."])] },
    Criterion { id: 10, title: "Lyapunov exponents", parts: &[("lyapunov", &[])] },
    Criterion { id: 11, title: "random bonds", parts: &[("bonds", &[])] },
    Criterion { id: 12, title: "continuous time", parts: &[("ctrw-ema", &[]), ("ctrw-subdiffusive", &[])] },
    Criterion { id: 13, title: "balanced walks", parts: &[("balanced", &[])] },
];

const SELFTEST_LIMIT_SECONDS: f64 = 60.0;

struct Run {
    report: Report,
    seconds: f64,
}

fn run_preset(name: &str, out: &Path) -> Result<Run, String> {
    let cfg = preset(name).map_err(|e| e.to_string())?;
    let outcome = execute(&cfg, None, Some(&out.join(name)), None).map_err(|e| e.to_string())?;
    Ok(Run { report: outcome.report, seconds: outcome.wall_seconds })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn describe(report: &Report, prefixes: &[&str], failures: &mut Vec<String>) -> (usize, usize) {
    let mut total = 0;
    let mut passed = 0;
    for c in report.checks.iter().filter(|c| prefixes.is_empty() || prefixes.iter().any(|p| c.name.starts_with(p))) {
        total += 1;
        if c.pass {
            passed += 1;
        } else {
            failures.push(format!("{} = {:.6} (target {})", c.name, c.value, c.target));
        }
    }
    (passed, total)
}

/// Small mixed config whose outputs must not depend on the worker count.
fn determinism_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("ensemble");
    cfg.seed = 7;
    cfg.budget.environments = Some(40);
    cfg.budget.walks = Some(3);
    cfg.budget.steps = Some(20_000);
    cfg.laws = vec![
        EnvironmentLaw::TwoPointSites { alpha: 0.8, beta: 0.7 },
        EnvironmentLaw::Diode { alpha: 0.3, rho: 1.0 / 0.09 },
        EnvironmentLaw::BoundedJump {
            left: 2,
            right: 1,
            atoms: vec![
                JumpAtom { probs: vec![0.1, 0.2, 0.0, 0.7], weight: 0.5 },
                JumpAtom { probs: vec![0.2, 0.3, 0.0, 0.5], weight: 0.5 },
            ],
        },
        EnvironmentLaw::BondWeights { atoms: vec![Atom::new(1.0, 0.5), Atom::new(4.0, 0.5)] },
    ];
    cfg
}

fn outputs(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        if name != "timing.json" {
            files.insert(name, fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    Ok(files)
}

/// Byte-compares every output except the timing sidecar across 1, 2 and 4 workers.
fn thread_invariance(out: &Path) -> Result<String, String> {
    let cfgs = [determinism_config(), {
        let mut c = preset("kappa").map_err(|e| e.to_string())?;
        c.seed = 3;
        c
    }];
    let mut compared = 0;
    for cfg in &cfgs {
        let mut reference: Option<BTreeMap<String, Vec<u8>>> = None;
        for threads in [1, 2, 4] {
            let dir = out.join(format!("determinism-{}-{threads}", cfg.scenario));
            execute(cfg, Some(threads), Some(&dir), None).map_err(|e| e.to_string())?;
            let files = outputs(&dir)?;
            match &reference {
                None => reference = Some(files),
                Some(r) if *r == files => compared += files.len(),
                Some(r) => {
                    let differing: Vec<&String> = r.keys().filter(|k| r.get(*k) != files.get(*k)).collect();
                    return Err(format!("{} with {threads} threads differs in {differing:?}", cfg.scenario));
                }
            }
        }
    }
    Ok(format!("{compared} files identical across 1/2/4 threads"))
}

fn main() -> ExitCode {
    let only: Option<Vec<u32>> =
        std::env::var("RWRE_ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |id: u32| only.as_ref().is_none_or(|o| o.contains(&id));
    let strict = std::env::var("RWRE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let kept = std::env::var("RWRE_ACCEPTANCE_OUT").ok().map(PathBuf::from);
    let scratch = tempfile::tempdir().expect("temporary directory");
    let out = kept.unwrap_or_else(|| scratch.path().to_path_buf());

    let mut runs: BTreeMap<&str, Result<Run, String>> = BTreeMap::new();
    let mut all_pass = true;
    for c in CRITERIA.iter().filter(|c| wanted(c.id)) {
        let mut failures = Vec::new();
        let (mut passed, mut total, mut seconds) = (0, 0, 0.0);
        for &(name, prefixes) in c.parts {
            let run = runs.entry(name).or_insert_with(|| run_preset(name, &out));
            match run {
                Ok(r) => {
                    let (p, t) = describe(&r.report, prefixes, &mut failures);
                    passed += p;
                    total += t;
                    seconds += r.seconds;
                }
                Err(e) => failures.push(format!("{name}: error: {e}")),
            }
        }
        let pass = failures.is_empty() && total > 0;
        all_pass &= pass;
        let mut line = format!("{} criterion {:>2} {}: {passed}/{total} checks, {seconds:.1} s", verdict(pass), c.id, c.title);
        if !failures.is_empty() {
            line.push_str("; failing: ");
            line.push_str(&failures.join("; "));
        }
        println!("{line}");
    }

    if wanted(14) {
        let mut notes = Vec::new();
        let selftest = run_preset("selftest", &out);
        let selftest_ok = match &selftest {
            Ok(r) => {
                let mut failures = Vec::new();
                let (p, t) = describe(&r.report, &[], &mut failures);
                notes.push(format!("selftest {p}/{t} checks in {:.1} s (limit {SELFTEST_LIMIT_SECONDS} s)", r.seconds));
                notes.extend(failures);
                p == t && r.seconds <= SELFTEST_LIMIT_SECONDS
            }
            Err(e) => {
                notes.push(format!("selftest error: {e}"));
                false
            }
        };
        let determinism = thread_invariance(&out);
        let det_ok = determinism.is_ok();
        notes.push(determinism.unwrap_or_else(|e| e));
        let pass = selftest_ok && det_ok;
        all_pass &= pass;
        println!("{} criterion 14 engineering: {}", verdict(pass), notes.join("; "));
    }

    if strict && !all_pass {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
