//! Declarative experiment runner for random walks in random environments.
//!
//! A run is an [`ExperimentConfig`] naming a scenario; every preset is such a
//! config with its default laws and budgets filled in. Results are CSV tables,
//! SVG plots (each with a CSV of exactly the plotted series) and a JSON summary,
//! all byte-identical for a given config whatever the thread count.

pub mod config;
pub mod error;
pub mod report;
pub mod scenarios;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use report::Report;
pub use scenarios::{preset, presets, Scenario};

/// Environment variable with the default worker count.
pub const THREADS_VAR: &str = "RWRE_THREADS";

/// Everything a scenario may look at besides the config.
pub struct RunContext<'a> {
    pub cfg: &'a ExperimentConfig,
    pub out_dir: PathBuf,
    pub resume: Option<PathBuf>,
}

pub struct Outcome {
    pub report: Report,
    pub wall_seconds: f64,
    pub out_dir: PathBuf,
}

/// Worker count: explicit, then the config, then the environment, then all cores.
pub fn thread_count(explicit: Option<usize>, cfg: &ExperimentConfig) -> Option<usize> {
    explicit.or(cfg.threads).or_else(|| std::env::var(THREADS_VAR).ok().and_then(|s| s.parse().ok())).filter(|&n| n > 0)
}

/// Runs a scenario in its own thread pool without writing anything.
pub fn evaluate(cfg: &ExperimentConfig, threads: Option<usize>, out_dir: &Path, resume: Option<&Path>) -> Result<Report> {
    cfg.check()?;
    let scenario = scenarios::find(&cfg.scenario)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(threads, cfg) {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let ctx = RunContext { cfg, out_dir: out_dir.to_path_buf(), resume: resume.map(Path::to_path_buf) };
    let mut report = Report::default();
    pool.install(|| (scenario.run)(&ctx, &mut report))?;
    report.threads = pool.current_num_threads();
    Ok(report)
}

/// Runs a scenario and writes its outputs.
pub fn execute(cfg: &ExperimentConfig, threads: Option<usize>, out_dir: Option<&Path>, resume: Option<&Path>) -> Result<Outcome> {
    let out_dir =
        out_dir.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results").join(&cfg.scenario));
    let start = Instant::now();
    let report = evaluate(cfg, threads, &out_dir, resume)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    report.write(&out_dir, cfg, wall_seconds)?;
    Ok(Outcome { report, wall_seconds, out_dir })
}
