//! Plain annealed ensembles for user-supplied laws. A step budget stops the
//! run between environments and leaves `partial.json` for `--resume`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rwre_core::annealed;
use rwre_core::simulate::{self, EnsembleConfig, EnsembleOutcome, EnsembleResult, PartialEnsemble, WalkPlan};

use super::{checkpoint_table, label, mean_plot, sub_seed};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::{Report, RunContext};

pub const PARTIAL_FILE: &str = "partial.json";

/// State of an interrupted run: finished laws in config order, then the one in progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialRun {
    /// Hash of the config with the step budget cleared, so a resume may raise it.
    pub config_hash: String,
    pub completed: Vec<EnsembleResult>,
    pub current: Option<PartialEnsemble>,
}

impl PartialRun {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, serde_json::to_vec(self)?).map_err(|e| CliError::io(path, e))
    }
}

fn resume_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.budget.step_budget = None;
    c.hash()
}

pub fn run(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    if cfg.laws.is_empty() {
        return Err(CliError::Invalid("the ensemble scenario needs at least one [[laws]] entry".into()));
    }
    let hash = resume_hash(cfg);
    let mut state = match &ctx.resume {
        Some(path) => {
            let p = PartialRun::load(path)?;
            if p.config_hash != hash {
                return Err(CliError::Invalid(format!("{} was written for a different config", path.display())));
            }
            p
        }
        None => PartialRun { config_hash: hash, completed: Vec::new(), current: None },
    };

    let steps = cfg.steps(100_000);
    let plan = WalkPlan::new(steps).with_checkpoints(cfg.checkpoints.grid(steps));
    let mut remaining = cfg.budget.step_budget;
    while state.completed.len() < cfg.laws.len() {
        let i = state.completed.len();
        let law = &cfg.laws[i];
        let ens_cfg = EnsembleConfig {
            n_env: cfg.environments(100),
            n_walks: cfg.walks(1),
            plan: plan.clone(),
            base_seed: sub_seed(cfg.seed, i as u64),
            step_budget: remaining,
        };
        let resume = state.current.take();
        let before = resume.as_ref().map_or(0, PartialEnsemble::completed);
        match simulate::run_ensemble_resumable(law, &ens_cfg, resume)? {
            EnsembleOutcome::Complete(r) => {
                let used = (r.n_env - before) as u64 * steps * r.n_walks as u64;
                remaining = remaining.map(|b| b.saturating_sub(used));
                state.completed.push(r);
            }
            EnsembleOutcome::Partial(p) => {
                let path = ctx.out_dir.join(PARTIAL_FILE);
                state.current = Some(p);
                state.save(&path)?;
                return Err(CliError::Partial { path });
            }
        }
    }
    let stale = ctx.out_dir.join(PARTIAL_FILE);
    if stale.exists() {
        fs::remove_file(&stale).map_err(|e| CliError::io(&stale, e))?;
    }

    for (i, ens) in state.completed.iter().enumerate() {
        let key = format!("law{}", i + 1);
        report.note(format!("{key}: {}", label(&ens.law)));
        report.table(checkpoint_table(&format!("{key}_checkpoints"), ens)?);
        if let Ok(eta) = annealed::eta(&ens.law) {
            report.metric(&format!("{key}.eta"), eta);
        }
        if let Ok(v) = annealed::velocity(&ens.law) {
            report.metric(&format!("{key}.velocity"), v);
        }
        let last = ens.stats.last().expect("final checkpoint");
        report.metric(&format!("{key}.mean_over_n"), last.mean / last.step as f64);
    }
    let curves: Vec<(String, &EnsembleResult)> = state.completed.iter().map(|e| (label(&e.law), e)).collect();
    report.plot(mean_plot("mean_displacement", "Mean displacement", &curves));
    Ok(())
}
