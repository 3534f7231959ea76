//! Reversible walk among random bond weights: recurrence and the diffusive limit.

use rwre_core::annealed;
use rwre_core::simulate::WalkPlan;
use rwre_core::stats;
use rwre_core::{Atom, EnvironmentLaw};

use super::{checkpoint_table, label, run_plain, sub_seed};
use crate::config::{Budget, ExperimentConfig};
use crate::error::Result;
use crate::report::{Plot, Series};
use crate::{Report, RunContext};

pub fn preset() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("bonds");
    cfg.budget = Budget { environments: Some(1000), walks: Some(1), steps: Some(10_000_000), ..Budget::default() };
    cfg.checkpoints.explicit = Some(vec![10_000, 100_000, 1_000_000, 10_000_000]);
    cfg.laws = vec![default_law()];
    cfg
}

fn default_law() -> EnvironmentLaw {
    EnvironmentLaw::BondWeights { atoms: vec![Atom::new(1.0, 0.5), Atom::new(4.0, 0.5)] }
}

pub fn run(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let law = cfg.laws_or(vec![default_law()])[0].clone();
    let cond = annealed::conductivity_and_ema(&law)?;
    report.metric("mean_c", cond.mean_c);
    report.metric("mean_inv_c", cond.mean_inv_c);
    report.metric("sigma2", cond.sigma2_bonds);
    if law == default_law() {
        // E c^-1 = 5/8 is exact in binary, so its inverse rounds to the literal 1.6
        report.check("c_bar_exact", cond.c_bar, "1.6 exactly", cond.c_bar == 1.6);
    }

    let steps = cfg.steps(10_000_000);
    let grid = cfg.checkpoints.grid(steps);
    let ens = run_plain(&law, cfg.environments(1000), cfg.walks(1), WalkPlan::new(steps).with_checkpoints(grid), sub_seed(cfg.seed, 0))?;
    report.table(checkpoint_table("checkpoints", &ens)?);

    let returns: Vec<f64> = ens.stats.iter().map(|s| s.mean_returns).collect();
    let increasing = returns.windows(2).all(|w| w[1] > w[0]);
    let last = *returns.last().expect("checkpoints");
    report.check("returns_strictly_increasing", last, "strictly increasing over the grid", increasing);

    let n = ens.steps as f64;
    let xs: Vec<f64> = ens.positions.last().expect("final positions").iter().map(|&x| x as f64).collect();
    let ks = stats::ks_normal(&xs, 0.0, n * cond.sigma2_bonds, cfg.tolerance("bonds.level", 0.05))?;
    report.metric("ks.distance", ks.distance);
    report.check("ks_normal_passes", ks.p_value, format!("p-value > {}", ks.level), ks.pass);
    let (_, var) = stats::mean_variance(&xs);
    report.metric("empirical_sigma2", var / n);

    report.plot(
        Plot::curves(
            "returns",
            &format!("Mean number of returns to the origin, {}", label(&law)),
            "n",
            "mean returns",
            vec![Series::points("simulated", ens.stats.iter().map(|s| (s.step as f64, s.mean_returns)).collect())],
        )
        .log_log(),
    );
    Ok(())
}
