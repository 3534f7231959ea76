//! Balanced walks on Z^2 and Z^3: coordinates are martingales, and returns
//! to the origin keep accumulating only in the plane.

use rwre_core::simulate::{run_balanced_ensemble, BalancedLaw};

use super::sub_seed;
use crate::config::{Budget, ExperimentConfig};
use crate::error::Result;
use crate::report::{ColumnKind, Plot, ResultTable, Series};
use crate::{Report, RunContext};

const HORIZONS: [u64; 3] = [10_000, 100_000, 1_000_000];

pub fn preset() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("balanced");
    cfg.budget = Budget { walks: Some(1000), steps: Some(1_000_000), ..Budget::default() };
    cfg.balanced = default_laws();
    cfg
}

fn default_laws() -> Vec<BalancedLaw> {
    vec![BalancedLaw { dim: 2, disorder: 0.6 }, BalancedLaw { dim: 3, disorder: 0.6 }]
}

pub fn run(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let laws = if cfg.balanced.is_empty() { default_laws() } else { cfg.balanced.clone() };
    let steps = cfg.steps(1_000_000);
    let grid = cfg.checkpoints.explicit.clone().unwrap_or_else(|| HORIZONS.iter().copied().filter(|&h| h <= steps).collect());
    let sigmas = cfg.tolerance("balanced.sigmas", 3.0);
    let split = cfg.tolerance("balanced.increment_ratio", 0.5);

    let mut t = ResultTable::new(
        "returns",
        &[
            ("dim", ColumnKind::Int),
            ("disorder", ColumnKind::Float),
            ("n", ColumnKind::Int),
            ("mean_returns", ColumnKind::Float),
            ("mean_square_norm", ColumnKind::Float),
        ],
    );
    let mut curves = Vec::new();
    for (i, law) in laws.iter().enumerate() {
        let ens = run_balanced_ensemble(law, cfg.walks(1000), steps, &grid, sub_seed(cfg.seed, i as u64))?;
        for ((&n, &r), &m2) in ens.checkpoints.iter().zip(&ens.mean_returns).zip(&ens.mean_square_norm) {
            t.push(vec![law.dim.into(), law.disorder.into(), n.into(), r.into(), m2.into()])?;
        }
        let key = format!("d{}", law.dim);
        let worst = (0..law.dim).map(|a| ens.axis_mean[a].abs() / ens.axis_std_error[a]).fold(0.0, f64::max);
        report.check(&format!("{key}.axis_means_in_se"), worst, format!("<= {sigmas}"), worst <= sigmas);

        // equal decades: logarithmic growth keeps the increments level, a
        // transient walk's increments shrink geometrically
        let r = &ens.mean_returns;
        let increasing = r.windows(2).all(|w| w[1] > w[0]);
        let ratio = if r.len() >= 3 { (r[r.len() - 1] - r[r.len() - 2]) / (r[1] - r[0]) } else { f64::NAN };
        report.metric(&format!("{key}.increment_ratio"), ratio);
        match law.dim {
            2 => {
                report.check(&format!("{key}.returns_increasing"), r[r.len() - 1], "strictly increasing", increasing);
                report.check(&format!("{key}.returns_keep_growing"), ratio, format!(">= {split}"), ratio >= split);
            }
            _ => {
                report.check(&format!("{key}.returns_saturate"), ratio, format!("<= {split}"), ratio <= split);
            }
        }
        curves.push(Series::line(&format!("d = {}", law.dim), ens.checkpoints.iter().map(|&n| n as f64).zip(r.iter().copied()).collect()));
    }
    report.table(t);
    report.plot(Plot::curves("returns", "Mean returns to the origin", "n", "mean returns", curves).log_x());
    Ok(())
}
