//! Localization of the recurrent walk on the ln^2 n scale.

use rwre_core::annealed;
use rwre_core::simulate::WalkPlan;
use rwre_core::stats;
use rwre_core::EnvironmentLaw;

use super::{run_plain, sub_seed};
use crate::config::{Budget, ExperimentConfig};
use crate::error::Result;
use crate::report::{ColumnKind, Plot, ResultTable, Series};
use crate::{Report, RunContext};

pub fn preset() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("sinai");
    cfg.budget = Budget { environments: Some(1000), walks: Some(1), steps: Some(10_000_000), ..Budget::default() };
    cfg.checkpoints.explicit = Some(vec![10_000, 100_000, 1_000_000, 10_000_000]);
    cfg.laws = vec![default_law()];
    cfg
}

fn default_law() -> EnvironmentLaw {
    EnvironmentLaw::TwoPointSites { alpha: 0.5, beta: 0.3 }
}

/// Composite Simpson rule on `[0, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, b: f64, n: usize) -> f64 {
    let h = b / n as f64;
    let inner: f64 = (1..n).map(|i| f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(0.0) + inner + f(b))
}

pub fn run(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let exact_tol = cfg.tolerance("sinai.density_abs", 1e-8);

    // the limit density itself
    let g0 = annealed::sinai_density(0.0);
    let g0_limit = annealed::sinai_density(2e-3);
    // G' decays like e^{-pi^2 |x| / 8}; beyond 40 the mass is below 1e-17
    let mass = 2.0 * simpson(annealed::sinai_density, 40.0, 400_000);
    report.check_abs("density_at_zero", g0, 0.5, exact_tol);
    report.metric("density_just_off_zero", g0_limit);
    report.check_abs("density_total_mass", mass, 1.0, exact_tol);
    report.check_abs("cdf_total_mass", annealed::sinai_cdf(40.0) - annealed::sinai_cdf(-40.0), 1.0, exact_tol);
    let degenerate = EnvironmentLaw::TwoPointSites { alpha: 0.5, beta: 0.5 };
    let probe = run_plain(&degenerate, 2, 1, WalkPlan::new(1000).with_checkpoints(vec![10, 100, 1000]), 1)?;
    let rejected = stats::sinai_rescale(&probe, 1.0, 1).is_err();
    report.check("degenerate_law_rejected", rejected as u8 as f64, "rejected", rejected);

    let law = cfg.laws_or(vec![default_law()])[0].clone();
    let sigma2 = stats::sinai_sigma2(&law)?;
    report.metric("sigma2", sigma2);
    let steps = cfg.steps(10_000_000);
    let grid = cfg.checkpoints.grid(steps);
    let min_step = grid.first().copied().unwrap_or(1);
    let ens = run_plain(&law, cfg.environments(1000), cfg.walks(1), WalkPlan::new(steps).with_checkpoints(grid), sub_seed(cfg.seed, 0))?;
    let rep = stats::sinai_rescale(&ens, sigma2, min_step)?;

    let mut t = ResultTable::new(
        "sinai_grid",
        &[("n", ColumnKind::Int), ("ln2_n", ColumnKind::Float), ("mean_max_abs", ColumnKind::Float), ("ks_distance", ColumnKind::Float)],
    );
    for r in &rep.rows {
        t.push(vec![r.n.into(), (r.n as f64).ln().powi(2).into(), r.mean_max_abs.into(), r.ks_distance.into()])?;
    }
    report.table(t);
    let slope_tol = cfg.tolerance("sinai.slope_abs", 0.3);
    report.metric("max_slope_ci_lo", rep.max_slope.ci.0);
    report.metric("max_slope_ci_hi", rep.max_slope.ci.1);
    report.check_abs("max_abs_slope_vs_lnln", rep.max_slope.slope, 2.0, slope_tol);
    let last_ks = rep.rows.last().map_or(f64::NAN, |r| r.ks_distance);
    report.check("ks_decreasing", last_ks, "strictly decreasing along the grid", rep.ks_decreasing);

    let mut sorted = rep.rescaled.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let ecdf: Vec<(f64, f64)> = sorted.iter().enumerate().map(|(i, &x)| (x, (i + 1) as f64 / m)).collect();
    let lim: Vec<(f64, f64)> = (0..=120).map(|i| -3.0 + 0.05 * i as f64).map(|x| (x, annealed::sinai_cdf(x))).collect();
    report.plot(Plot::curves(
        "rescaled_cdf",
        "sigma^2 X_n / ln^2 n at the largest n",
        "sigma^2 X_n / ln^2 n",
        "distribution function",
        vec![Series::points("simulated", ecdf), Series::line("limit law", lim)],
    ));
    report.plot(
        Plot::curves(
            "max_growth",
            "Mean running maximum of |X| against ln n",
            "ln n",
            "E max |X_k|",
            vec![Series::points("simulated", rep.rows.iter().map(|r| ((r.n as f64).ln(), r.mean_max_abs)).collect())],
        )
        .log_log(),
    );
    Ok(())
}
