//! Non-Gaussian and Gaussian fluctuation regimes of transient walks.

use rayon::prelude::*;
use rwre_core::annealed;
use rwre_core::quenched;
use rwre_core::series;
use rwre_core::simulate::{env_seed, WalkPlan};
use rwre_core::stats;
use rwre_core::Environment;

use super::velocity::{large_kappa_law, zero_speed_law};
use super::{label, run_plain, sub_seed};
use crate::config::{Budget, ExperimentConfig};
use crate::error::Result;
use crate::report::{ColumnKind, Plot, ResultTable, Series};
use crate::{Report, RunContext};

/// Seven levels, three per decade, from 10^2 to 10^4.
const LEVELS: [i64; 7] = [100, 215, 464, 1000, 2154, 4642, 10_000];

pub fn preset_stable() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("stable-scaling");
    cfg.budget = Budget { environments: Some(10_000), walks: Some(1), steps: Some(3_000_000), ..Budget::default() };
    cfg.laws = vec![zero_speed_law()];
    cfg
}

pub fn run_stable(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let law = cfg.laws_or(vec![zero_speed_law()])[0].clone();
    let kappa = annealed::kappa(&law)?.kappa;
    report.metric("kappa", kappa);

    // medians of T_n: means are infinite when kappa < 1
    let plan = WalkPlan::new(cfg.steps(3_000_000)).with_levels(LEVELS.to_vec()).stopping_at_last_level();
    let ens = run_plain(&law, cfg.environments(10_000), cfg.walks(1), plan, sub_seed(cfg.seed, 0))?;
    let fit = stats::hitting_scaling(&ens)?;
    let mut t = ResultTable::new(
        "hitting_times",
        &[
            ("level", ColumnKind::Int),
            ("reached", ColumnKind::Int),
            ("q25", ColumnKind::Float),
            ("median", ColumnKind::Float),
            ("q75", ColumnKind::Float),
        ],
    );
    for s in &ens.level_stats {
        t.push(vec![s.level.into(), s.reached.into(), s.q25.into(), s.median.into(), s.q75.into()])?;
    }
    report.table(t);
    report.metric("hitting.slope_ci_lo", fit.ci.0);
    report.metric("hitting.slope_ci_hi", fit.ci.1);
    report.check_rel("hitting.slope_vs_inverse_kappa", fit.slope, 1.0 / kappa, cfg.tolerance("stable.slope_rel", 0.10));
    let line: Vec<(f64, f64)> = fit.x.iter().map(|&x| (x.exp(), (fit.intercept + fit.slope * x).exp())).collect();
    let slope_line: Vec<(f64, f64)> = fit.x.iter().map(|&x| (x.exp(), (fit.y[0] + (x - fit.x[0]) / kappa).exp())).collect();
    report.plot(
        Plot::curves(
            "hitting_median",
            &format!("Median hitting times, {}", label(&law)),
            "level n",
            "median T_n",
            vec![
                Series::points("median T_n", fit.x.iter().zip(&fit.y).map(|(x, y)| (x.exp(), y.exp())).collect()),
                Series::line("least squares", line),
                Series::line("slope 1/kappa", slope_line),
            ],
        )
        .log_log(),
    );

    // tail of the mean progeny M_0, one value per environment
    let n_env = 100_000usize;
    let base = sub_seed(cfg.seed, 1);
    let m0: Vec<series::SeriesValue> = (0..n_env)
        .into_par_iter()
        .map(|e| {
            let mut env = Environment::realize(&law, env_seed(base, e as u64), -1..=64)?;
            Ok(quenched::progeny_m0(&mut env, 10_000, series::DEFAULT_TOL)?)
        })
        .collect::<Result<_>>()?;
    let unconverged = m0.iter().filter(|s| !s.converged).count();
    let samples: Vec<f64> = m0.iter().map(|s| s.partial).collect();
    let tail = stats::tail_index(&samples)?;
    report.metric("m0.unconverged", unconverged as f64);
    report.metric("m0.hill_index", tail.index);
    report.metric("m0.order_statistics", tail.k as f64);
    report.check(
        "m0.tail_ci_contains_kappa",
        tail.index,
        format!("CI ({:.4}, {:.4}) contains {kappa:.4}", tail.ci.0, tail.ci.1),
        tail.ci.0 <= kappa && kappa <= tail.ci.1,
    );
    let mut sorted = samples;
    sorted.sort_by(|a, b| b.total_cmp(a));
    let survival: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .filter(|(i, _)| (i + 1).is_power_of_two() || (i + 1) % 1000 == 0)
        .map(|(i, &v)| (v, (i + 1) as f64 / n_env as f64))
        .collect();
    report.plot(
        Plot::curves("m0_survival", "Tail of the mean progeny M_0", "x", "P(M_0 > x)", vec![Series::points("empirical", survival)])
            .log_log(),
    );
    Ok(())
}

pub fn preset_clt() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("clt");
    cfg.budget = Budget { environments: Some(4000), walks: Some(1), steps: Some(1_000_000), ..Budget::default() };
    cfg.laws = vec![large_kappa_law()];
    cfg
}

pub fn run_clt(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let law = cfg.laws_or(vec![large_kappa_law()])[0].clone();
    let n = cfg.steps(1_000_000);
    let v = annealed::velocity(&law)?;
    report.metric("kappa", annealed::kappa(&law)?.kappa);
    report.metric("velocity", v);
    let ens = run_plain(&law, cfg.environments(4000), cfg.walks(1), WalkPlan::new(n), sub_seed(cfg.seed, 0))?;
    let xs: Vec<f64> = ens.positions.last().expect("final position").iter().map(|&x| x as f64).collect();
    let center = n as f64 * v;
    // the variance is fitted: its closed form is not needed for the shape test
    let var = xs.iter().map(|x| (x - center).powi(2)).sum::<f64>() / xs.len() as f64;
    let (mean, _) = stats::mean_variance(&xs);
    report.metric("mean_minus_nv_over_sqrt_n", (mean - center) / (n as f64).sqrt());
    report.metric("fitted_sigma2", var / n as f64);
    let ks = stats::ks_normal(&xs, center, var, cfg.tolerance("clt.level", 0.05))?;
    report.metric("ks.p_value", ks.p_value);
    report.check("ks_normal_passes", ks.distance, format!("p-value {:.3} > {}", ks.p_value, ks.level), ks.pass);
    let max_d = cfg.tolerance("clt.max_distance", 0.02);
    report.check("ks_distance", ks.distance, format!("< {max_d}"), ks.distance < max_d);

    let sd = var.sqrt();
    let mut z: Vec<f64> = xs.iter().map(|x| (x - center) / sd).collect();
    z.sort_by(f64::total_cmp);
    let m = z.len() as f64;
    let ecdf: Vec<(f64, f64)> = z.iter().enumerate().step_by(8).map(|(i, &x)| (x, (i + 1) as f64 / m)).collect();
    let phi: Vec<(f64, f64)> = (0..=80).map(|i| -4.0 + 0.1 * i as f64).map(|x| (x, stats::normal_cdf(x))).collect();
    report.plot(Plot::curves(
        "standardized_cdf",
        "Standardized displacement against the normal law",
        "(X_n - n v) / sigma",
        "distribution function",
        vec![Series::points("empirical", ecdf), Series::line("normal", phi)],
    ));
    Ok(())
}
