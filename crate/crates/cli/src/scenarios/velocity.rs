//! Ballistic speeds, the two slowdown paradoxes, and the invariant density of
//! the environment seen from the walker.

use rayon::prelude::*;
use rwre_core::annealed;
use rwre_core::series;
use rwre_core::simulate::{env_seed, WalkPlan};
use rwre_core::stats;
use rwre_core::{Atom, Environment, EnvironmentLaw};

use super::{checkpoint_table, constant, label, mean_plot, run_plain, sub_seed};
use crate::config::{Budget, ExperimentConfig};
use crate::error::Result;
use crate::report::{ColumnKind, Plot, ResultTable, Series};
use crate::{Report, RunContext};

pub fn preset() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("velocity");
    cfg.budget = Budget { environments: Some(200), walks: Some(1), steps: Some(1_000_000), ..Budget::default() };
    cfg.checkpoints.per_decade = 4;
    cfg.laws = default_laws();
    cfg
}

fn default_laws() -> Vec<EnvironmentLaw> {
    vec![
        EnvironmentLaw::TwoPointSites { alpha: 0.8, beta: 0.7 },
        constant(0.6),
        EnvironmentLaw::TwoPointSites { alpha: 0.9, beta: 0.6 },
        large_kappa_law(),
        EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.7, 0.5), Atom::new(0.55, 0.3), Atom::new(0.45, 0.2)] },
    ]
}

/// `p = 0.8` w.p. 0.9, `p = 0.4` w.p. 0.1: ballistic with `kappa ≈ 5.7`.
pub(crate) fn large_kappa_law() -> EnvironmentLaw {
    EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.8, 0.9), Atom::new(0.4, 0.1)] }
}

/// `p = 0.9` w.p. 0.7, `p = 0.2` w.p. 0.3: transient to the right with zero speed (`kappa ≈ 0.77`).
pub(crate) fn zero_speed_law() -> EnvironmentLaw {
    EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.9, 0.7), Atom::new(0.2, 0.3)] }
}

/// Positive mean drift, yet `eta > 0`.
fn drift_paradox_law() -> EnvironmentLaw {
    EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.95, 0.6), Atom::new(0.01, 0.4)] }
}

fn is_constant(law: &EnvironmentLaw) -> Option<f64> {
    match law {
        EnvironmentLaw::DiscreteSites { atoms } if atoms.len() == 1 => Some(atoms[0].value),
        _ => None,
    }
}

pub fn run(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let steps = cfg.steps(1_000_000);
    let n_env = cfg.environments(200);
    let n_walks = cfg.walks(1);
    let rel = cfg.tolerance("velocity.rel", 0.02);
    let rel_constant = cfg.tolerance("velocity.constant_rel", 0.005);

    let mut speeds = ResultTable::new(
        "speeds",
        &[
            ("law", ColumnKind::Text),
            ("mean_rho", ColumnKind::Float),
            ("kappa", ColumnKind::Float),
            ("v_formula", ColumnKind::Float),
            ("mean_drift", ColumnKind::Float),
            ("slope", ColumnKind::Float),
            ("ci_lo", ColumnKind::Float),
            ("ci_hi", ColumnKind::Float),
            ("relative_error", ColumnKind::Float),
        ],
    );
    let mut curves = Vec::new();
    let laws = cfg.laws_or(default_laws());
    for (i, law) in laws.iter().enumerate() {
        let v = annealed::velocity(law)?;
        let plan = WalkPlan::new(steps).with_checkpoints(cfg.checkpoints.grid(steps));
        let ens = run_plain(law, n_env, n_walks, plan, sub_seed(cfg.seed, i as u64))?;
        let fit = stats::velocity_fit(&ens, steps / 100)?;
        let err = fit.slope / v - 1.0;
        speeds.push(vec![
            label(law).into(),
            annealed::mean_rho(law)?.into(),
            annealed::kappa(law)?.kappa.into(),
            v.into(),
            annealed::mean_drift(law)?.into(),
            fit.slope.into(),
            fit.ci.0.into(),
            fit.ci.1.into(),
            err.into(),
        ])?;
        let key = format!("law{}", i + 1);
        report.check_rel(&format!("{key}.slope_vs_formula"), fit.slope, v, rel);
        if let Some(p) = is_constant(law) {
            report.check_rel(&format!("{key}.constant_slope_vs_p_minus_q"), fit.slope, 2.0 * p - 1.0, rel_constant);
        }
        report.table(checkpoint_table(&format!("{key}_checkpoints"), &ens)?);
        curves.push((label(law), ens));
    }
    report.table(speeds);
    let refs: Vec<(String, &_)> = curves.iter().map(|(l, e)| (l.clone(), e)).collect();
    report.plot(mean_plot("mean_displacement", "Ballistic walks: mean displacement", &refs));

    slowdown(ctx, report)?;
    seen_from_walker(ctx, report)
}

fn slowdown(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let runs = 200;
    let positive_frac = cfg.tolerance("slowdown.frequency", 0.95);
    let max_speed = cfg.tolerance("slowdown.max_speed", 0.01);

    // transient to the right at zero speed
    let law = zero_speed_law();
    let n = 1_000_000;
    let plan = WalkPlan::new(n).with_checkpoints(cfg.checkpoints.grid(n));
    let ens = run_plain(&law, runs, 1, plan, sub_seed(cfg.seed, 100))?;
    let last = ens.stats.last().expect("final checkpoint");
    report.metric("zero_speed.eta", annealed::eta(&law)?);
    report.metric("zero_speed.mean_rho", annealed::mean_rho(&law)?);
    report.metric("zero_speed.kappa", annealed::kappa(&law)?.kappa);
    let fit = stats::velocity_fit(&ens, n / 100)?;
    report.metric("zero_speed.slope", fit.slope);
    report.metric("zero_speed.slope_ci_lo", fit.ci.0);
    report.metric("zero_speed.slope_ci_hi", fit.ci.1);
    report.check("zero_speed.frac_positive", last.frac_positive, format!(">= {positive_frac}"), last.frac_positive >= positive_frac);
    let speed = ens.positions.last().expect("final checkpoint").iter().map(|&x| (x as f64).abs()).sum::<f64>() / runs as f64 / n as f64;
    report.check("zero_speed.mean_abs_x_over_n", speed, format!("<= {max_speed}"), speed <= max_speed);
    report.table(checkpoint_table("zero_speed_checkpoints", &ens)?);

    // positive mean drift, yet transient to the left
    let law = drift_paradox_law();
    let n = 100_000;
    let plan = WalkPlan::new(n).with_checkpoints(cfg.checkpoints.grid(n));
    let ens2 = run_plain(&law, runs, 1, plan, sub_seed(cfg.seed, 101))?;
    let last = ens2.stats.last().expect("final checkpoint");
    report.metric("drift_paradox.mean_drift", annealed::mean_drift(&law)?);
    report.metric("drift_paradox.eta", annealed::eta(&law)?);
    report.check("drift_paradox.frac_negative", last.frac_negative, format!(">= {positive_frac}"), last.frac_negative >= positive_frac);
    report.table(checkpoint_table("drift_paradox_checkpoints", &ens2)?);
    report.plot(
        Plot::curves(
            "slowdown_median",
            "Slowdown laws: median displacement",
            "n",
            "median X_n",
            vec![
                Series::line(&label(&zero_speed_law()), ens.stats.iter().map(|s| (s.step as f64, s.median)).collect()),
                Series::line(&label(&drift_paradox_law()), ens2.stats.iter().map(|s| (s.step as f64, s.median)).collect()),
            ],
        )
        .log_x(),
    );
    Ok(())
}

/// `E f = 1`, `E (p_0 - q_0) f = v` and `E Δ(0) = 0` over independent environments.
/// The checks use the light-tailed law. Under the two-point law f has infinite
/// variance, so its means are only reported.
fn seen_from_walker(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let mut t = ResultTable::new(
        "seen_from_walker",
        &[
            ("law", ColumnKind::Text),
            ("quantity", ColumnKind::Text),
            ("mean", ColumnKind::Float),
            ("std_error", ColumnKind::Float),
            ("target", ColumnKind::Float),
        ],
    );
    let laws = [("checked", large_kappa_law()), ("heavy", EnvironmentLaw::TwoPointSites { alpha: 0.8, beta: 0.7 })];
    for (i, (key, law)) in laws.iter().enumerate() {
        let v = annealed::velocity(law)?;
        let m = walker_means(law, 100_000, sub_seed(cfg.seed, 200 + i as u64))?;
        let name = label(law);
        for (q, (mean, se), target) in [("f", m[0], 1.0), ("(p0-q0) f", m[1], v), ("delta(0)", m[2], 0.0)] {
            t.push(vec![name.as_str().into(), q.into(), mean.into(), se.into(), target.into()])?;
        }
        if *key == "checked" {
            report.check_abs("walker_view.mean_f", m[0].0, 1.0, cfg.tolerance("walker_view.f_abs", 0.01));
            report.check_rel("walker_view.mean_drift_f", m[1].0, v, cfg.tolerance("walker_view.drift_rel", 0.01));
            report.check_abs("walker_view.mean_delta", m[2].0, 0.0, cfg.tolerance("walker_view.delta_abs", 0.01));
        } else {
            report.metric("walker_view.heavy.mean_f", m[0].0);
            report.metric("walker_view.heavy.mean_drift_f_over_v", m[1].0 / v);
            report.metric("walker_view.heavy.mean_delta", m[2].0);
        }
    }
    report.table(t);
    Ok(())
}

/// Means and standard errors of `f`, `(p_0 - q_0) f` and `Δ(0)`.
fn walker_means(law: &EnvironmentLaw, n_env: usize, base: u64) -> Result<[(f64, f64); 3]> {
    let samples: Vec<[f64; 3]> = (0..n_env)
        .into_par_iter()
        .map(|e| {
            let mut env = Environment::realize(law, env_seed(base, e as u64), -64..=64)?;
            let f = annealed::invariant_density_f(&mut env, series::DEFAULT_DEPTH, series::DEFAULT_TOL)?;
            let p0 = env.p(0)?;
            let delta = annealed::harmonic_increment(&mut env, 0, series::DEFAULT_DEPTH, series::DEFAULT_TOL)?;
            Ok([f, (2.0 * p0 - 1.0) * f, delta])
        })
        .collect::<Result<_>>()?;
    let n = n_env as f64;
    Ok(std::array::from_fn(|k| {
        let (m, var) = stats::mean_variance(&samples.iter().map(|s| s[k]).collect::<Vec<_>>());
        (m, (var / n).sqrt())
    }))
}
