//! Continuous-time walk among random rates: continued fractions, the
//! effective medium constant and the return probability.

use std::f64::consts::PI;

use rwre_core::annealed;
use rwre_core::ctime::{self, ReturnAsymptote};
use rwre_core::simulate::run_ctrw_ensemble;
use rwre_core::{Atom, Environment, EnvironmentLaw};

use super::{label, sub_seed};
use crate::config::{Budget, ExperimentConfig};
use crate::error::Result;
use crate::report::{ColumnKind, Plot, ResultTable, Series};
use crate::{Report, RunContext};

pub fn preset_ema() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("ctrw-ema");
    cfg.budget = Budget { environments: Some(10_000), walks: Some(10), time: Some(1000.0), ..Budget::default() };
    cfg.laws = vec![two_rates()];
    cfg
}

pub fn preset_subdiffusive() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("ctrw-subdiffusive");
    cfg.budget = Budget { environments: Some(2000), ..Budget::default() };
    cfg.laws = vec![EnvironmentLaw::RatesPowerLaw { alpha: 0.5 }];
    cfg
}

fn two_rates() -> EnvironmentLaw {
    EnvironmentLaw::Rates { atoms: vec![Atom::new(1.0, 0.5), Atom::new(4.0, 0.5)] }
}

/// Geometric grid with `per_decade` points from `lo` to `hi`.
fn s_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let k = ((hi / lo).log10() * per_decade as f64).round() as usize;
    (0..=k).map(|i| lo * 10f64.powf(i as f64 / per_decade as f64)).collect()
}

fn laplace_outputs(report: &mut Report, law: &EnvironmentLaw, fit: &ReturnAsymptote) -> Result<()> {
    let mut t = ResultTable::new(
        "laplace",
        &[("s", ColumnKind::Float), ("mean_p00", ColumnKind::Float), ("std_error", ColumnKind::Float), ("certified", ColumnKind::Float)],
    );
    for r in &fit.table {
        t.push(vec![r.s.into(), r.mean_p00.into(), r.std_error.into(), r.certified.into()])?;
    }
    report.table(t);
    report.metric("fit.s_lo", fit.fit_window.0);
    report.metric("fit.s_hi", fit.fit_window.1);
    report.metric("fit.laplace_slope", fit.slope);
    let line = fit.table.iter().map(|r| (r.s, (fit.intercept + fit.slope * r.s.ln()).exp())).collect();
    report.plot(
        Plot::curves(
            "laplace_p00",
            &format!("Annealed Laplace transform of p_00, {}", label(law)),
            "s",
            "E p_00(s)",
            vec![Series::points("continued fractions", fit.table.iter().map(|r| (r.s, r.mean_p00)).collect()), Series::line("fit", line)],
        )
        .log_log(),
    );
    Ok(())
}

pub fn run_ema(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;

    // constant rates: the fraction against its fixed point
    let mut worst: f64 = 0.0;
    for &c in &[0.5, 1.0, 2.0] {
        let mut env = Environment::realize(&EnvironmentLaw::Rates { atoms: vec![Atom::new(c, 1.0)] }, cfg.seed, -1..=1)?;
        for &s in &[1e-4, 1e-2, 1.0, 10.0] {
            let g = ctime::g_continued_fraction(&mut env, s, ctime::DEFAULT_DEPTH, 1e-13)?;
            let exact = ctime::constant_rate_g(c, s);
            worst = worst.max((g.plus - exact).abs().max((g.minus - exact).abs()) / exact);
        }
    }
    let cf_tol = cfg.tolerance("ctrw.fraction_rel", 1e-10);
    report.check("constant_rate_fraction_rel_error", worst, format!("<= {cf_tol:e}"), worst <= cf_tol);

    let law = cfg.laws_or(vec![two_rates()])[0].clone();
    let cond = annealed::conductivity_and_ema(&law)?;
    report.metric("c_star", cond.c_star);

    // annealed small-s asymptote
    let grid = s_grid(1e-5, 1e-1, 2);
    let fit = ctime::annealed_return_asymptote(&law, &grid, 2000, ctime::DEFAULT_DEPTH, sub_seed(cfg.seed, 0))?;
    laplace_outputs(report, &law, &fit)?;
    report.check_abs("laplace_slope", fit.slope, -0.5, cfg.tolerance("ctrw.slope_abs", 0.05));
    report.check_rel("implied_c_star", fit.implied_c_star, cond.c_star, cfg.tolerance("ctrw.c_star_rel", 0.05));

    // simulated return probability against the effective medium
    let t_max = cfg.time(1000.0);
    let times: Vec<f64> = (5..=10).map(|k| t_max * k as f64 / 10.0).collect();
    let ens = run_ctrw_ensemble(&law, cfg.environments(10_000), cfg.walks(10), t_max, &times, &[], sub_seed(cfg.seed, 1))?;
    let scaled: Vec<(f64, f64)> =
        ens.time_checkpoints.iter().zip(&ens.return_fraction).map(|(&t, &p)| (t, p * (4.0 * PI * cond.c_star * t).sqrt())).collect();
    let mut t = ResultTable::new(
        "return_probability",
        &[("t", ColumnKind::Float), ("p00", ColumnKind::Float), ("scaled", ColumnKind::Float), ("mean_square", ColumnKind::Float)],
    );
    for ((&(tt, sc), &p), &ms) in scaled.iter().zip(&ens.return_fraction).zip(&ens.mean_square) {
        t.push(vec![tt.into(), p.into(), sc.into(), ms.into()])?;
    }
    report.table(t);
    let avg = scaled.iter().map(|p| p.1).sum::<f64>() / scaled.len() as f64;
    report.metric("mean_events_per_walk", ens.mean_events);
    report.check_abs("p00_times_sqrt_4pi_c_t", avg, 1.0, cfg.tolerance("ctrw.p00_abs", 0.1));
    report.plot(Plot::curves(
        "p00_scaled",
        "p_00(t) sqrt(4 pi c_* t)",
        "t",
        "scaled return probability",
        vec![Series::points("simulated", scaled)],
    ));

    // the effective-medium constant against the first-order pair constant
    let (sampled, se) = annealed::delta_one_sampled(&law, 1_000_000, sub_seed(cfg.seed, 2))?;
    report.metric("delta_one", cond.delta_one);
    report.metric("delta_one_sampled", sampled);
    report.metric("delta_one_sampled_se", se);
    report.check(
        "delta_star_exceeds_delta_one",
        cond.delta_star - cond.delta_one,
        format!("> 0 (delta_star {:.6})", cond.delta_star),
        cond.delta_star > cond.delta_one,
    );
    Ok(())
}

pub fn run_subdiffusive(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let law = cfg.laws_or(vec![EnvironmentLaw::RatesPowerLaw { alpha: 0.5 }])[0].clone();
    let EnvironmentLaw::RatesPowerLaw { alpha } = law else {
        return Err(crate::CliError::Invalid("ctrw-subdiffusive needs a power-law rate law".into()));
    };
    let exps = annealed::subdiffusive_exponents(alpha);
    let grid = s_grid(1e-5, 1e-1, 2);
    let fit = ctime::annealed_return_asymptote(&law, &grid, cfg.environments(2000), ctime::DEFAULT_DEPTH, sub_seed(cfg.seed, 0))?;
    laplace_outputs(report, &law, &fit)?;
    report.metric("expected_laplace_slope", exps.return_probability - 1.0);
    report.metric("implied_time_exponent", fit.implied_time_exponent);
    report.check_abs(
        "time_exponent",
        fit.implied_time_exponent,
        -exps.return_probability,
        cfg.tolerance("subdiffusive.exponent_abs", 0.05),
    );
    Ok(())
}
