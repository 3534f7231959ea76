//! The diode model: log-periodic oscillations when `alpha rho > 1`, and the
//! `n / ln n` law of large numbers at `alpha rho = 1`.

use rwre_core::annealed;
use rwre_core::simulate::{EnsembleResult, WalkPlan};
use rwre_core::stats;
use rwre_core::EnvironmentLaw;

use super::kappa::figure2_diode;
use super::{checkpoint_table, label, run_plain, sub_seed};
use crate::config::{Budget, ExperimentConfig};
use crate::error::Result;
use crate::report::{ColumnKind, Plot, ResultTable, Series};
use crate::{Report, RunContext};

fn protocol(name: &str, law: EnvironmentLaw) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(name);
    cfg.budget = Budget { environments: Some(10_000), walks: Some(1), steps: Some(200_000), ..Budget::default() };
    cfg.checkpoints.per_decade = 16;
    cfg.laws = vec![law];
    cfg
}

pub fn preset_oscillations() -> ExperimentConfig {
    protocol("figure2", figure2_diode())
}

fn critical_diode() -> EnvironmentLaw {
    EnvironmentLaw::Diode { alpha: 0.3, rho: 10.0 / 3.0 }
}

pub fn preset_lln() -> ExperimentConfig {
    protocol("diode-lln", critical_diode())
}

/// Runs the ensemble and returns the law with its `(alpha, rho)`.
fn simulate(ctx: &RunContext, default: EnvironmentLaw) -> Result<(EnvironmentLaw, (f64, f64), EnsembleResult)> {
    let cfg = ctx.cfg;
    let law = cfg.laws_or(vec![default])[0].clone();
    let params = match law {
        EnvironmentLaw::Diode { alpha, rho } => (alpha, rho),
        _ => return Err(crate::CliError::Invalid("diode scenarios need a diode law".into())),
    };
    let steps = cfg.steps(200_000);
    let plan = WalkPlan::new(steps).with_checkpoints(cfg.checkpoints.grid(steps));
    let ens = run_plain(&law, cfg.environments(10_000), cfg.walks(1), plan, sub_seed(cfg.seed, 0))?;
    Ok((law, params, ens))
}

/// Growth exponent of the mean displacement, fitted past the lattice regime.
fn growth_exponent(ens: &EnsembleResult) -> Result<stats::ScalingFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = ens.stats.iter().filter(|s| s.step >= 100 && s.mean > 0.0).map(|s| (s.step as f64, s.mean)).unzip();
    Ok(stats::log_log_fit(&x, &y)?)
}

pub fn run_oscillations(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let (law, (alpha, rho), ens) = simulate(ctx, figure2_diode())?;
    let kappa = annealed::kappa(&law)?.kappa;
    let period = rho.ln();
    report.metric("kappa", kappa);
    report.metric("period_ln_rho", period);
    let atoms = annealed::diode_excursion_atoms(alpha, rho, 12);
    report.metric("excursion_log_gap", (atoms[12].0 / atoms[11].0).ln());

    let fit = growth_exponent(&ens)?;
    report.check_abs("growth_exponent", fit.slope, kappa, cfg.tolerance("figure2.exponent_abs", 0.05));
    report.table(checkpoint_table("checkpoints", &ens)?);

    let steps: Vec<u64> = ens.stats.iter().map(|s| s.step).collect();
    let means: Vec<f64> = ens.stats.iter().map(|s| s.mean).collect();
    let spacing_tol = cfg.tolerance("figure2.spacing_abs", 0.3);
    match stats::oscillation_minima(&steps, &means, kappa, period) {
        Ok(osc) => {
            let mut t = ResultTable::new("minima", &[("index", ColumnKind::Int), ("ln_n", ColumnKind::Float)]);
            for (i, &m) in osc.minima.iter().enumerate() {
                t.push(vec![i.into(), m.into()])?;
            }
            report.table(t);
            report.metric("minima_found", osc.minima.len() as f64);
            report.check_abs("minima_spacing", osc.spacing, period, spacing_tol);
            let marks: Vec<(f64, f64)> = osc
                .minima
                .iter()
                .filter_map(|&m| osc.detrended.iter().min_by(|a, b| (a.0 - m).abs().total_cmp(&(b.0 - m).abs())).copied())
                .collect();
            report.plot(Plot::curves(
                "detrended",
                &format!("Detrended mean displacement, {}", label(&law)),
                "ln n",
                "E X_n / n^kappa over its one-period average",
                vec![Series::line("detrended", osc.detrended.clone()), Series::points("minima", marks)],
            ));
            report.plot(Plot::curves("scaled", "E X_n / n^kappa", "ln n", "E X_n / n^kappa", vec![Series::line("scaled", osc.scaled)]));
        }
        Err(e) => {
            report.note(format!("oscillation minima: {e}"));
            report.check("minima_spacing", f64::NAN, format!("{period} ± {spacing_tol}"), false);
        }
    }
    report.plot(
        Plot::curves(
            "mean_displacement",
            "Mean displacement of the diode walk",
            "n",
            "E X_n",
            vec![
                Series::points("simulated", ens.stats.iter().map(|s| (s.step as f64, s.mean)).collect()),
                Series::line("fit", fit.x.iter().map(|&x| (x.exp(), (fit.intercept + fit.slope * x).exp())).collect()),
            ],
        )
        .log_log(),
    );
    Ok(())
}

pub fn run_lln(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let (law, (_, rho), ens) = simulate(ctx, critical_diode())?;
    let kappa = annealed::kappa(&law)?.kappa;
    report.metric("kappa", kappa);
    let ratio = |n: f64, mean: f64| mean * 2.0 * n.ln() / (n * rho.ln());
    let last = ens.stats.last().expect("final checkpoint");
    let n = last.step as f64;
    report.check_abs("lln_ratio", ratio(n, last.mean), 1.0, cfg.tolerance("diode_lln.ratio_abs", 0.1));
    // same limit with ln E X_n in place of ln n, which converges much faster
    report.metric("lln_ratio_self_consistent", last.mean * 2.0 * last.mean.ln() / (n * rho.ln()));
    let steps: Vec<u64> = ens.stats.iter().map(|s| s.step).collect();
    let means: Vec<f64> = ens.stats.iter().map(|s| s.mean).collect();
    let minima = stats::oscillation_minima(&steps, &means, kappa, rho.ln()).map_or(0, |o| o.minima.len());
    report.metric("oscillation_minima_found", minima as f64);
    report.table(checkpoint_table("checkpoints", &ens)?);
    let curve: Vec<(f64, f64)> = ens.stats.iter().filter(|s| s.step >= 10).map(|s| (s.step as f64, ratio(s.step as f64, s.mean))).collect();
    report.plot(Plot::curves("lln_ratio", "E X_n 2 ln n / (n ln rho)", "n", "ratio", vec![Series::line("simulated", curve)]).log_x());
    Ok(())
}
