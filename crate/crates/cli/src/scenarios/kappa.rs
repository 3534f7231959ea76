//! Critical exponents: root of `E rho^u = 1`, closed forms, and the minimum of `I(eps)/eps`.

use rwre_core::annealed;
use rwre_core::quenched;
use rwre_core::EnvironmentLaw;

use super::{label, velocity::zero_speed_law};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{ColumnKind, Plot, ResultTable, Series};
use crate::{Report, RunContext};

pub fn preset() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("kappa");
    cfg.laws = default_laws();
    cfg
}

pub(crate) fn figure2_diode() -> EnvironmentLaw {
    EnvironmentLaw::Diode { alpha: 0.3, rho: 1.0 / 0.09 }
}

fn default_laws() -> Vec<EnvironmentLaw> {
    vec![EnvironmentLaw::TwoPointSites { alpha: 0.8, beta: 0.7 }, zero_speed_law(), figure2_diode()]
}

/// Closed form of the exponent where one exists.
fn closed_form(law: &EnvironmentLaw) -> Option<f64> {
    match *law {
        // 0.8 (3/7)^k + 0.2 (7/3)^k = 1 is a quadratic in (7/3)^k with roots 1 and 4
        EnvironmentLaw::TwoPointSites { alpha, beta } if alpha == 0.8 && beta == 0.7 => Some(4f64.ln() / (7.0f64 / 3.0).ln()),
        EnvironmentLaw::Diode { alpha, rho } => Some(-alpha.ln() / rho.ln()),
        _ => None,
    }
}

pub fn run(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let root_tol = cfg.tolerance("kappa.closed_form_abs", 1e-10);
    let rate_tol = cfg.tolerance("kappa.rate_abs", 1e-6);
    let mut table = ResultTable::new(
        "kappa",
        &[
            ("law", ColumnKind::Text),
            ("eta", ColumnKind::Float),
            ("kappa", ColumnKind::Float),
            ("bracket_lo", ColumnKind::Float),
            ("bracket_hi", ColumnKind::Float),
            ("closed_form", ColumnKind::Float),
            ("min_rate_over_eps", ColumnKind::Float),
        ],
    );
    let mut cgf_curves = Vec::new();
    let mut rate_curves = Vec::new();
    for (i, law) in cfg.laws_or(default_laws()).iter().enumerate() {
        let key = format!("law{}", i + 1);
        let k = annealed::kappa(law)?;
        let from_rate = annealed::kappa_from_rate(law)?;
        let exact = closed_form(law);
        table.push(vec![
            label(law).into(),
            annealed::eta(law)?.into(),
            k.kappa.into(),
            k.bracket.0.into(),
            k.bracket.1.into(),
            exact.unwrap_or(f64::NAN).into(),
            from_rate.into(),
        ])?;
        report.metric(&format!("{key}.kappa"), k.kappa);
        if let Some(exact) = exact {
            report.check_abs(&format!("{key}.kappa_vs_closed_form"), k.kappa, exact, root_tol);
        }
        if matches!(law, EnvironmentLaw::Diode { .. }) {
            report.check_abs(&format!("{key}.diode_kappa_four_places"), k.kappa, 0.5, 5e-5);
        }
        report.check_abs(&format!("{key}.min_rate_over_eps_vs_kappa"), from_rate, k.kappa, rate_tol);

        let top = (2.0 * k.kappa).min(8.0);
        cgf_curves.push(Series::line(
            &label(law),
            (0..=80).map(|j| top * j as f64 / 80.0).map(|u| (u, annealed::cgf(law, u).unwrap_or(f64::NAN))).collect(),
        ));
        // the trap exponent I(eps)/eps over the slopes the law can produce
        let eps_max = law.rho_atoms()?.iter().map(|a| a.value.ln()).filter(|v| v.is_finite()).fold(0.0, f64::max);
        if eps_max > 0.0 {
            let pts = (1..=60)
                .map(|j| eps_max * j as f64 / 60.0)
                .filter_map(|e| quenched::trap_bound(law, 1, e).ok().map(|t| (e, t.rate / e)))
                .filter(|p| p.1.is_finite())
                .collect();
            rate_curves.push(Series::line(&label(law), pts));
        }
    }
    report.table(table);
    report.plot(Plot::curves("cumulant", "F(u) = ln E rho^u", "u", "F(u)", cgf_curves));
    report.plot(Plot::curves("trap_exponent", "Trap cost per unit slope", "eps", "I(eps) / eps", rate_curves));
    Ok(())
}
