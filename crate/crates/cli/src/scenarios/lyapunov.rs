//! Lyapunov spectra of transfer-matrix products and the classification of
//! bounded-jump walks.

use rwre_core::annealed;
use rwre_core::annealed::Transience;
use rwre_core::randmat::{self, BoundedClass};
use rwre_core::{EnvironmentLaw, JumpAtom};

use super::{label, sub_seed};
use crate::config::{Budget, ExperimentConfig};
use crate::error::Result;
use crate::report::{ColumnKind, Plot, ResultTable, Series};
use crate::{Report, RunContext};

pub fn preset() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("lyapunov");
    cfg.budget = Budget { steps: Some(1_000_000), ..Budget::default() };
    cfg.laws = vec![fixed_two_left(), mixed_two_two(), zero_drift()];
    cfg
}

fn fixed_two_left() -> EnvironmentLaw {
    EnvironmentLaw::BoundedJump { left: 2, right: 1, atoms: vec![JumpAtom { probs: vec![0.1, 0.2, 0.0, 0.7], weight: 1.0 }] }
}

/// Elliptic, genuinely random, with jumps of length two both ways.
fn mixed_two_two() -> EnvironmentLaw {
    EnvironmentLaw::BoundedJump {
        left: 2,
        right: 2,
        atoms: vec![
            JumpAtom { probs: vec![0.1, 0.25, 0.0, 0.35, 0.3], weight: 0.5 },
            JumpAtom { probs: vec![0.3, 0.3, 0.0, 0.2, 0.2], weight: 0.5 },
        ],
    }
}

/// `p(1) = 2 p(-2) + p(-1)`: zero mean drift.
fn zero_drift() -> EnvironmentLaw {
    EnvironmentLaw::BoundedJump { left: 2, right: 1, atoms: vec![JumpAtom { probs: vec![0.2, 0.2, 0.0, 0.6], weight: 1.0 }] }
}

/// A nearest-neighbour site law as a jump law over `-1..=1`.
fn as_jumps(law: &EnvironmentLaw) -> Result<EnvironmentLaw> {
    let atoms = law.site_atoms().ok_or_else(|| crate::CliError::Invalid(format!("{} is not a site law", label(law))))?;
    Ok(EnvironmentLaw::BoundedJump {
        left: 1,
        right: 1,
        atoms: atoms.iter().map(|a| JumpAtom { probs: vec![1.0 - a.value, 0.0, a.value], weight: a.weight }).collect(),
    })
}

fn class_name(c: BoundedClass) -> &'static str {
    match c {
        BoundedClass::TransientPlus => "transient +",
        BoundedClass::TransientMinus => "transient -",
        BoundedClass::Indeterminate => "indeterminate",
    }
}

pub fn run(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let cfg = ctx.cfg;
    let n = cfg.steps(1_000_000) as usize;
    let sigmas = cfg.tolerance("lyapunov.sigmas", 3.0);

    // spectrum and classification of every configured law
    let mut table = ResultTable::new(
        "spectra",
        &[
            ("law", ColumnKind::Text),
            ("index", ColumnKind::Int),
            ("gamma", ColumnKind::Float),
            ("std_error", ColumnKind::Float),
            ("is_gamma_r", ColumnKind::Bool),
        ],
    );
    let mut classes = ResultTable::new(
        "classification",
        &[("law", ColumnKind::Text), ("gamma_r", ColumnKind::Float), ("std_error", ColumnKind::Float), ("class", ColumnKind::Text)],
    );
    let laws = cfg.laws_or(vec![fixed_two_left(), mixed_two_two(), zero_drift()]);
    let mut bars = Vec::new();
    for (i, law) in laws.iter().enumerate() {
        let EnvironmentLaw::BoundedJump { left, right, .. } = law else {
            report.note(format!("skipped {}: not a bounded-jump law", label(law)));
            continue;
        };
        let d = left + right - 1;
        let c = randmat::classify_bounded(law, n, sub_seed(cfg.seed, i as u64))?;
        let spec = randmat::lyapunov_spectrum(law, d, n, sub_seed(cfg.seed, i as u64))?;
        for (j, (&g, &se)) in spec.gammas.iter().zip(&spec.std_errors).enumerate() {
            table.push(vec![label(law).into(), (j + 1).into(), g.into(), se.into(), (j + 1 == *right).into()])?;
        }
        classes.push(vec![label(law).into(), c.gamma_r.into(), c.std_error.into(), class_name(c.class).into()])?;
        bars.push(Series::points(&label(law), spec.gammas.iter().enumerate().map(|(j, &g)| ((j + 1) as f64, g)).collect()));
    }
    report.table(table);
    report.table(classes);
    report.plot(Plot::curves("spectra", "Lyapunov spectra", "index i", "gamma_i", bars));

    // fixed matrix: the top exponent is the log of the leading eigenvalue
    let b1 = 3.0 / 7.0;
    let lambda = (b1 + (b1 * b1 + 4.0 / 7.0f64).sqrt()) / 2.0;
    let (g, se) = randmat::top_lyapunov(&fixed_two_left(), n, sub_seed(cfg.seed, 100))?;
    report.metric("fixed.top_std_error", se);
    report.check_abs("fixed.top_vs_log_eigenvalue", g, lambda.ln(), cfg.tolerance("lyapunov.fixed_abs", 1e-6));

    // nearest-neighbour reduction: gamma_1 = E ln rho
    let mut nn = ResultTable::new(
        "nearest_neighbour",
        &[("law", ColumnKind::Text), ("gamma_1", ColumnKind::Float), ("eta", ColumnKind::Float), ("std_error", ColumnKind::Float)],
    );
    let site_laws = super::velocity::preset().laws;
    let (mut worst, mut within, mut agree) = (0.0f64, true, true);
    for (i, law) in site_laws.iter().chain([EnvironmentLaw::TwoPointSites { alpha: 0.3, beta: 0.7 }].iter()).enumerate() {
        let jumps = as_jumps(law)?;
        let (g, se) = randmat::top_lyapunov(&jumps, n, sub_seed(cfg.seed, 200 + i as u64))?;
        let eta = annealed::eta(law)?;
        nn.push(vec![label(law).into(), g.into(), eta.into(), se.into()])?;
        // constant laws have no sampling error, only rounding summed over n terms
        let rounding = 1e-9 * eta.abs().max(1.0);
        within &= (g - eta).abs() <= sigmas * se + rounding;
        if se > rounding {
            worst = worst.max((g - eta).abs() / se);
        }
        let expected = match annealed::classify(law)?.class {
            Transience::TransientPlus => BoundedClass::TransientPlus,
            Transience::TransientMinus => BoundedClass::TransientMinus,
            Transience::Recurrent => BoundedClass::Indeterminate,
        };
        agree &= randmat::classify_bounded(&jumps, n, sub_seed(cfg.seed, 200 + i as u64))?.class == expected;
    }
    report.table(nn);
    report.check("nearest_neighbour.top_vs_eta_in_se", worst, format!("<= {sigmas}"), within);
    report.check("nearest_neighbour.classes_match", agree as u8 as f64, "all agree", agree);

    // sign pattern around gamma_R for a mixed L = R = 2 law
    let spec = randmat::lyapunov_spectrum(&mixed_two_two(), 3, n, sub_seed(cfg.seed, 300))?;
    let (g1, s1) = (spec.gammas[0], spec.std_errors[0]);
    let (g3, s3) = (spec.gammas[2], spec.std_errors[2]);
    report.metric("mixed.gamma_2", spec.gammas[1]);
    report.check("mixed.gamma_1_positive_in_se", g1 / s1, format!("> {sigmas}"), g1 > sigmas * s1);
    report.check("mixed.gamma_3_negative_in_se", -g3 / s3, format!("> {sigmas}"), g3 < -sigmas * s3);
    Ok(())
}
