//! Named scenarios. Each preset is a scenario with its default config.

mod balanced;
mod bonds;
mod ctrw;
mod diode;
mod ensemble;
mod kappa;
mod lyapunov;
mod phase;
mod scaling;
mod selftest;
mod sinai;
mod velocity;

use rwre_core::rng::derive_key;
use rwre_core::simulate::{EnsembleConfig, EnsembleResult, WalkPlan};
use rwre_core::{Atom, EnvironmentLaw};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::report::{ColumnKind, Plot, ResultTable, Series};
use crate::{Report, RunContext};

pub use ensemble::PartialRun;

pub struct Scenario {
    pub name: &'static str,
    pub about: &'static str,
    pub run: fn(&RunContext, &mut Report) -> Result<()>,
    /// Default config; `None` for scenarios that need user-supplied laws.
    pub preset: Option<fn() -> ExperimentConfig>,
}

static SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "phase-diagram",
        about: "transience classification against simulated drift sign on an (alpha, beta) grid",
        run: phase::run,
        preset: Some(phase::preset),
    },
    Scenario {
        name: "velocity",
        about: "ballistic speeds, slowdown paradoxes and the environment seen from the walker",
        run: velocity::run,
        preset: Some(velocity::preset),
    },
    Scenario {
        name: "kappa",
        about: "critical exponents by root finding, closed forms and the rate function",
        run: kappa::run,
        preset: Some(kappa::preset),
    },
    Scenario {
        name: "stable-scaling",
        about: "hitting-time scaling and progeny tail in the zero-speed regime",
        run: scaling::run_stable,
        preset: Some(scaling::preset_stable),
    },
    Scenario {
        name: "clt",
        about: "Gaussian fluctuations of a ballistic walk with a large critical exponent",
        run: scaling::run_clt,
        preset: Some(scaling::preset_clt),
    },
    Scenario { name: "sinai", about: "ln^2 n localization of the recurrent walk", run: sinai::run, preset: Some(sinai::preset) },
    Scenario {
        name: "figure2",
        about: "log-periodic oscillations of the mean displacement in the diode model",
        run: diode::run_oscillations,
        preset: Some(diode::preset_oscillations),
    },
    Scenario {
        name: "diode-lln",
        about: "n / ln n law of large numbers of the critical diode model",
        run: diode::run_lln,
        preset: Some(diode::preset_lln),
    },
    Scenario { name: "bonds", about: "recurrence and diffusive CLT of the random-bond walk", run: bonds::run, preset: Some(bonds::preset) },
    Scenario {
        name: "lyapunov",
        about: "Lyapunov spectra and classification of bounded-jump walks",
        run: lyapunov::run,
        preset: Some(lyapunov::preset),
    },
    Scenario {
        name: "ctrw-ema",
        about: "continued fractions, effective medium constant and return probability of random rates",
        run: ctrw::run_ema,
        preset: Some(ctrw::preset_ema),
    },
    Scenario {
        name: "ctrw-subdiffusive",
        about: "anomalous return-probability exponent of power-law rates",
        run: ctrw::run_subdiffusive,
        preset: Some(ctrw::preset_subdiffusive),
    },
    Scenario {
        name: "balanced",
        about: "martingale coordinates and recurrence dichotomy of balanced walks in d = 2, 3",
        run: balanced::run,
        preset: Some(balanced::preset),
    },
    Scenario { name: "selftest", about: "fast degenerate-case checks of every module", run: selftest::run, preset: Some(selftest::preset) },
    Scenario { name: "ensemble", about: "plain annealed ensemble for each configured law (resumable)", run: ensemble::run, preset: None },
];

/// The reproduction presets, in order.
pub fn presets() -> impl Iterator<Item = &'static Scenario> {
    SCENARIOS.iter().filter(|s| s.preset.is_some())
}

pub fn find(name: &str) -> Result<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name).ok_or_else(|| CliError::UnknownScenario(name.to_string()))
}

/// Default config of a preset.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match find(name)?.preset {
        Some(make) => Ok(make()),
        None => Err(CliError::Invalid(format!("`{name}` needs a config file with laws; use `rwre run`"))),
    }
}

/// Independent base seed for the `k`-th sub-experiment of a scenario.
pub(crate) fn sub_seed(seed: u64, k: u64) -> u64 {
    const SCENARIO_DOMAIN: u64 = 0x5C3E_7A21;
    derive_key(seed, SCENARIO_DOMAIN, &[k])
}

pub(crate) fn constant(p: f64) -> EnvironmentLaw {
    EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(p, 1.0)] }
}

/// Short human-readable description of a law.
pub(crate) fn label(law: &EnvironmentLaw) -> String {
    let atoms = |a: &[Atom]| a.iter().map(|a| format!("{}@{}", a.value, a.weight)).collect::<Vec<_>>().join(" ");
    match law {
        EnvironmentLaw::TwoPointSites { alpha, beta } => format!("two-point alpha={alpha} beta={beta}"),
        EnvironmentLaw::Diode { alpha, rho } => format!("diode alpha={alpha} rho={rho}"),
        EnvironmentLaw::DiscreteSites { atoms: a } if a.len() == 1 => format!("constant p={}", a[0].value),
        EnvironmentLaw::DiscreteSites { atoms: a } => format!("sites p={}", atoms(a)),
        EnvironmentLaw::BoundedJump { left, right, atoms } => format!("jumps L={left} R={right} ({} atoms)", atoms.len()),
        EnvironmentLaw::BondWeights { atoms: a } => format!("bonds c={}", atoms(a)),
        EnvironmentLaw::Rates { atoms: a } => format!("rates c={}", atoms(a)),
        EnvironmentLaw::RatesPowerLaw { alpha } => format!("power-law rates alpha={alpha}"),
    }
}

pub(crate) fn run_plain(law: &EnvironmentLaw, n_env: usize, n_walks: usize, plan: WalkPlan, seed: u64) -> Result<EnsembleResult> {
    let cfg = EnsembleConfig { n_env, n_walks, plan, base_seed: seed, step_budget: None };
    Ok(rwre_core::simulate::run_ensemble(law, &cfg)?)
}

/// Per-checkpoint ensemble statistics.
pub(crate) fn checkpoint_table(name: &str, ens: &EnsembleResult) -> Result<ResultTable> {
    use ColumnKind::*;
    let mut t = ResultTable::new(
        name,
        &[
            ("n", Int),
            ("mean", Float),
            ("variance", Float),
            ("q10", Float),
            ("median", Float),
            ("q90", Float),
            ("frac_positive", Float),
            ("frac_negative", Float),
            ("mean_max_abs", Float),
            ("mean_returns", Float),
        ],
    );
    for s in &ens.stats {
        t.push(vec![
            s.step.into(),
            s.mean.into(),
            s.variance.into(),
            s.q10.into(),
            s.median.into(),
            s.q90.into(),
            s.frac_positive.into(),
            s.frac_negative.into(),
            s.mean_max_abs.into(),
            s.mean_returns.into(),
        ])?;
    }
    Ok(t)
}

/// Mean displacement against `n` on log axes, one curve per ensemble.
pub(crate) fn mean_plot(name: &str, title: &str, ensembles: &[(String, &EnsembleResult)]) -> Plot {
    let series = ensembles.iter().map(|(l, e)| Series::line(l, e.stats.iter().map(|s| (s.step as f64, s.mean)).collect())).collect();
    Plot::curves(name, title, "n", "mean X_n", series).log_log()
}
