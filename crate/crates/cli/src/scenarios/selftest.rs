//! Degenerate and symmetric cases with known answers, one check each.
//! Sized to finish within a minute on one core.

use rwre_core::annealed;
use rwre_core::ctime;
use rwre_core::envgen::{self, Ellipticity};
use rwre_core::quenched;
use rwre_core::randmat::{self, BoundedClass};
use rwre_core::rng::CounterRng;
use rwre_core::simulate::{
    self, geometric_checkpoints, regeneration_times, run_balanced_ensemble, run_bounded_jump, run_walk, BalancedLaw, WalkPlan,
};
use rwre_core::stats;
use rwre_core::{Environment, EnvironmentLaw, JumpAtom};

use super::{constant, run_plain, sub_seed};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::{Report, RunContext};

pub fn preset() -> ExperimentConfig {
    ExperimentConfig::new("selftest")
}

pub fn run(ctx: &RunContext, report: &mut Report) -> Result<()> {
    let seed = ctx.cfg.seed;
    environments(report, seed)?;
    analytics(report)?;
    walks(report, seed)?;
    estimators(report, seed)?;
    Ok(())
}

fn environments(report: &mut Report, seed: u64) -> Result<()> {
    let law = EnvironmentLaw::TwoPointSites { alpha: 1.0, beta: 0.6 };
    let mut env = Environment::realize(&law, seed, -5..=5)?;
    let all = (-5..=5).map(|x| env.p(x)).collect::<rwre_core::Result<Vec<_>>>()?;
    report.check(
        "envgen.degenerate_atom",
        all.iter().fold(0.0, |m: f64, p| m.max((p - 0.6).abs())),
        "all p = 0.6",
        all.iter().all(|&p| p == 0.6),
    );

    let law = EnvironmentLaw::TwoPointSites { alpha: 0.3, beta: 0.2 };
    let narrow = Environment::realize(&law, seed, 0..=10)?;
    let wide = Environment::realize(&law, seed, -10..=10)?;
    let same = (0..=10).all(|x| narrow.value(x) == wide.value(x));
    report.check("envgen.windows_agree", same as u8 as f64, "identical sites 0..10", same);

    let mut half = Environment::realize(&constant(0.5), seed, 0..=0)?;
    let mut seven = Environment::realize(&constant(0.7), seed, 0..=0)?;
    report.check_abs("envgen.rho_of_half", envgen::site_rho(&mut half, 0)?, 1.0, 0.0);
    report.check_abs("envgen.rho_of_0.7", envgen::site_rho(&mut seven, 0)?, 3.0 / 7.0, 1e-15);

    let v = envgen::validate(&constant(0.5));
    let margin = match v.ellipticity {
        Ellipticity::Margin(d) => d,
        _ => f64::NAN,
    };
    report.check_abs("envgen.symmetric_margin", margin, 0.5, 0.0);
    report.check_abs("envgen.symmetric_eta", annealed::eta(&constant(0.5))?, 0.0, 0.0);
    Ok(())
}

fn analytics(report: &mut Report) -> Result<()> {
    let mut sym = Environment::realize(&constant(0.5), 1, -1..=1)?;
    report.check_abs("quenched.symmetric_ruin", quenched::ruin_profile(&mut sym, 10)?.escape, 0.1, 1e-12);
    let tau = quenched::quenched_mean_tau(&mut sym, 100_000, 1e-12)?;
    report.check("quenched.symmetric_tau_diverges", tau.partial, "+inf", tau.value().is_infinite());
    let y = quenched::potential(&mut sym, -10, 10)?;
    report.check("quenched.flat_potential", y.y.iter().fold(0.0, |m: f64, v| m.max(v.abs())), "Y = 0", y.y.iter().all(|&v| v == 0.0));
    let mut march = Environment::realize(&constant(1.0), 1, -1..=1)?;
    report.check_abs("quenched.diode_progeny", quenched::progeny_m0(&mut march, 100, 1e-12)?.partial, 0.0, 0.0);

    let fixed = constant(0.6);
    let off = quenched::trap_bound(&fixed, 5, 0.1)?;
    report.check("quenched.degenerate_trap", off.bound, "I = +inf, bound 0", off.rate.is_infinite() && off.bound == 0.0);
    let law = EnvironmentLaw::TwoPointSites { alpha: 0.8, beta: 0.7 };
    let at_eta = quenched::trap_bound(&law, 1, annealed::eta(&law)? + 1e-6)?;
    report.check("quenched.trap_at_eta", at_eta.rate, "I -> 0, bound -> 1", at_eta.rate <= 1e-9 && at_eta.bound >= 1.0 - 1e-9);

    report.check_abs("annealed.constant_velocity", annealed::velocity(&fixed)?, 0.2, 1e-15);
    let ex = annealed::mean_excursion(&constant(0.5))?;
    report.check("annealed.excursion_at_boundary", ex.w1, "+inf", ex.w1.is_infinite() && ex.tau1.is_infinite());
    let atoms = annealed::diode_excursion_atoms(0.3, 1.0, 10);
    let arith = atoms.iter().enumerate().all(|(k, a)| a.0 == 2.0 * (k + 1) as f64);
    report.check("annealed.diode_atoms_arithmetic", atoms[10].0, "t_k = 2(k+1)", arith);
    let asym =
        [0.0, 0.3, 1.0, 2.5, 7.0].iter().map(|&x| (annealed::sinai_density(x) - annealed::sinai_density(-x)).abs()).fold(0.0, f64::max);
    report.check_abs("annealed.sinai_density_even", asym, 0.0, 0.0);

    let symmetric = EnvironmentLaw::BoundedJump {
        left: 2,
        right: 2,
        atoms: vec![
            JumpAtom { probs: vec![0.2, 0.3, 0.0, 0.3, 0.2], weight: 0.5 },
            JumpAtom { probs: vec![0.1, 0.4, 0.0, 0.4, 0.1], weight: 0.5 },
        ],
    };
    let c = randmat::classify_bounded(&symmetric, 100_000, 1)?;
    report.check("randmat.symmetric_indeterminate", c.gamma_r, "indeterminate", c.class == BoundedClass::Indeterminate);

    let rates = EnvironmentLaw::Rates { atoms: vec![rwre_core::Atom::new(1.0, 0.5), rwre_core::Atom::new(4.0, 0.5)] };
    let mut env = Environment::realize(&rates, 1, -1..=1)?;
    let (c0, s) = (env.value(0).expect("realized"), 0.7);
    report.check_abs("ctime.single_level", ctime::g_plus_truncated(&mut env, s, 1, 0.0)?, 1.0 / (1.0 / c0 + 1.0 / s), 0.0);
    let s = 1e8;
    report.check_abs("ctime.instant_return", s * ctime::laplace_p00(&mut env, s, ctime::DEFAULT_DEPTH, 1e-12)?, 1.0, 1e-6);
    Ok(())
}

fn walks(report: &mut Report, seed: u64) -> Result<()> {
    let levels = vec![1, 10, 100, 1000];
    let plan = WalkPlan::new(1000).with_levels(levels.clone());
    let mut march = Environment::realize(&constant(1.0), seed, -1..=1)?;
    let r = run_walk(&mut march, &plan, 1)?;
    let exact = r.final_position == 1000 && r.hitting_times.iter().zip(&levels).all(|(t, &l)| *t == Some(l as u64));
    report.check("simulate.right_march", r.final_position as f64, "X_n = n, T_n = n", exact);

    let law = EnvironmentLaw::TwoPointSites { alpha: 0.8, beta: 0.7 };
    let mut env = Environment::realize(&law, seed, -1..=1)?;
    let plan = WalkPlan::new(100_000).with_levels(vec![1, 5, 50, 500, 5000]);
    let mut ok = true;
    for w in 0..20 {
        let r = run_walk(&mut env, &plan, simulate::walk_key(seed, 0, w))?;
        for ((t, left), &l) in r.hitting_times.iter().zip(&r.left_steps_at_hit).zip(&plan.levels) {
            if let (Some(t), Some(left)) = (t, left) {
                ok &= (t - l as u64).is_multiple_of(2) && *t == l as u64 + 2 * left;
            }
        }
    }
    report.check("simulate.parity_and_left_steps", ok as u8 as f64, "T_n - n even, T_n = n + 2 L_n", ok);

    let nn = EnvironmentLaw::TwoPointSites { alpha: 0.4, beta: 0.3 };
    let bj = EnvironmentLaw::BoundedJump {
        left: 1,
        right: 1,
        atoms: vec![JumpAtom { probs: vec![0.7, 0.0, 0.3], weight: 0.4 }, JumpAtom { probs: vec![0.3, 0.0, 0.7], weight: 0.6 }],
    };
    let plan = WalkPlan::new(50_000).with_path();
    let a = run_walk(&mut Environment::realize(&nn, seed, -1..=1)?, &plan, 7)?;
    let b = run_bounded_jump(&mut Environment::realize(&bj, seed, -1..=1)?, &plan, 7)?;
    report.check("simulate.nearest_neighbour_reduction", (a.path == b.path) as u8 as f64, "identical paths", a.path == b.path);

    // symmetric jumps: ties at 0 are split evenly
    let symmetric =
        EnvironmentLaw::BoundedJump { left: 2, right: 2, atoms: vec![JumpAtom { probs: vec![0.2, 0.3, 0.0, 0.3, 0.2], weight: 1.0 }] };
    let ens = run_plain(&symmetric, 30_000, 1, WalkPlan::new(100_000), sub_seed(seed, 1))?;
    let last = ens.stats.last().expect("final checkpoint");
    let plus = last.frac_positive + 0.5 * (1.0 - last.frac_positive - last.frac_negative);
    report.check_abs("simulate.symmetric_sign", plus, 0.5, 0.01);

    let simple = BalancedLaw { dim: 2, disorder: 0.0 };
    let n = 1000;
    let bal = run_balanced_ensemble(&simple, 40_000, n, &[n], sub_seed(seed, 2))?;
    let worst = (0..2).map(|a| bal.axis_mean[a].abs() / bal.axis_std_error[a]).fold(0.0, f64::max);
    report.check("simulate.simple_walk_mean", worst, "<= 3 standard errors", worst <= 3.0);
    report.check_rel("simulate.simple_walk_square", bal.mean_square_norm[0], n as f64, 0.02);

    let path: Vec<i64> = (0..=50).collect();
    let regen = regeneration_times(&path);
    report.check("simulate.monotone_regenerations", regen.len() as f64, "every step", regen == (0..50).collect::<Vec<_>>());
    Ok(())
}

fn estimators(report: &mut Report, seed: u64) -> Result<()> {
    let law = constant(0.6);
    let plan = WalkPlan::new(100_000).with_checkpoints(geometric_checkpoints(100_000, 4));
    let ens = run_plain(&law, 100, 1, plan, sub_seed(seed, 3))?;
    report.check_abs("stats.constant_velocity_fit", stats::velocity_fit(&ens, 1000)?.slope, 0.2, 0.002);
    let plan = WalkPlan::new(1_000_000).with_levels(vec![100, 215, 464, 1000, 2154, 4642, 10_000]).stopping_at_last_level();
    let ens = run_plain(&law, 100, 1, plan, sub_seed(seed, 4))?;
    report.check_abs("stats.ballistic_hitting_slope", stats::hitting_scaling(&ens)?.slope, 1.0, 0.02);

    let mut rng = CounterRng::new(sub_seed(seed, 5));
    let exp: Vec<f64> = (0..100_000).map(|_| rng.next_exp(1.0)).collect();
    let tail = stats::tail_index(&exp)?;
    report.check("stats.exponential_tail_light", tail.index, "> 5 (light)", tail.light);
    let normal: Vec<f64> = (0..10_000).map(|_| rng.next_normal()).collect();
    let ks = stats::ks_normal(&normal, 0.0, 1.0, 0.05)?;
    report.check("stats.ks_accepts_normal", ks.p_value, "p-value > 0.05", ks.pass);
    Ok(())
}
