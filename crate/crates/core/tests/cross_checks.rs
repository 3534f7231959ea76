//! Monte Carlo engines against the exact quenched and annealed formulas.

use rayon::prelude::*;
use rwre_core::annealed;
use rwre_core::ctime;
use rwre_core::envgen::{Atom, Environment, EnvironmentLaw, JumpAtom};
use rwre_core::quenched;
use rwre_core::simulate::{
    env_seed, regeneration_times, run_balanced_ensemble, run_bounded_jump, run_ctrw, run_ctrw_ensemble, run_ensemble, run_walk, walk_key,
    BalancedLaw, EnsembleConfig, WalkPlan,
};
use rwre_core::stats;

fn constant(p: f64) -> EnvironmentLaw {
    EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(p, 1.0)] }
}

fn two_atom_rates() -> EnvironmentLaw {
    EnvironmentLaw::Rates { atoms: vec![Atom::new(1.0, 0.5), Atom::new(4.0, 0.5)] }
}

/// Escape frequencies from 1 (walks whose first step goes right) against `1 - u_1`.
#[test]
fn escape_frequencies_match_ruin_profile() {
    let law = EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.3, 0.3), Atom::new(0.55, 0.4), Atom::new(0.8, 0.3)] };
    let walks = 100_000u64;
    let worst = (0..100u64)
        .into_par_iter()
        .map(|e| {
            let n = 2 + (e % 7) as usize;
            let mut env = Environment::realize(&law, env_seed(42, e), -1..=10).unwrap();
            let exact = quenched::ruin_profile(&mut env, n).unwrap().escape;
            // a first step to -1 ends the walk at once
            let plan = WalkPlan::new(1_000_000).with_levels(vec![n as i64]).stopping_at_last_level().exiting_below(-1).with_path();
            let (mut trials, mut escapes, mut open) = (0u64, 0u64, 0u64);
            for w in 0..walks {
                let r = run_walk(&mut env, &plan, walk_key(42, e, w)).unwrap();
                let path = r.path.unwrap();
                if path[1] != 1 {
                    continue;
                }
                trials += 1;
                match path[1..].iter().find(|&&x| x == 0 || x == n as i64) {
                    Some(&x) if x == n as i64 => escapes += 1,
                    Some(_) => {}
                    None => open += 1,
                }
            }
            assert_eq!(open, 0, "environment {e} left walks undecided");
            let freq = escapes as f64 / trials as f64;
            let sd = (exact * (1.0 - exact) / trials as f64).sqrt();
            (freq - exact).abs() / sd
        })
        .reduce(|| 0.0, f64::max);
    assert!(worst < 4.0, "largest deviation {worst} standard deviations");
}

#[test]
fn continued_fraction_distributional_identities() {
    let law = two_atom_rates();
    let s = 0.05;
    let n = 4000u64;
    let samples: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|e| {
            let mut env = Environment::realize(&law, env_seed(9, e), -2..=2).unwrap();
            let g0 = ctime::g_at(&mut env, 0, s, 256, 1e-12).unwrap().plus;
            let g1 = ctime::g_at(&mut env, 1, s, 256, 1e-12).unwrap().plus;
            (g0, g1, env.value(0).unwrap())
        })
        .collect();
    // G+_0 and G+_1 share a law; compare them across disjoint environments
    let half = n as usize / 2;
    let a: Vec<f64> = samples[..half].iter().map(|t| t.0).collect();
    let b: Vec<f64> = samples[half..].iter().map(|t| t.1).collect();
    let ks = stats::ks_two_sample(&a, &b, 0.01).unwrap();
    assert!(ks.pass, "{ks:?}");
    // G+_1 is independent of c_01
    let g1: Vec<f64> = samples.iter().map(|t| t.1).collect();
    let c: Vec<f64> = samples.iter().map(|t| t.2).collect();
    let (mg, vg) = stats::mean_variance(&g1);
    let (mc, vc) = stats::mean_variance(&c);
    let cov = g1.iter().zip(&c).map(|(x, y)| (x - mg) * (y - mc)).sum::<f64>() / (n as f64 - 1.0);
    let corr = cov / (vg * vc).sqrt();
    assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "correlation {corr}");
}

#[test]
fn simulated_laplace_occupation_matches_continued_fraction() {
    let law = two_atom_rates();
    let s = 0.1;
    let n_env = 200u64;
    let walks = 100u64;
    let (exact, simulated): (Vec<f64>, Vec<f64>) = (0..n_env)
        .into_par_iter()
        .map(|e| {
            let mut env = Environment::realize(&law, env_seed(5, e), -2..=2).unwrap();
            let exact = ctime::laplace_p00(&mut env, s, 256, 1e-12).unwrap();
            let occ: f64 =
                (0..walks).map(|w| run_ctrw(&mut env, 250.0, walk_key(5, e, w), &[], &[s]).unwrap().laplace_occupation[0]).sum::<f64>()
                    / walks as f64;
            (exact, occ)
        })
        .unzip();
    let a = exact.iter().sum::<f64>() / n_env as f64;
    let b = simulated.iter().sum::<f64>() / n_env as f64;
    assert!((b / a - 1.0).abs() < 0.02, "simulated {b} vs continued fraction {a}");
}

#[test]
fn ensembles_do_not_depend_on_thread_count() {
    let laws = [
        EnvironmentLaw::TwoPointSites { alpha: 0.3, beta: 0.3 },
        EnvironmentLaw::BoundedJump {
            left: 2,
            right: 1,
            atoms: vec![
                JumpAtom { probs: vec![0.1, 0.2, 0.0, 0.7], weight: 0.5 },
                JumpAtom { probs: vec![0.3, 0.2, 0.1, 0.4], weight: 0.5 },
            ],
        },
    ];
    for law in laws {
        let cfg = EnsembleConfig {
            n_env: 40,
            n_walks: 3,
            plan: WalkPlan::new(20_000).with_checkpoints(vec![10, 1000, 20_000]).with_levels(vec![5, 50]),
            base_seed: 2024,
            step_budget: None,
        };
        let runs: Vec<_> = [1, 4, 16]
            .iter()
            .map(|&t| {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
                pool.install(|| run_ensemble(&law, &cfg)).unwrap()
            })
            .collect();
        assert_eq!(runs[0], runs[1]);
        assert_eq!(runs[0], runs[2]);
    }
}

#[test]
fn symmetric_walk_moments() {
    let cfg = EnsembleConfig { n_env: 100_000, n_walks: 1, plan: WalkPlan::new(10_000), base_seed: 3, step_budget: None };
    let ens = run_ensemble(&constant(0.5), &cfg).unwrap();
    let st = &ens.stats[0];
    let sd = (st.variance / 100_000.0).sqrt();
    assert!(st.mean.abs() < 3.0 * sd, "mean {}", st.mean);
    assert!((st.variance / 10_000.0 - 1.0).abs() < 0.02, "variance {}", st.variance);
}

#[test]
fn ballistic_velocity_matches_formula() {
    let law = EnvironmentLaw::TwoPointSites { alpha: 0.8, beta: 0.7 };
    let cps = rwre_core::simulate::geometric_checkpoints(1_000_000, 4);
    let cfg =
        EnsembleConfig { n_env: 50, n_walks: 1, plan: WalkPlan::new(1_000_000).with_checkpoints(cps), base_seed: 1, step_budget: None };
    let ens = run_ensemble(&law, &cfg).unwrap();
    let last = ens.stats.last().unwrap();
    assert!((last.mean / 1e6 - 0.105).abs() < 0.002, "X/n = {}", last.mean / 1e6);
    let fit = stats::velocity_fit(&ens, 10_000).unwrap();
    assert!((fit.slope - annealed::velocity(&law).unwrap()).abs() < 0.002, "slope {}", fit.slope);

    let cfg = EnsembleConfig { n_env: 20, ..cfg };
    let fit = stats::velocity_fit(&run_ensemble(&constant(0.6), &cfg).unwrap(), 10_000).unwrap();
    assert!((fit.slope - 0.2).abs() < 0.002, "slope {}", fit.slope);
}

#[test]
fn ballistic_hitting_times_scale_linearly() {
    let levels: Vec<i64> = vec![100, 300, 1000, 3000, 10_000];
    let cfg = EnsembleConfig {
        n_env: 200,
        n_walks: 1,
        plan: WalkPlan::new(200_000).with_levels(levels).stopping_at_last_level(),
        base_seed: 1,
        step_budget: None,
    };
    let fit = stats::hitting_scaling(&run_ensemble(&constant(0.6), &cfg).unwrap()).unwrap();
    assert!((fit.slope - 1.0).abs() < 0.02, "slope {}", fit.slope);
}

#[test]
fn bounded_jump_drift_and_symmetry() {
    let drift = EnvironmentLaw::BoundedJump { left: 2, right: 1, atoms: vec![JumpAtom { probs: vec![0.1, 0.2, 0.0, 0.7], weight: 1.0 }] };
    let mut env = Environment::realize(&drift, 1, -2..=2).unwrap();
    let r = run_bounded_jump(&mut env, &WalkPlan::new(1_000_000), 8).unwrap();
    assert!((r.final_position as f64 / 1e6 - 0.3).abs() < 0.01);
    let path = run_bounded_jump(&mut env, &WalkPlan::new(10_000).with_path(), 9).unwrap().path.unwrap();
    assert!(path.windows(2).all(|w| (-2..=1).contains(&(w[1] - w[0]))));
}

#[test]
fn continuous_time_diffusion() {
    // constant rates: E X_t^2 = 2 c t
    let law = EnvironmentLaw::Rates { atoms: vec![Atom::new(2.0, 1.0)] };
    let ens = run_ctrw_ensemble(&law, 100, 100, 500.0, &[500.0], &[], 11).unwrap();
    assert!((ens.mean_square[0] / (2.0 * 2.0 * 500.0) - 1.0).abs() < 0.03, "{}", ens.mean_square[0]);

    // two-atom rates: X_t / sqrt(2 c_* t) is standard normal
    let law = two_atom_rates();
    let c_star = annealed::conductivity_and_ema(&law).unwrap().c_star;
    let t = 1000.0;
    let ens = run_ctrw_ensemble(&law, 4000, 1, t, &[t], &[], 12).unwrap();
    let xs: Vec<f64> = ens.positions[0].iter().map(|&x| x as f64 / (2.0 * c_star * t).sqrt()).collect();
    let ks = stats::ks_normal(&xs, 0.0, 1.0, 0.05).unwrap();
    assert!(ks.pass, "{ks:?}");
}

#[test]
fn regeneration_structure() {
    // a recurrent path has essentially no times that are never backtracked
    let mut env = Environment::realize(&constant(0.5), 1, -1..=1).unwrap();
    let r = run_walk(&mut env, &WalkPlan::new(10_000).with_path(), 3).unwrap();
    assert!(regeneration_times(r.path.as_ref().unwrap()).len() <= 5);

    // in the zero-speed transient regime the gaps inherit the tail index kappa;
    // walks run to a level rather than a time so that long gaps are not censored
    let law = EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.9, 0.7), Atom::new(0.2, 0.3)] };
    let kappa = annealed::kappa(&law).unwrap().kappa;
    let plan = WalkPlan::new(50_000_000).with_levels(vec![5000]).stopping_at_last_level().with_path();
    let gaps: Vec<f64> = (0..200u64)
        .into_par_iter()
        .map(|e| {
            let mut env = Environment::realize(&law, env_seed(6, e), -1..=1).unwrap();
            let r = run_walk(&mut env, &plan, walk_key(6, e, 0)).unwrap();
            assert_eq!(r.final_position, 5000);
            let times = regeneration_times(r.path.as_ref().unwrap());
            times.windows(2).map(|w| (w[1] - w[0]) as f64).collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    let tail = stats::tail_index(&gaps).unwrap();
    assert!((tail.index - kappa).abs() < 0.1, "{tail:?} vs kappa {kappa}");
}

#[test]
fn balanced_walks() {
    let uniform = BalancedLaw { dim: 2, disorder: 0.0 };
    let ens = run_balanced_ensemble(&uniform, 40_000, 2500, &[2500], 1).unwrap();
    assert!((ens.mean_square_norm[0] / 2500.0 - 1.0).abs() < 0.02);
    assert!(ens.axis_mean[0].abs() < 3.0 * ens.axis_std_error[0]);

    let random = BalancedLaw { dim: 3, disorder: 0.6 };
    let ens = run_balanced_ensemble(&random, 10_000, 1000, &[1000], 2).unwrap();
    for i in 0..3 {
        assert!(ens.axis_mean[i].abs() < 3.0 * ens.axis_std_error[i], "axis {i}: {}", ens.axis_mean[i]);
    }
    // E |X_n|^2 equals the predictable quadratic variation
    let qv: f64 = ens.mean_quadratic_variation.iter().sum();
    assert!((ens.mean_square_norm[0] / qv - 1.0).abs() < 0.05);
}
