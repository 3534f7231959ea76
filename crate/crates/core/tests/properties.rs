use proptest::prelude::*;
use rwre_core::annealed::{self, Transience};
use rwre_core::ctime;
use rwre_core::envgen::{site_rho, Atom, Environment, EnvironmentLaw, JumpAtom};
use rwre_core::quenched;
use rwre_core::randmat;
use rwre_core::simulate::{run_walk, walk_key, WalkPlan};
use rwre_core::stats;

fn site_law() -> impl Strategy<Value = EnvironmentLaw> {
    prop_oneof![
        (0.0..=1.0f64, 0.05..0.95f64).prop_map(|(alpha, beta)| EnvironmentLaw::TwoPointSites { alpha, beta }),
        (0.05..0.95f64, 0.05..0.95f64, 0.05..0.95f64, 0.1..0.9f64).prop_map(|(a, b, c, w)| {
            let w2 = (1.0 - w) / 2.0;
            EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(a, w), Atom::new(b, w2), Atom::new(c, 1.0 - w - w2)] }
        }),
    ]
}

/// Two-atom laws with `eta < 0` and an atom with `rho > 1`, so `kappa` is finite.
fn kappa_law() -> impl Strategy<Value = EnvironmentLaw> {
    (0.55..0.95f64, 0.05..0.45f64, 0.3..0.95f64)
        .prop_map(|(hi, lo, w)| EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(hi, w), Atom::new(lo, 1.0 - w)] })
        .prop_filter("transient to the right", |law| annealed::eta(law).unwrap() < -1e-3)
}

fn rate_law() -> impl Strategy<Value = EnvironmentLaw> {
    (0.1..5.0f64, 0.1..5.0f64, 0.05..0.95f64)
        .prop_map(|(a, b, w)| EnvironmentLaw::Rates { atoms: vec![Atom::new(a, w), Atom::new(b, 1.0 - w)] })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn overlapping_windows_agree(law in site_law(), seed in any::<u64>(), a in -20_000i64..20_000, len in 1i64..9000, shift in -5000i64..5000) {
        let mut first = Environment::realize(&law, seed, a..=a + len).unwrap();
        let mut second = Environment::realize(&law, seed, a + shift..=a + shift + len).unwrap();
        let lo = a.max(a + shift);
        let hi = (a + len).min(a + shift + len);
        for x in lo..=hi {
            prop_assert_eq!(first.p(x).unwrap(), second.p(x).unwrap());
        }
        // extending never changes realized sites
        let before: Vec<f64> = (a..=a + len).map(|x| first.value(x).unwrap()).collect();
        first.ensure(a - 50_000, a + len + 50_000).unwrap();
        let after: Vec<f64> = (a..=a + len).map(|x| first.value(x).unwrap()).collect();
        prop_assert_eq!(before, after);
        second.ensure(lo, hi).unwrap();
    }

    #[test]
    fn p_and_rho_are_consistent(law in site_law(), seed in any::<u64>()) {
        let mut env = Environment::realize(&law, seed, -200..=200).unwrap();
        for x in -200..=200 {
            let p = env.p(x).unwrap();
            let r = site_rho(&mut env, x).unwrap();
            if p < 1.0 {
                prop_assert!((p - 1.0 / (1.0 + r)).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn ruin_profile_invariants(law in site_law(), seed in any::<u64>(), n in 2usize..300) {
        let mut env = Environment::realize(&law, seed, 0..=n as i64).unwrap();
        let prof = quenched::ruin_profile(&mut env, n).unwrap();
        prop_assert_eq!(prof.u[0], 1.0);
        prop_assert_eq!(prof.u[n], 0.0);
        prop_assert!(prof.u.windows(2).all(|w| w[1] <= w[0]));
        let mut log_prod = 0.0;
        for x in 1..n {
            let r = site_rho(&mut env, x as i64).unwrap();
            let p = env.p(x as i64).unwrap();
            // u_i = p_i u_{i+1} + q_i u_{i-1}
            let lhs = prof.u[x];
            let rhs = p * prof.u[x + 1] + (1.0 - p) * prof.u[x - 1];
            prop_assert!((lhs - rhs).abs() <= 1e-12);
            log_prod += r.ln();
            // u_{x+1} - u_x = (u_1 - 1) Π_{j=1..x} rho_j
            let inc = prof.increment(x);
            let expected = -prof.escape * log_prod.exp();
            prop_assert!((inc - expected).abs() <= 1e-10 * expected.abs(), "{} vs {}", inc, expected);
        }
    }

    #[test]
    fn truncated_series_grow_with_depth(law in kappa_law(), seed in any::<u64>(), d in 1usize..200) {
        let mut env = Environment::realize(&law, seed, -500..=500).unwrap();
        let a = quenched::quenched_mean_tau(&mut env, d, 0.0).unwrap();
        let b = quenched::quenched_mean_tau(&mut env, d + 7, 0.0).unwrap();
        prop_assert!(b.partial >= a.partial);
        let a = quenched::progeny_m0(&mut env, d, 0.0).unwrap();
        let b = quenched::progeny_m0(&mut env, d + 7, 0.0).unwrap();
        prop_assert!(b.partial >= a.partial);
    }

    #[test]
    fn cumulant_function_is_convex(law in site_law(), u in -3.0..3.0f64, h in 0.01..1.0f64) {
        let f = |u| annealed::cgf(&law, u).unwrap();
        let mid = f(u + h);
        prop_assert!(mid <= 0.5 * (f(u) + f(u + 2.0 * h)) + 1e-12);
    }

    #[test]
    fn kappa_is_a_root_and_the_rate_minimum(law in kappa_law()) {
        let k = annealed::kappa(&law).unwrap();
        prop_assume!(k.kappa.is_finite() && k.kappa < 20.0);
        prop_assert!(k.kappa > 0.0);
        prop_assert!(annealed::cgf(&law, k.kappa).unwrap().abs() <= 1e-12);
        let from_rate = annealed::kappa_from_rate(&law).unwrap();
        prop_assert!((from_rate - k.kappa).abs() <= 1e-6 * k.kappa.max(1.0), "{} vs {}", from_rate, k.kappa);
    }

    #[test]
    fn jensen_chain_and_velocity_bounds(law in site_law()) {
        let eta = annealed::eta(&law).unwrap();
        let m = annealed::mean_rho(&law).unwrap();
        prop_assert!(eta <= m.ln() + 1e-12);
        let v = annealed::velocity(&law).unwrap();
        let d = annealed::mean_drift(&law).unwrap();
        if m < 1.0 {
            prop_assert!(v > 0.0 && v <= d + 1e-12);
        }
        let class = annealed::classify(&law).unwrap();
        match class.class {
            Transience::TransientPlus => prop_assert!(eta < 0.0),
            Transience::TransientMinus => prop_assert!(eta > 0.0),
            Transience::Recurrent => prop_assert!(eta.abs() <= 1e-14),
        }
    }

    #[test]
    fn renormalization_cadence_is_immaterial(p1 in 0.2..0.6f64, q1 in 0.1..0.3f64, w in 0.2..0.8f64, seed in any::<u64>()) {
        let q2 = 1.0 - p1 - q1;
        prop_assume!(q2 > 0.05);
        let law = EnvironmentLaw::BoundedJump {
            left: 2,
            right: 1,
            atoms: vec![
                JumpAtom { probs: vec![q2, q1, 0.0, p1], weight: w },
                JumpAtom { probs: vec![0.1, 0.2, 0.0, 0.7], weight: 1.0 - w },
            ],
        };
        let a = randmat::lyapunov_spectrum_with_cadence(&law, 2, 4000, seed, 1).unwrap();
        let b = randmat::lyapunov_spectrum_with_cadence(&law, 2, 4000, seed, 16).unwrap();
        // only the top exponent: a 16-step gap can wipe out the digits of the second column
        prop_assert!((a.gammas[0] - b.gammas[0]).abs() <= 1e-9);
        prop_assert!(a.gammas[0] >= a.gammas[1]);
    }

    #[test]
    fn transfer_matrix_structure(probs in prop::collection::vec(0.01..1.0f64, 5)) {
        let total: f64 = probs.iter().sum();
        let mut p: Vec<f64> = probs.iter().map(|x| x / total).collect();
        p[2] = 0.0;
        let total: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|x| x / total).collect();
        let m = randmat::transfer_matrix(&p, 2, 2).unwrap();
        let d = m.order();
        let dense = m.dense();
        for i in 1..d {
            for j in 0..d {
                prop_assert_eq!(dense[i * d + j], if j + 1 == i { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn continued_fraction_brackets(law in rate_law(), seed in any::<u64>(), s in 1e-3..10.0f64, depth in 1usize..400) {
        let mut env = Environment::realize(&law, seed, -2..=2).unwrap();
        let g = ctime::g_continued_fraction(&mut env, s, 64, 1e-12).unwrap();
        prop_assert!(g.plus >= 0.0 && g.minus >= 0.0);
        let lo = ctime::g_plus_truncated(&mut env, s, depth, 0.0).unwrap();
        let hi = ctime::g_plus_truncated(&mut env, s, depth, f64::INFINITY).unwrap();
        prop_assert!(lo <= g.plus * (1.0 + 1e-12) && g.plus <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn every_trajectory_satisfies_the_left_step_identity(law in site_law(), seed in any::<u64>()) {
        prop_assume!(annealed::eta(&law).unwrap() < 0.0);
        let mut env = Environment::realize(&law, seed, -1..=1).unwrap();
        let plan = WalkPlan::new(20_000).with_levels(vec![1, 3, 10, 40, 150]).with_path();
        let r = run_walk(&mut env, &plan, walk_key(seed, 0, 0)).unwrap();
        let path = r.path.as_ref().unwrap();
        prop_assert!(path.windows(2).all(|w| (w[1] - w[0]).abs() == 1));
        for (i, h) in r.hitting_times.iter().enumerate() {
            if let Some(t) = h {
                prop_assert_eq!(*t, r.levels[i] as u64 + 2 * r.left_steps_at_hit[i].unwrap());
                prop_assert_eq!(path[*t as usize], r.levels[i]);
                prop_assert!(path[..*t as usize].iter().all(|&x| x < r.levels[i]));
            }
        }
        let again = run_walk(&mut env, &plan, walk_key(seed, 0, 0)).unwrap();
        prop_assert_eq!(r, again);
    }

    #[test]
    fn ks_distance_matches_brute_force(xs in prop::collection::vec(-4.0..4.0f64, 1..100)) {
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let fast = stats::ks_distance_sorted(&sorted, stats::normal_cdf);
        let n = xs.len() as f64;
        let brute = sorted
            .iter()
            .map(|&x| {
                let below = xs.iter().filter(|&&y| y < x).count() as f64 / n;
                let upto = xs.iter().filter(|&&y| y <= x).count() as f64 / n;
                let f = stats::normal_cdf(x);
                (upto - f).abs().max((f - below).abs())
            })
            .fold(0.0, f64::max);
        prop_assert!((fast - brute).abs() <= 1e-12);
    }

    #[test]
    fn estimators_are_deterministic(seed in any::<u64>()) {
        let mut rng = rwre_core::rng::CounterRng::new(seed);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.next_open0().powf(-1.0 / 1.5)).collect();
        prop_assert_eq!(stats::tail_index(&xs).unwrap(), stats::tail_index(&xs).unwrap());
    }
}
