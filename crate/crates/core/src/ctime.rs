//! Laplace-domain return probability of the symmetric random-rate walk via
//! the continued fractions `G^±`, and its annealed small-`s` asymptote.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealed::{conductivity_and_ema, subdiffusive_exponents};
use crate::envgen::{Environment, EnvironmentLaw, Model};
use crate::error::{Error, Result};
use crate::simulate::env_seed;
use crate::stats::line_fit;

pub const DEFAULT_DEPTH: usize = 2048;
pub const DEFAULT_TOL: f64 = 1e-12;
/// Deepening stops here and reports non-convergence.
pub const MAX_DEPTH: usize = 1 << 22;

/// Both continued fractions at one site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPair {
    pub s: f64,
    pub plus: f64,
    pub minus: f64,
    /// Depth that certified both values.
    pub depth: usize,
    /// Largest bracket width (tail at infinity minus tail at zero), relative to the value.
    pub residual: f64,
}

/// One-sided continued fraction `G^±_x` truncated at `depth` levels, with the
/// innermost `G` seeded by `tail`. `tail = inf` means `G = c` at the bottom.
fn fraction(bonds: impl DoubleEndedIterator<Item = f64>, s: f64, tail: f64) -> f64 {
    let mut g = tail;
    for c in bonds.rev() {
        g = 1.0 / (1.0 / c + 1.0 / (s + g));
    }
    g
}

/// Tail-at-zero and tail-at-infinity values at `depth`; they enclose the limit.
fn bracket(env: &Environment, x: i64, s: f64, depth: usize, right: bool) -> (f64, f64) {
    // G^+_x uses c_{x,x+1}, c_{x+1,x+2}, ..; G^-_x uses c_{x-1,x}, c_{x-2,x-1}, ..
    let bond = |k: usize| {
        let site = if right { x + k as i64 } else { x - 1 - k as i64 };
        env.value(site).expect("window covers the fraction")
    };
    let lower = fraction((0..depth).map(bond), s, 0.0);
    let upper = fraction((0..depth).map(bond), s, f64::INFINITY);
    (lower, upper)
}

fn check_rates(env: &Environment, s: f64) -> Result<()> {
    if env.model() != Model::Rates && env.model() != Model::Bonds {
        return Err(Error::WrongModel { expected: "rate", found: env.model().name() });
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("Laplace variable must be positive, got {s}")));
    }
    Ok(())
}

/// `G^+_x` and `G^-_x`, deepening geometrically from `depth` until the
/// bracketing evaluations agree to `tol` (relative).
pub fn g_at(env: &mut Environment, x: i64, s: f64, depth: usize, tol: f64) -> Result<GPair> {
    check_rates(env, s)?;
    let mut d = depth.max(1);
    loop {
        env.ensure(x - d as i64 - 1, x + d as i64)?;
        let (pl, pu) = bracket(env, x, s, d, true);
        let (ml, mu) = bracket(env, x, s, d, false);
        let width = ((pu - pl) / pu).max((mu - ml) / mu);
        if width <= tol {
            return Ok(GPair { s, plus: 0.5 * (pl + pu), minus: 0.5 * (ml + mu), depth: d, residual: width });
        }
        if d >= MAX_DEPTH {
            return Err(Error::NonConvergence { depth: d, width });
        }
        d = (d * 2).min(MAX_DEPTH);
    }
}

/// `G^±_0` of the environment.
pub fn g_continued_fraction(env: &mut Environment, s: f64, depth: usize, tol: f64) -> Result<GPair> {
    g_at(env, 0, s, depth, tol)
}

/// Fixed-depth evaluation with an explicit tail seed, no deepening.
pub fn g_plus_truncated(env: &mut Environment, s: f64, depth: usize, tail: f64) -> Result<f64> {
    check_rates(env, s)?;
    env.ensure(-1, depth as i64)?;
    let bond = |k: usize| env.value(k as i64).expect("window covers the fraction");
    Ok(fraction((0..depth).map(bond), s, tail))
}

/// `p̂_00(s) = 1 / (s + G^+_0 + G^-_0)`.
pub fn laplace_p00(env: &mut Environment, s: f64, depth: usize, tol: f64) -> Result<f64> {
    let g = g_continued_fraction(env, s, depth, tol)?;
    Ok(1.0 / (s + g.plus + g.minus))
}

/// Closed form for constant rates `c`: the fixed point of `G = (1/c + 1/(s+G))^{-1}`.
pub fn constant_rate_g(c: f64, s: f64) -> f64 {
    0.5 * (-s + (s * s + 4.0 * c * s).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceRow {
    pub s: f64,
    pub mean_p00: f64,
    pub std_error: f64,
    /// Fraction of environments whose bracket certificate held.
    pub certified: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ReturnRegime {
    /// `c_* > 0`: `E p̂_00(s) ~ (4 c_* s)^{-1/2}`.
    Diffusive { c_star: f64 },
    /// `c_* = 0` for rate density `(1-α) u^{-α}`; `E p_00(t) ~ t^{-time_exponent}`.
    Subdiffusive { alpha: f64, time_exponent: f64 },
    /// `c_* = 0` without a known exponent.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnAsymptote {
    pub table: Vec<LaplaceRow>,
    /// Rows used in the fit (the lowest certified decade).
    pub fit_window: (f64, f64),
    /// Slope of `ln E p̂_00` against `ln s`.
    pub slope: f64,
    pub intercept: f64,
    /// `c_*` implied by the fitted curve at the window's geometric centre.
    pub implied_c_star: f64,
    /// Time-domain decay exponent implied by the slope, `-(1 + slope)`.
    pub implied_time_exponent: f64,
    pub regime: ReturnRegime,
}

/// Environment-averaged `p̂_00(s)` over `n_env` environments, fitted on the lowest
/// decade of `s` where at least 99% of the continued fractions were certified.
pub fn annealed_return_asymptote(
    law: &EnvironmentLaw,
    s_grid: &[f64],
    n_env: usize,
    depth: usize,
    base_seed: u64,
) -> Result<ReturnAsymptote> {
    law.check()?;
    if law.model() != Model::Rates && law.model() != Model::Bonds {
        return Err(Error::WrongModel { expected: "rate", found: law.model().name() });
    }
    if n_env < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n_env });
    }
    let mut grid: Vec<f64> = s_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.len() < 3 || grid.iter().any(|&s| !(s > 0.0)) || grid[grid.len() - 1] / grid[0] < 100.0 {
        return Err(Error::InvalidArgument("s grid needs >= 3 positive points spanning >= 2 decades".into()));
    }

    // samples[e][i]: None when the bracket failed to certify
    let samples: Vec<Vec<Option<f64>>> = (0..n_env)
        .into_par_iter()
        .map(|e| {
            let mut env = Environment::realize(law, env_seed(base_seed, e as u64), -1..=1)?;
            grid.iter()
                .map(|&s| match laplace_p00(&mut env, s, depth, DEFAULT_TOL.max(1e-10)) {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::NonConvergence { .. }) => Ok(None),
                    Err(err) => Err(err),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let table: Vec<LaplaceRow> = grid
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let vals: Vec<f64> = samples.iter().filter_map(|row| row[i]).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            LaplaceRow { s, mean_p00: mean, std_error: (var / n).sqrt(), certified: n / n_env as f64 }
        })
        .collect();

    let lo_idx = table
        .iter()
        .position(|r| r.certified >= 0.99 && r.mean_p00.is_finite())
        .ok_or(Error::NonConvergence { depth: MAX_DEPTH, width: f64::NAN })?;
    let s_lo = table[lo_idx].s;
    let window: Vec<&LaplaceRow> = table[lo_idx..].iter().filter(|r| r.s <= 10.0 * s_lo * (1.0 + 1e-12) && r.certified >= 0.99).collect();
    if window.len() < 2 {
        return Err(Error::InvalidArgument("fit window holds fewer than 2 grid points".into()));
    }
    let xs: Vec<f64> = window.iter().map(|r| r.s.ln()).collect();
    let ys: Vec<f64> = window.iter().map(|r| r.mean_p00.ln()).collect();
    let (slope, intercept, _) = line_fit(&xs, &ys);
    let centre = 0.5 * (xs[0] + xs[xs.len() - 1]);
    let p_centre = (intercept + slope * centre).exp();
    let implied_c_star = 1.0 / (4.0 * centre.exp() * p_centre * p_centre);

    let cond = conductivity_and_ema(law)?;
    let regime = if cond.c_star > 0.0 {
        ReturnRegime::Diffusive { c_star: cond.c_star }
    } else if let EnvironmentLaw::RatesPowerLaw { alpha } = law {
        ReturnRegime::Subdiffusive { alpha: *alpha, time_exponent: subdiffusive_exponents(*alpha).return_probability }
    } else {
        ReturnRegime::Unknown
    };

    Ok(ReturnAsymptote {
        fit_window: (window[0].s, window[window.len() - 1].s),
        table,
        slope,
        intercept,
        implied_c_star,
        implied_time_exponent: -(1.0 + slope),
        regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgen::Atom;

    fn constant(c: f64) -> Environment {
        Environment::realize(&EnvironmentLaw::Rates { atoms: vec![Atom::new(c, 1.0)] }, 1, -1..=1).unwrap()
    }

    #[test]
    fn constant_rates_match_quadratic() {
        for &(c, s) in &[(1.0, 0.5), (2.0, 1e-3), (0.3, 1e-5)] {
            let mut env = constant(c);
            let g = g_continued_fraction(&mut env, s, DEFAULT_DEPTH, 1e-13).unwrap();
            let exact = constant_rate_g(c, s);
            assert!((g.plus - exact).abs() < 1e-10 * exact.max(1.0), "{} vs {exact}", g.plus);
            assert!((g.minus - exact).abs() < 1e-10 * exact.max(1.0));
            let p = laplace_p00(&mut env, s, DEFAULT_DEPTH, 1e-13).unwrap();
            assert!((p - (s * s + 4.0 * c * s).powf(-0.5)).abs() < 1e-10 * p);
        }
    }

    #[test]
    fn single_level_with_zero_tail() {
        let mut env = constant(2.0);
        let g = g_plus_truncated(&mut env, 0.7, 1, 0.0).unwrap();
        assert_eq!(g, 1.0 / (1.0 / 2.0 + 1.0 / 0.7));
    }

    #[test]
    fn large_s_approaches_first_bond() {
        let law = EnvironmentLaw::Rates { atoms: vec![Atom::new(1.0, 0.5), Atom::new(4.0, 0.5)] };
        let mut env = Environment::realize(&law, 3, -1..=1).unwrap();
        let s = 1e6 * 4.0;
        let g = g_continued_fraction(&mut env, s, DEFAULT_DEPTH, 1e-12).unwrap();
        let c01 = env.value(0).unwrap();
        assert!((g.plus / c01 - 1.0).abs() < 0.01);
        let p = laplace_p00(&mut env, s, DEFAULT_DEPTH, 1e-12).unwrap();
        assert!((s * p - 1.0).abs() < 1e-5);
    }

    #[test]
    fn brackets_enclose_at_every_depth() {
        let law = EnvironmentLaw::Rates { atoms: vec![Atom::new(1.0, 0.5), Atom::new(4.0, 0.5)] };
        let mut env = Environment::realize(&law, 5, -1..=1).unwrap();
        let exact = g_continued_fraction(&mut env, 1e-3, DEFAULT_DEPTH, 1e-14).unwrap().plus;
        for depth in [1, 2, 5, 20, 100, 1000] {
            let lo = g_plus_truncated(&mut env, 1e-3, depth, 0.0).unwrap();
            let hi = g_plus_truncated(&mut env, 1e-3, depth, f64::INFINITY).unwrap();
            assert!(lo <= exact * (1.0 + 1e-13) && exact <= hi * (1.0 + 1e-13), "{depth}: {lo} {exact} {hi}");
        }
    }

    #[test]
    fn non_convergence_reports_width() {
        let mut env = constant(1.0);
        // depth capped by an impossible tolerance
        let err = g_continued_fraction(&mut env.clone().with_site_limit(1 << 13), 1e-9, 16, 1e-15).unwrap_err();
        assert!(matches!(err, Error::SiteBudget { .. } | Error::NonConvergence { .. }));
        assert!(g_continued_fraction(&mut env, -1.0, 16, 1e-12).is_err());
    }

    #[test]
    fn annealed_constant_rate_slope() {
        let law = EnvironmentLaw::Rates { atoms: vec![Atom::new(2.0, 1.0)] };
        let grid: Vec<f64> = (0..=12).map(|i| 1e-5 * 10f64.powf(i as f64 / 4.0)).collect();
        let a = annealed_return_asymptote(&law, &grid, 4, DEFAULT_DEPTH, 1).unwrap();
        assert!((a.slope + 0.5).abs() < 0.01, "{}", a.slope);
        assert!((a.implied_c_star / 2.0 - 1.0).abs() < 0.03, "{}", a.implied_c_star);
        assert!(matches!(a.regime, ReturnRegime::Diffusive { .. }));
    }
}
