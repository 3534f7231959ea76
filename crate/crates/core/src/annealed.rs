//! Annealed analytics computed exactly from the atoms of a law, plus the
//! environment-indexed series of the environment-seen-from-the-walker method.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::envgen::{odds, Atom, Environment, EnvironmentLaw};
use crate::error::{Error, Result};
use crate::rng::{self, domain, CounterRng};
use crate::series::{log_sum_exp, product_series, SeriesValue};

/// Largest exponent searched for the root of `F`; beyond it `kappa = +inf`.
pub const KAPPA_U_MAX: f64 = 64.0;
const KAPPA_TOL: f64 = 1e-13;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transience {
    TransientPlus,
    TransientMinus,
    Recurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransienceClass {
    pub class: Transience,
    pub eta: f64,
    /// `rho = 1` almost surely (ordinary symmetric walk).
    pub degenerate: bool,
}

fn rho_atoms(law: &EnvironmentLaw) -> Result<Vec<Atom>> {
    law.rho_atoms()
}

/// `E ln rho_0`; `-inf` when the law has diode sites.
pub fn eta(law: &EnvironmentLaw) -> Result<f64> {
    law.check()?;
    let atoms = rho_atoms(law)?;
    Ok(atoms.iter().map(|a| a.weight * a.value.ln()).sum())
}

pub fn classify(law: &EnvironmentLaw) -> Result<TransienceClass> {
    let atoms = rho_atoms(law)?;
    let eta = eta(law)?;
    let degenerate = atoms.iter().all(|a| a.value == 1.0);
    let scale: f64 = atoms.iter().filter(|a| a.value > 0.0).map(|a| a.weight * a.value.ln().abs()).sum();
    let class = if eta.abs() <= 1e-14 * (1.0 + scale) {
        Transience::Recurrent
    } else if eta < 0.0 {
        Transience::TransientPlus
    } else {
        Transience::TransientMinus
    };
    Ok(TransienceClass { class, eta, degenerate })
}

/// `E rho_0`.
pub fn mean_rho(law: &EnvironmentLaw) -> Result<f64> {
    Ok(rho_atoms(law)?.iter().map(|a| a.weight * a.value).sum())
}

/// `E rho_0^{-1}`; infinite with diode sites.
pub fn mean_inv_rho(law: &EnvironmentLaw) -> Result<f64> {
    Ok(rho_atoms(law)?.iter().map(|a| a.weight / a.value).sum())
}

/// Mean local drift `E(p_0 - q_0)`.
pub fn mean_drift(law: &EnvironmentLaw) -> Result<f64> {
    let atoms = law.site_atoms().ok_or(Error::WrongModel { expected: "site", found: law.model().name() })?;
    Ok(atoms.iter().map(|a| a.weight * (2.0 * a.value - 1.0)).sum())
}

/// Asymptotic velocity `lim X_t / t`.
pub fn velocity(law: &EnvironmentLaw) -> Result<f64> {
    law.check()?;
    let m = mean_rho(law)?;
    let mi = mean_inv_rho(law)?;
    Ok(if m < 1.0 {
        (1.0 - m) / (1.0 + m)
    } else if mi < 1.0 {
        -(1.0 - mi) / (1.0 + mi)
    } else {
        0.0
    })
}

/// Finite `ln rho` atoms as `(ln rho, weight)` and the mass of `rho = 0`.
fn log_atoms(law: &EnvironmentLaw) -> Result<(Vec<(f64, f64)>, f64)> {
    let mut finite = Vec::new();
    let mut zero_mass = 0.0;
    for a in rho_atoms(law)? {
        if a.value == 0.0 {
            zero_mass += a.weight;
        } else {
            finite.push((a.value.ln(), a.weight));
        }
    }
    Ok((finite, zero_mass))
}

/// `ln Σ w rho^u` over finite atoms only.
fn f_finite(atoms: &[(f64, f64)], u: f64) -> f64 {
    let terms: Vec<f64> = atoms.iter().map(|&(l, w)| w.ln() + u * l).collect();
    log_sum_exp(&terms)
}

/// `F'(u)` over finite atoms (the tilted mean of `ln rho`).
fn f_finite_slope(atoms: &[(f64, f64)], u: f64) -> f64 {
    let m = atoms.iter().map(|&(l, w)| w.ln() + u * l).fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for &(l, w) in atoms {
        let e = (w.ln() + u * l - m).exp();
        num += e * l;
        den += e;
    }
    num / den
}

/// Cumulant function `F(u) = ln E rho_0^u`.
pub fn cgf(law: &EnvironmentLaw, u: f64) -> Result<f64> {
    let (finite, zero_mass) = log_atoms(law)?;
    if zero_mass > 0.0 {
        if u == 0.0 {
            return Ok(0.0);
        }
        if u < 0.0 {
            return Ok(f64::INFINITY);
        }
    }
    Ok(f_finite(&finite, u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponent {
    /// Positive root of `F`, or `+inf`.
    pub kappa: f64,
    pub bracket: (f64, f64),
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Positive root of `E rho^kappa = 1` by bracketing and bisection.
pub fn kappa(law: &EnvironmentLaw) -> Result<CriticalExponent> {
    let eta = eta(law)?;
    if !(eta < 0.0) {
        return Err(Error::Undefined(format!("critical exponent needs eta < 0, got {eta}")));
    }
    let (finite, _) = log_atoms(law)?;
    let infinite = |hi: f64, f_hi: f64| CriticalExponent { kappa: f64::INFINITY, bracket: (hi, f64::INFINITY), f_lo: f_hi, f_hi: f64::NAN };
    if finite.iter().all(|&(l, _)| l <= 0.0) {
        return Ok(infinite(KAPPA_U_MAX, cgf(law, KAPPA_U_MAX)?));
    }
    let mut lo = 0.0;
    let mut hi = 0.5;
    while cgf(law, hi)? <= 0.0 {
        lo = hi;
        if hi >= KAPPA_U_MAX {
            return Ok(infinite(hi, cgf(law, hi)?));
        }
        hi = (hi * 2.0).min(KAPPA_U_MAX);
    }
    for _ in 0..400 {
        if hi - lo <= KAPPA_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cgf(law, mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (f_lo, f_hi) = (cgf(law, lo)?, cgf(law, hi)?);
    // a bracket touching 0 has the trivial root there; report the upper end
    let kappa = if lo > 0.0 && f_lo.abs() < f_hi.abs() { lo } else { hi };
    Ok(CriticalExponent { kappa, bracket: (lo, hi), f_lo, f_hi })
}

/// Maximizes a concave function on `[a, b]` by golden-section search.
fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..iters {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - GOLDEN * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + GOLDEN * (b - a);
            gd = g(d);
        }
    }
    if gc >= gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// Legendre transform `I(x) = sup_u {u x - F(u)}`.
///
/// `+inf` outside the closed hull of the `ln rho` support; at a hull endpoint
/// it equals minus the log-weight of that atom.
pub fn legendre(law: &EnvironmentLaw, x: f64) -> Result<f64> {
    let (finite, zero_mass) = log_atoms(law)?;
    if finite.is_empty() {
        return Ok(f64::INFINITY);
    }
    let hi = finite.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
    let lo = if zero_mass > 0.0 { f64::NEG_INFINITY } else { finite.iter().map(|a| a.0).fold(f64::INFINITY, f64::min) };
    let weight_at = |v: f64| finite.iter().filter(|a| a.0 == v).map(|a| a.1).sum::<f64>();
    if x > hi || x < lo {
        return Ok(f64::INFINITY);
    }
    if x == hi {
        return Ok(-weight_at(hi).ln());
    }
    if x == lo {
        return Ok(-weight_at(lo).ln());
    }
    let g = |u: f64| u * x - f_finite(&finite, u);
    if zero_mass > 0.0 {
        // only u >= 0 is admissible; u = 0 contributes 0
        if f_finite_slope(&finite, 0.0) >= x {
            return Ok((-f_finite(&finite, 0.0)).max(0.0));
        }
        let mut b = 1.0;
        while f_finite_slope(&finite, b) < x {
            b *= 2.0;
        }
        let (_, best) = golden_max(g, 0.0, b, 300);
        return Ok(best.max(0.0));
    }
    let (mut a, mut b) = (-1.0, 1.0);
    while f_finite_slope(&finite, a) > x {
        a *= 2.0;
    }
    while f_finite_slope(&finite, b) < x {
        b *= 2.0;
    }
    let (_, best) = golden_max(g, a, b, 300);
    Ok(best.max(0.0))
}

/// `min_{eps > 0} I(eps) / eps`; equals the critical exponent.
pub fn kappa_from_rate(law: &EnvironmentLaw) -> Result<f64> {
    let (finite, _) = log_atoms(law)?;
    let top = finite.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return Ok(f64::INFINITY);
    }
    let ratio = |e: f64| legendre(law, e).map(|i| i / e).unwrap_or(f64::INFINITY);
    let (_, best) = golden_max(|e| -ratio(e), 1e-9 * top, top, 300);
    Ok((-best).min(ratio(top)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanExcursion {
    /// Annealed mean duration of a left excursion.
    pub w1: f64,
    /// Annealed mean hitting time of 1 from 0.
    pub tau1: f64,
}

pub fn mean_excursion(law: &EnvironmentLaw) -> Result<MeanExcursion> {
    let m = mean_rho(law)?;
    Ok(if m < 1.0 {
        MeanExcursion { w1: 2.0 / (1.0 - m), tau1: (1.0 + m) / (1.0 - m) }
    } else {
        MeanExcursion { w1: f64::INFINITY, tau1: f64::INFINITY }
    })
}

/// Atoms `(t_k, (1 - alpha) alpha^k)` of the left-excursion duration in the
/// diode model, with `t_0 = 2` and `t_k = 2 + rho t_{k-1}`.
pub fn diode_excursion_atoms(alpha: f64, rho: f64, k_max: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut t = 2.0;
    let mut w = 1.0 - alpha;
    for _ in 0..=k_max {
        out.push((t, w));
        t = 2.0 + rho * t;
        w *= alpha;
    }
    out
}

fn rho_at(env: &mut Environment, x: i64) -> Result<f64> {
    let p = env.p(x)?;
    if p <= 0.0 {
        return Err(Error::NonPositiveP { site: x, p });
    }
    Ok(odds(p))
}

fn ballistic_velocity(env: &Environment) -> Result<f64> {
    let m = mean_rho(env.law())?;
    if m >= 1.0 {
        return Err(Error::Divergent(format!("E rho = {m} >= 1")));
    }
    Ok((1.0 - m) / (1.0 + m))
}

/// Density `f = v (1 + rho_0) Σ_{x>=0} Π_{j=1..x} rho_j` of the invariant law
/// of the environment seen from the walker.
pub fn invariant_density_f(env: &mut Environment, depth: usize, tol: f64) -> Result<f64> {
    let v = ballistic_velocity(env)?;
    let r0 = rho_at(env, 0)?;
    let s = product_series(|k| rho_at(env, k as i64 + 1), depth, tol)?;
    let s = checked(s, "invariant density")?;
    Ok(v * (1.0 + r0) * (1.0 + s))
}

fn checked(s: SeriesValue, what: &str) -> Result<f64> {
    if s.converged {
        Ok(s.partial)
    } else {
        Err(Error::Divergent(format!("{what} series did not converge after {} terms", s.terms)))
    }
}

/// `Δ(x) = v - 1 + 2 v Σ_{k>=0} Π_{i=0..k} rho_{x-i}`, the increment of the harmonic coordinate.
pub fn harmonic_increment(env: &mut Environment, x: i64, depth: usize, tol: f64) -> Result<f64> {
    let v = ballistic_velocity(env)?;
    let s = product_series(|k| rho_at(env, x - k as i64), depth, tol)?;
    Ok(v - 1.0 + 2.0 * v * checked(s, "harmonic increment")?)
}

/// `h(x)` with `h(0) = 0` and `h(x + 1) - h(x) = Δ(x)`.
pub fn harmonic_h(env: &mut Environment, x: i64, depth: usize, tol: f64) -> Result<f64> {
    let mut h = 0.0;
    if x > 0 {
        for k in 0..x {
            h += harmonic_increment(env, k, depth, tol)?;
        }
    } else {
        for k in 1..=-x {
            h -= harmonic_increment(env, -k, depth, tol)?;
        }
    }
    Ok(h)
}

/// Below this `|x|` the density differs from 1/2 by less than `e^{-1/(2|x|)}`.
const SINAI_FLAT: f64 = 1e-3;

/// Limit density `G'(x)` of the rescaled Sinai walk.
pub fn sinai_density(x: f64) -> f64 {
    let a = x.abs();
    if a < SINAI_FLAT {
        return 0.5;
    }
    let mut sum = 0.0;
    let mut k = 0u64;
    loop {
        let m = (2 * k + 1) as f64;
        let term = (-m * m * PI * PI * a / 8.0).exp() / m;
        if term < 1e-18 {
            break;
        }
        sum += if k.is_multiple_of(2) { term } else { -term };
        k += 1;
    }
    2.0 / PI * sum
}

/// Distribution function of `G'`, integrated termwise.
pub fn sinai_cdf(x: f64) -> f64 {
    let a = x.abs();
    let half_mass = if a < SINAI_FLAT {
        0.5 * a
    } else {
        // (16/π³) Σ (-1)^k (1 - e^{-c_k a}) / (2k+1)³ with Σ (-1)^k / (2k+1)³ = π³/32
        let mut tail = 0.0;
        let mut k = 0u64;
        loop {
            let m = (2 * k + 1) as f64;
            let term = (-m * m * PI * PI * a / 8.0).exp() / (m * m * m);
            if term < 1e-18 {
                break;
            }
            tail += if k.is_multiple_of(2) { term } else { -term };
            k += 1;
        }
        0.5 - 16.0 / (PI * PI * PI) * tail
    };
    0.5 + x.signum() * half_mass
}

/// Effective-medium constants of a bond or rate law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conductivity {
    pub mean_c: f64,
    pub mean_inv_c: f64,
    /// `(E c^{-1})^{-1}`, both the effective conductivity and the diffusion constant.
    pub c_bar: f64,
    pub c_star: f64,
    /// `E (c + c')^{-1}` over two independent bonds.
    pub delta_one: f64,
    /// `E c^{-1} / 2`.
    pub delta_star: f64,
    /// `(E c · E c^{-1})^{-1}`.
    pub sigma2_bonds: f64,
    pub subdiffusive: Option<SubdiffusiveExponents>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubdiffusiveExponents {
    /// Growth exponent of `E X_t^2`.
    pub msd: f64,
    /// Decay exponent of `E p_00(t)`.
    pub return_probability: f64,
    /// Scaling exponent of `X_t`.
    pub displacement: f64,
}

pub fn subdiffusive_exponents(alpha: f64) -> SubdiffusiveExponents {
    SubdiffusiveExponents {
        msd: 2.0 * (1.0 - alpha) / (2.0 - alpha),
        return_probability: (1.0 - alpha) / (2.0 - alpha),
        displacement: alpha / (1.0 + alpha),
    }
}

pub fn conductivity_and_ema(law: &EnvironmentLaw) -> Result<Conductivity> {
    law.check()?;
    match law {
        EnvironmentLaw::BondWeights { atoms } | EnvironmentLaw::Rates { atoms } => {
            let live: Vec<&Atom> = atoms.iter().filter(|a| a.weight > 0.0).collect();
            let mean_c: f64 = live.iter().map(|a| a.weight * a.value).sum();
            let mean_inv_c: f64 = live.iter().map(|a| a.weight / a.value).sum();
            let mut delta_one = 0.0;
            for a in &live {
                for b in &live {
                    delta_one += a.weight * b.weight / (a.value + b.value);
                }
            }
            Ok(Conductivity {
                mean_c,
                mean_inv_c,
                c_bar: 1.0 / mean_inv_c,
                c_star: 1.0 / mean_inv_c,
                delta_one,
                delta_star: 0.5 * mean_inv_c,
                sigma2_bonds: 1.0 / (mean_c * mean_inv_c),
                subdiffusive: None,
            })
        }
        EnvironmentLaw::RatesPowerLaw { alpha } => {
            // E c = (1 - α) / (2 - α); E c^{-1} diverges
            let mean_c = (1.0 - alpha) / (2.0 - alpha);
            Ok(Conductivity {
                mean_c,
                mean_inv_c: f64::INFINITY,
                c_bar: 0.0,
                c_star: 0.0,
                // the pair integral diverges logarithmically at 2α = 1 and beyond
                delta_one: if 2.0 * alpha < 1.0 { delta_one_sampled(law, 1_000_000, 0)?.0 } else { f64::INFINITY },
                delta_star: f64::INFINITY,
                sigma2_bonds: 0.0,
                subdiffusive: Some(subdiffusive_exponents(*alpha)),
            })
        }
        _ => Err(Error::WrongModel { expected: "bond or rate", found: law.model().name() }),
    }
}

/// Draws one conductance from a bond or rate law.
pub fn sample_conductance(law: &EnvironmentLaw, rng: &mut CounterRng) -> Result<f64> {
    match law {
        EnvironmentLaw::BondWeights { atoms } | EnvironmentLaw::Rates { atoms } => {
            let u = rng.next_f64();
            let mut cum = 0.0;
            let mut last = atoms[0].value;
            for a in atoms.iter().filter(|a| a.weight > 0.0) {
                cum += a.weight;
                last = a.value;
                if u < cum {
                    return Ok(a.value);
                }
            }
            Ok(last)
        }
        EnvironmentLaw::RatesPowerLaw { alpha } => Ok(rng.next_open0().powf(1.0 / (1.0 - alpha))),
        _ => Err(Error::WrongModel { expected: "bond or rate", found: law.model().name() }),
    }
}

/// Monte Carlo `E (c + c')^{-1}` from `n` independent pairs: `(mean, standard error)`.
pub fn delta_one_sampled(law: &EnvironmentLaw, n: usize, seed: u64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut r = CounterRng::new(rng::derive_key(seed, domain::PAIRS, &[]));
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let c = sample_conductance(law, &mut r)?;
        let c2 = sample_conductance(law, &mut r)?;
        let y = 1.0 / (c + c2);
        s += y;
        s2 += y * y;
    }
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(alpha: f64, beta: f64) -> EnvironmentLaw {
        EnvironmentLaw::TwoPointSites { alpha, beta }
    }

    fn slow_law() -> EnvironmentLaw {
        EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.9, 0.7), Atom::new(0.2, 0.3)] }
    }

    fn diode() -> EnvironmentLaw {
        EnvironmentLaw::Diode { alpha: 0.3, rho: 1.0 / 0.09 }
    }

    #[test]
    fn eta_of_canonical_model() {
        let c = classify(&two_point(0.3, 0.3)).unwrap();
        let expected = (2.0 * 0.3 - 1.0) * (0.7f64 / 0.3).ln();
        assert!((c.eta - expected).abs() < 1e-15);
        assert!((c.eta + 0.33893).abs() < 5e-5);
        assert_eq!(c.class, Transience::TransientPlus);
        for beta in [0.1, 0.3, 0.45, 0.8] {
            assert_eq!(classify(&two_point(0.5, beta)).unwrap().class, Transience::Recurrent);
        }
        let c = classify(&two_point(0.7, 0.5)).unwrap();
        assert!(c.degenerate && c.class == Transience::Recurrent);
    }

    #[test]
    fn sign_paradox_law() {
        let law = EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.95, 0.6), Atom::new(0.01, 0.4)] };
        assert!((mean_drift(&law).unwrap() - 0.148).abs() < 1e-12);
        let c = classify(&law).unwrap();
        let expected = 0.6 * (0.05f64 / 0.95).ln() + 0.4 * (99.0f64).ln();
        assert!((c.eta - expected).abs() < 1e-14);
        assert!((c.eta - 0.0714).abs() < 1e-3);
        assert_eq!(c.class, Transience::TransientMinus);
    }

    #[test]
    fn velocities() {
        let constant = EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.6, 1.0)] };
        assert!((velocity(&constant).unwrap() - 0.2).abs() < 1e-15);
        let law = two_point(0.8, 0.7);
        let m = 0.8 * 3.0 / 7.0 + 0.2 * 7.0 / 3.0;
        assert!((mean_rho(&law).unwrap() - m).abs() < 1e-15);
        assert!((velocity(&law).unwrap() - (1.0 - m) / (1.0 + m)).abs() < 1e-15);
        assert!((velocity(&law).unwrap() - 0.10527).abs() < 1e-5);
        let slow = slow_law();
        assert!((mean_rho(&slow).unwrap() - 1.277_777_777_777_778).abs() < 1e-12);
        assert!((mean_inv_rho(&slow).unwrap() - 6.375).abs() < 1e-12);
        assert_eq!(velocity(&slow).unwrap(), 0.0);
        assert!(eta(&slow).unwrap() < -1.12 && eta(&slow).unwrap() > -1.13);
        let d = diode();
        assert!((mean_rho(&d).unwrap() - 0.3 / 0.09).abs() < 1e-12);
        assert_eq!(velocity(&d).unwrap(), 0.0);
    }

    #[test]
    fn kappa_closed_forms() {
        let k = kappa(&two_point(0.8, 0.7)).unwrap();
        assert!((k.kappa - 4.0f64.ln() / (7.0f64 / 3.0).ln()).abs() < 1e-10);
        assert!(cgf(&two_point(0.8, 0.7), k.kappa).unwrap().abs() <= 1e-12);
        let k = kappa(&diode()).unwrap();
        assert!((k.kappa - 0.5).abs() < 1e-10);
        let k = kappa(&slow_law()).unwrap();
        assert!(cgf(&slow_law(), 0.7).unwrap() < 0.0 && cgf(&slow_law(), 0.8).unwrap() > 0.0);
        assert!((k.kappa - 0.77).abs() < 0.01);
    }

    #[test]
    fn kappa_sentinels() {
        let law = EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.6, 0.5), Atom::new(0.8, 0.5)] };
        assert_eq!(kappa(&law).unwrap().kappa, f64::INFINITY);
        assert!(matches!(kappa(&two_point(0.5, 0.3)), Err(Error::Undefined(_))));
    }

    #[test]
    fn rate_function_minimum_is_kappa() {
        for law in [two_point(0.8, 0.7), slow_law(), diode()] {
            let k = kappa(&law).unwrap().kappa;
            let r = kappa_from_rate(&law).unwrap();
            assert!((k - r).abs() < 1e-6, "{k} vs {r}");
        }
    }

    #[test]
    fn legendre_vanishes_at_mean() {
        let law = slow_law();
        let eta = eta(&law).unwrap();
        assert!(legendre(&law, eta).unwrap().abs() < 1e-12);
        assert_eq!(legendre(&law, 10.0).unwrap(), f64::INFINITY);
        let top = 4.0f64.ln();
        assert!((legendre(&law, top).unwrap() + 0.3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn excursions() {
        let constant = EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.6, 1.0)] };
        let e = mean_excursion(&constant).unwrap();
        assert!((e.w1 - 6.0).abs() < 1e-12 && (e.tau1 - 5.0).abs() < 1e-12);
        let e = mean_excursion(&diode()).unwrap();
        assert_eq!(e.w1, f64::INFINITY);
        let atoms = diode_excursion_atoms(0.3, 1.0, 5);
        for (k, (t, _)) in atoms.iter().enumerate() {
            assert_eq!(*t, 2.0 * (k + 1) as f64);
        }
        let atoms = diode_excursion_atoms(0.3, 1.0 / 0.09, 40);
        assert_eq!(atoms[0].0, 2.0);
        let gap = atoms[40].0.ln() - atoms[39].0.ln();
        assert!((gap - (1.0f64 / 0.09).ln()).abs() < 1e-10);
        assert!(((1.0f64 / 0.09).ln() - 2.408).abs() < 1e-3);
    }

    #[test]
    fn constant_environment_series_collapse() {
        let law = EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(0.6, 1.0)] };
        let mut env = Environment::realize(&law, 0, -10..=10).unwrap();
        let f = invariant_density_f(&mut env, 10_000, 1e-15).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        let d = harmonic_increment(&mut env, 3, 10_000, 1e-15).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn harmonic_recursion_residual() {
        let law = two_point(0.8, 0.7);
        let v = velocity(&law).unwrap();
        let mut env = Environment::realize(&law, 12, -100..=100).unwrap();
        for x in -20..20 {
            let d = harmonic_increment(&mut env, x, 10_000, 1e-15).unwrap();
            let dm = harmonic_increment(&mut env, x - 1, 10_000, 1e-15).unwrap();
            let r = odds(env.p(x).unwrap());
            let resid = d - r * dm - (v - 1.0 + (1.0 + v) * r);
            assert!(resid.abs() < 1e-12, "residual {resid}");
        }
        let h2 = harmonic_h(&mut env, 2, 10_000, 1e-15).unwrap();
        let d0 = harmonic_increment(&mut env, 0, 10_000, 1e-15).unwrap();
        let d1 = harmonic_increment(&mut env, 1, 10_000, 1e-15).unwrap();
        assert!((h2 - d0 - d1).abs() < 1e-14);
        let hm = harmonic_h(&mut env, -1, 10_000, 1e-15).unwrap();
        assert!((hm + harmonic_increment(&mut env, -1, 10_000, 1e-15).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn sinai_density_shape() {
        assert_eq!(sinai_density(0.0), 0.5);
        assert!((sinai_density(0.002) - 0.5).abs() < 1e-12);
        for x in [0.01, 0.3, 1.0, 2.5] {
            assert_eq!(sinai_density(x), sinai_density(-x));
            assert!(sinai_density(x) > 0.0);
        }
        assert!((sinai_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!(sinai_cdf(40.0) > 1.0 - 1e-12);
        assert!((sinai_cdf(0.7) + sinai_cdf(-0.7) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conductivity_of_two_atom_bonds() {
        let law = EnvironmentLaw::BondWeights { atoms: vec![Atom::new(1.0, 0.5), Atom::new(4.0, 0.5)] };
        let c = conductivity_and_ema(&law).unwrap();
        assert!((c.mean_inv_c - 0.625).abs() < 1e-15);
        assert!((c.c_bar - 1.6).abs() < 1e-15);
        assert!(c.c_bar < c.mean_c);
        assert!((c.sigma2_bonds - 0.64).abs() < 1e-15);
        assert!((c.delta_star - 0.3125).abs() < 1e-15);
        assert!((c.delta_one - 0.25625).abs() < 1e-15);
        let (m, se) = delta_one_sampled(&law, 200_000, 3).unwrap();
        assert!((m - 0.25625).abs() < 4.0 * se);
        assert!(c.delta_star > m + 4.0 * se);
    }

    #[test]
    fn power_law_rates_are_subdiffusive() {
        let c = conductivity_and_ema(&EnvironmentLaw::RatesPowerLaw { alpha: 0.5 }).unwrap();
        assert_eq!(c.c_star, 0.0);
        let e = c.subdiffusive.unwrap();
        assert!((e.return_probability - 1.0 / 3.0).abs() < 1e-15);
        assert!((e.msd - 2.0 / 3.0).abs() < 1e-15);
    }
}
