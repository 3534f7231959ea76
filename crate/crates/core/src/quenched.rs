//! Exact computations inside one fixed environment: ruin probabilities,
//! mean hitting times, the potential, progeny sums and trap bounds.

use serde::{Deserialize, Serialize};

use crate::annealed;
use crate::envgen::{odds, Environment, EnvironmentLaw};
use crate::error::{Error, Result};
use crate::series::{self, log_add, product_series, SeriesValue};

/// `rho_x`, rejecting sites where the walk cannot step right.
fn rho_checked(env: &mut Environment, x: i64) -> Result<f64> {
    let p = env.p(x)?;
    if p <= 0.0 {
        return Err(Error::NonPositiveP { site: x, p });
    }
    Ok(odds(p))
}

/// Gambler's-ruin profile on `{0, ..., n}`: `u_i` is the probability of hitting 0 before `n` from `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinProfile {
    pub n: usize,
    pub u: Vec<f64>,
    /// `ln u_i`; `-inf` at `i = n`.
    pub log_u: Vec<f64>,
    /// `1 - u_1 = P_1{T_n < T_0}`.
    pub escape: f64,
    pub log_escape: f64,
    /// `ln(u_x - u_{x+1})` for `x = 0..n`, free of cancellation.
    pub log_drop: Vec<f64>,
}

impl RuinProfile {
    /// `u_{x+1} - u_x`.
    pub fn increment(&self, x: usize) -> f64 {
        -self.log_drop[x].exp()
    }
}

/// Hitting probabilities on `{0, ..., n}` from the products of `rho_1 ... rho_{n-1}`.
pub fn ruin_profile(env: &mut Environment, n: usize) -> Result<RuinProfile> {
    if n < 1 {
        return Err(Error::InvalidArgument("ruin window needs n >= 1".into()));
    }
    // l[x] = ln Π_{j=1..x} rho_j for x = 0..n-1
    let mut l = Vec::with_capacity(n);
    l.push(0.0);
    for x in 1..n {
        let r = rho_checked(env, x as i64)?;
        l.push(l[x - 1] + r.ln());
    }
    // suffix log-sums: tail[i] = ln Σ_{x=i..n-1} e^{l[x]}
    let mut tail = vec![f64::NEG_INFINITY; n + 1];
    for i in (0..n).rev() {
        tail[i] = log_add(tail[i + 1], l[i]);
    }
    let total = tail[0];
    let log_u: Vec<f64> = tail.iter().map(|&t| t - total).collect();
    let log_drop: Vec<f64> = l.iter().map(|&v| v - total).collect();
    // near 1, u_i is more accurate as 1 minus the prefix sum of the drops
    let mut head = f64::NEG_INFINITY;
    let u: Vec<f64> = log_u
        .iter()
        .enumerate()
        .map(|(i, &lu)| {
            if i > 0 {
                head = log_add(head, log_drop[i - 1]);
            }
            if lu > -std::f64::consts::LN_2 {
                -head.exp_m1()
            } else {
                lu.exp()
            }
        })
        .collect();
    let log_escape = -total;
    Ok(RuinProfile { n, u, log_u, escape: log_escape.exp(), log_escape, log_drop })
}

/// Result of the doubling search for `f_10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstPassage {
    /// Probability of ever reaching 0 from 1.
    pub f10: f64,
    pub converged: bool,
    /// Largest window examined.
    pub window: usize,
}

/// `f_10 = 1 - lim_n P_1{T_n < T_0}`, doubling `n` until the escape
/// probability changes by less than `tol`.
pub fn first_passage_right(env: &mut Environment, tol: f64, max_window: usize) -> Result<FirstPassage> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let max_window = max_window.max(2);
    let mut log_prod = 0.0;
    let mut log_sum = 0.0; // x = 0 term
    let mut prev_escape = f64::NAN;
    let mut next_check = 2usize;
    let mut n = 1usize; // log_sum currently covers x = 0..n-1
    loop {
        while n < next_check {
            let r = rho_checked(env, n as i64)?;
            log_prod += r.ln();
            log_sum = log_add(log_sum, log_prod);
            n += 1;
        }
        let escape = (-log_sum).exp();
        if (escape - prev_escape).abs() < tol {
            return Ok(FirstPassage { f10: 1.0 - escape, converged: true, window: n });
        }
        prev_escape = escape;
        if next_check >= max_window {
            return Ok(FirstPassage { f10: 1.0 - escape, converged: false, window: n });
        }
        next_check = (next_check * 2).min(max_window);
    }
}

/// `E^ω_0 τ_1` unrolled `depth` levels to the left:
/// `1 + 2 Σ_{k<depth} P_k + P_depth` with `P_k = Π_{i=0..k} rho_{-i}`.
///
/// The partial value is a lower bound, nondecreasing in `depth`.
pub fn quenched_mean_tau(env: &mut Environment, depth: usize, tol: f64) -> Result<SeriesValue> {
    if depth < 1 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let log_tol = tol.ln();
    let mut log_prod = 0.0;
    // log of Σ coefficient_k P_k, starting from the leading 1
    let mut log_sum = 0.0;
    for k in 0..=depth {
        let r = rho_checked(env, -(k as i64))?;
        if r == 0.0 {
            return Ok(series_from_log(log_sum, k, true, false));
        }
        log_prod += r.ln();
        let coeff: f64 = if k < depth { 2.0 } else { 1.0 };
        log_sum = log_add(log_sum, coeff.ln() + log_prod);
        if log_sum > series::OVERFLOW_LOG {
            return Ok(series_from_log(log_sum, k + 1, false, true));
        }
        if k < depth && log_prod - log_sum < log_tol {
            return Ok(series_from_log(log_sum, k + 1, true, false));
        }
    }
    Ok(series_from_log(log_sum, depth + 1, false, false))
}

fn series_from_log(log_partial: f64, terms: usize, converged: bool, diverged: bool) -> SeriesValue {
    SeriesValue { partial: log_partial.exp(), log_partial, terms, converged, diverged }
}

/// Mean total progeny `M_0 = Σ_{t>=1} Π_{j=0..t-1} rho_j`.
pub fn progeny_m0(env: &mut Environment, depth: usize, tol: f64) -> Result<SeriesValue> {
    product_series(|k| rho_checked(env, k as i64), depth, tol)
}

/// Potential `Y_x` over `a..=b`, with `Y_0 = 0` and `Y_x - Y_{x-1} = ln rho_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub a: i64,
    pub b: i64,
    pub y: Vec<f64>,
}

impl Potential {
    pub fn at(&self, x: i64) -> Option<f64> {
        self.y.get(usize::try_from(x - self.a).ok()?).copied()
    }

    /// False when a diode inside the span made some value infinite.
    pub fn is_finite(&self) -> bool {
        self.y.iter().all(|v| v.is_finite())
    }
}

pub fn potential(env: &mut Environment, a: i64, b: i64) -> Result<Potential> {
    if a > b {
        return Err(Error::EmptyRange { lo: a, hi: b });
    }
    // Y at the left end, then walk right
    let mut start = 0.0;
    if a > 0 {
        for j in 1..=a {
            start += rho_checked(env, j)?.ln();
        }
    } else {
        for j in (a + 1)..=0 {
            start -= rho_checked(env, j)?.ln();
        }
    }
    let mut y = Vec::with_capacity((b - a + 1) as usize);
    y.push(start);
    let mut cur = start;
    for x in (a + 1)..=b {
        let step = rho_checked(env, x)?.ln();
        // Y_0 is pinned to exactly 0
        cur = if x == 0 { 0.0 } else { cur + step };
        y.push(cur);
    }
    Ok(Potential { a, b, y })
}

/// Trap estimate for a window of length `L` at slope `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapBound {
    /// `exp(-L I(eps))`, the large-deviation weight of a trap of slope `eps`.
    pub bound: f64,
    /// `I(eps)`.
    pub rate: f64,
    /// `min_{eps > 0} I(eps) / eps`.
    pub kappa_from_rate: f64,
}

/// Any finite `eps` is accepted: slopes outside the support of `ln rho` get
/// `I = +inf` and bound 0.
pub fn trap_bound(law: &EnvironmentLaw, l: usize, eps: f64) -> Result<TrapBound> {
    if !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("slope {eps} is not finite")));
    }
    let eta = annealed::eta(law)?;
    if eta >= 0.0 {
        return Err(Error::Undefined(format!("trap bound needs eta < 0, got {eta}")));
    }
    let rate = annealed::legendre(law, eps)?;
    let bound = if rate.is_infinite() { 0.0 } else { (-(l as f64) * rate).exp() };
    let kappa_from_rate = annealed::kappa_from_rate(law)?;
    Ok(TrapBound { bound, rate, kappa_from_rate })
}
