//! Log-space accumulation of sums of products of odds ratios.

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Sums whose logarithm exceeds this are treated as divergent.
pub const OVERFLOW_LOG: f64 = 700.0;

pub const DEFAULT_DEPTH: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-12;

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ e^{x_i}` with a max shift.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A truncated nonnegative series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    /// Partial sum (a lower bound for the full series).
    pub partial: f64,
    pub log_partial: f64,
    pub terms: usize,
    /// The remaining terms fell below the tolerance, or the chain terminated at a zero factor.
    pub converged: bool,
    /// The partial sum passed the overflow guard.
    pub diverged: bool,
}

impl SeriesValue {
    /// Converged sum, or `+inf` when the series did not settle.
    pub fn value(&self) -> f64 {
        if self.converged {
            self.partial
        } else {
            f64::INFINITY
        }
    }

    fn from_log(log_partial: f64, terms: usize, converged: bool, diverged: bool) -> Self {
        SeriesValue { partial: log_partial.exp(), log_partial, terms, converged, diverged }
    }
}

/// `Σ_{k=0}^{depth-1} Π_{i=0}^{k} r_i` where `r_i = factor(i)`, accumulated in logs.
///
/// Stops early when a factor is zero (exact termination) or when a term drops
/// below `tol` times the running sum.
pub fn product_series(mut factor: impl FnMut(usize) -> Result<f64>, depth: usize, tol: f64) -> Result<SeriesValue> {
    let log_tol = tol.ln();
    let mut log_prod = 0.0;
    let mut log_sum = f64::NEG_INFINITY;
    for k in 0..depth {
        let r = factor(k)?;
        if r == 0.0 {
            return Ok(SeriesValue::from_log(log_sum, k, true, false));
        }
        log_prod += r.ln();
        log_sum = log_add(log_sum, log_prod);
        if log_sum > OVERFLOW_LOG {
            return Ok(SeriesValue::from_log(log_sum, k + 1, false, true));
        }
        if log_prod - log_sum < log_tol {
            return Ok(SeriesValue::from_log(log_sum, k + 1, true, false));
        }
    }
    Ok(SeriesValue::from_log(log_sum, depth, false, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct() {
        assert!((log_add(1.0f64.ln(), 2.0f64.ln()) - 3.0f64.ln()).abs() < 1e-15);
        assert_eq!(log_add(f64::NEG_INFINITY, 0.5), 0.5);
        assert!((log_add(1000.0, 1000.0) - (1000.0 + 2.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_handles_empty_and_large() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[800.0, 800.0, 800.0]);
        assert!((v - (800.0 + 3.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn geometric_product_series() {
        let r = 0.5;
        let s = product_series(|_| Ok(r), 10_000, 1e-14).unwrap();
        assert!(s.converged);
        assert!((s.partial - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zero_factor_terminates() {
        let s = product_series(|k| Ok(if k == 3 { 0.0 } else { 2.0 }), 100, 1e-12).unwrap();
        assert!(s.converged);
        assert!((s.partial - 14.0).abs() < 1e-13);
    }

    #[test]
    fn growth_overflows() {
        let s = product_series(|_| Ok(2.0), 10_000, 1e-12).unwrap();
        assert!(s.diverged && !s.converged);
        assert_eq!(s.value(), f64::INFINITY);
    }
}
