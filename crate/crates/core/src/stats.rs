//! Estimators that turn ensembles into limit-theorem verdicts.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::annealed::{classify, sinai_cdf, Transience};
use crate::envgen::EnvironmentLaw;
use crate::error::{Error, Result};
use crate::rng::{self, domain, CounterRng};
use crate::simulate::{quantile_sorted, EnsembleResult};

pub const BOOTSTRAP_ROUNDS: usize = 200;
/// Tail indices above this are reported as light-tailed.
pub const LIGHT_TAIL_INDEX: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Fitted abscissae and ordinates (logarithms for log-log fits).
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the fit.
    pub residual: f64,
    /// 95% interval for the slope.
    pub ci: (f64, f64),
}

impl ScalingFit {
    pub fn contains(&self, v: f64) -> bool {
        self.ci.0 <= v && v <= self.ci.1
    }
}

/// Least-squares line through `(x, y)`: `(slope, intercept, rms residual)`.
pub fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Straight-line fit with the usual OLS standard error for the slope.
pub fn ols_fit(x: Vec<f64>, y: Vec<f64>) -> Result<ScalingFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: x.len().min(y.len()) });
    }
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("fit data must be finite".into()));
    }
    let (slope, intercept, residual) = line_fit(&x, &y);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("degenerate abscissae".into()));
    }
    let se = (residual * residual * n / (n - 2.0) / sxx).sqrt();
    Ok(ScalingFit { x, y, slope, intercept, residual, ci: (slope - 1.96 * se, slope + 1.96 * se) })
}

/// Log-log OLS fit; every point must be positive.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<ScalingFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs positive data".into()));
    }
    ols_fit(x.iter().map(|v| v.ln()).collect(), y.iter().map(|v| v.ln()).collect())
}

fn bootstrap_rng(tag: u64, n: usize) -> CounterRng {
    CounterRng::new(rng::derive_key(tag, domain::BOOTSTRAP, &[n as u64]))
}

/// Percentile 95% interval of `stat` over resamples of `groups` indices.
fn bootstrap_groups(groups: usize, tag: u64, mut stat: impl FnMut(&[usize]) -> f64) -> (f64, f64) {
    let mut rng = bootstrap_rng(tag, groups);
    let mut idx = vec![0usize; groups];
    let mut vals: Vec<f64> = (0..BOOTSTRAP_ROUNDS)
        .map(|_| {
            for i in idx.iter_mut() {
                *i = rng.next_index(groups);
            }
            stat(&idx)
        })
        .filter(|v| v.is_finite())
        .collect();
    vals.sort_by(f64::total_cmp);
    (quantile_sorted(&vals, 0.025), quantile_sorted(&vals, 0.975))
}

/// Member indices of environment `e`.
fn env_members(ens: &EnsembleResult, e: usize) -> std::ops::Range<usize> {
    e * ens.n_walks..(e + 1) * ens.n_walks
}

/// Slope of mean `X_n` against `n` over checkpoints `>= min_step`,
/// with a bootstrap interval over environments.
pub fn velocity_fit(ens: &EnsembleResult, min_step: u64) -> Result<ScalingFit> {
    let cps: Vec<usize> = (0..ens.checkpoints.len()).filter(|&c| ens.checkpoints[c] >= min_step.max(1)).collect();
    if cps.len() < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: cps.len() });
    }
    let x: Vec<f64> = cps.iter().map(|&c| ens.checkpoints[c] as f64).collect();
    let mean_at = |c: usize, envs: &[usize]| {
        let mut s = 0.0;
        for &e in envs {
            s += env_members(ens, e).map(|m| ens.positions[c][m] as f64).sum::<f64>();
        }
        s / (envs.len() * ens.n_walks) as f64
    };
    let all: Vec<usize> = (0..ens.n_env).collect();
    let y: Vec<f64> = cps.iter().map(|&c| mean_at(c, &all)).collect();
    let (slope, intercept, residual) = line_fit(&x, &y);
    let ci = bootstrap_groups(ens.n_env, 1, |envs| {
        let yb: Vec<f64> = cps.iter().map(|&c| mean_at(c, envs)).collect();
        line_fit(&x, &yb).0
    });
    Ok(ScalingFit { x, y, slope, intercept, residual, ci })
}

/// Median hitting time at each level; unreached levels count as `+inf`.
fn median_hitting(ens: &EnsembleResult, l: usize, envs: &[usize]) -> f64 {
    let mut t: Vec<f64> =
        envs.iter().flat_map(|&e| env_members(ens, e)).map(|m| ens.hitting_times[l][m].map_or(f64::INFINITY, |v| v as f64)).collect();
    t.sort_by(f64::total_cmp);
    quantile_sorted(&t, 0.5)
}

/// Slope of `ln median(T_n)` against `ln n` over the recorded levels.
pub fn hitting_scaling(ens: &EnsembleResult) -> Result<ScalingFit> {
    let levels = &ens.levels;
    if levels.len() < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: levels.len() });
    }
    if (levels[levels.len() - 1] as f64) < 10.0 * levels[0] as f64 {
        return Err(Error::InvalidArgument("levels must span at least a decade".into()));
    }
    let all: Vec<usize> = (0..ens.n_env).collect();
    let x: Vec<f64> = levels.iter().map(|&n| (n as f64).ln()).collect();
    let med: Vec<f64> = (0..levels.len()).map(|l| median_hitting(ens, l, &all)).collect();
    if med.iter().any(|m| !m.is_finite()) {
        return Err(Error::Undefined("fewer than half the walks reached the top level".into()));
    }
    let y: Vec<f64> = med.iter().map(|m| m.ln()).collect();
    let (slope, intercept, residual) = line_fit(&x, &y);
    let ci = bootstrap_groups(ens.n_env, 2, |envs| {
        let yb: Vec<f64> = (0..levels.len()).map(|l| median_hitting(ens, l, envs).ln()).collect();
        line_fit(&x, &yb).0
    });
    Ok(ScalingFit { x, y, slope, intercept, residual, ci })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailIndex {
    pub index: f64,
    pub ci: (f64, f64),
    /// Upper order statistics used.
    pub k: usize,
    pub n: usize,
    /// `index > 5`: no heavy tail in the range of interest.
    pub light: bool,
}

/// Hill estimate from the top `k` order statistics (`k + 1` largest values needed).
fn hill(values: &mut [f64], k: usize) -> f64 {
    let n = values.len();
    let pivot = n - k - 1;
    values.select_nth_unstable_by(pivot, f64::total_cmp);
    let threshold = values[pivot].ln();
    let mean_excess = values[pivot + 1..].iter().map(|v| v.ln() - threshold).sum::<f64>() / k as f64;
    1.0 / mean_excess
}

/// Hill estimator over the top `k = floor(sqrt N)` order statistics with a
/// bootstrap percentile interval.
pub fn tail_index(samples: &[f64]) -> Result<TailIndex> {
    const MIN: usize = 10_000;
    if samples.len() < MIN {
        return Err(Error::TooFewSamples { needed: MIN, got: samples.len() });
    }
    if samples.iter().any(|&v| !(v > 0.0) || v.is_nan()) {
        return Err(Error::InvalidArgument("tail samples must be positive".into()));
    }
    let n = samples.len();
    let k = (n as f64).sqrt().floor() as usize;
    let mut work = samples.to_vec();
    let index = hill(&mut work, k);
    let mut rng = bootstrap_rng(3, n);
    let mut vals: Vec<f64> = (0..BOOTSTRAP_ROUNDS)
        .map(|_| {
            for w in work.iter_mut() {
                *w = samples[rng.next_index(n)];
            }
            hill(&mut work, k)
        })
        .filter(|v| v.is_finite())
        .collect();
    vals.sort_by(f64::total_cmp);
    let ci = (quantile_sorted(&vals, 0.025), quantile_sorted(&vals, 0.975));
    Ok(TailIndex { index, ci, k, n, light: index > LIGHT_TAIL_INDEX })
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov survival function `P(K > λ) = 2 Σ (-1)^{k-1} e^{-2 k² λ²}`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub distance: f64,
    pub p_value: f64,
    pub n: usize,
    pub level: f64,
    pub pass: bool,
}

/// `sup |F_n - F|` over sorted data. Tied values are covered because the
/// first copy sees the step below and the last copy the step above.
pub fn ks_distance_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// One-sample KS test against a continuous `cdf`, with Stephens' finite-n correction.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let distance = ks_distance_sorted(&sorted, cdf);
    let sn = (sorted.len() as f64).sqrt();
    let p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * distance);
    Ok(KsResult { distance, p_value, n: sorted.len(), level, pass: p_value > level })
}

/// KS test of `(x - mean) / sqrt(variance)` against the standard normal.
pub fn ks_normal(samples: &[f64], mean: f64, variance: f64, level: f64) -> Result<KsResult> {
    const MIN: usize = 1000;
    if samples.len() < MIN {
        return Err(Error::TooFewSamples { needed: MIN, got: samples.len() });
    }
    if !(variance > 0.0) {
        return Err(Error::InvalidArgument(format!("variance must be positive, got {variance}")));
    }
    let sd = variance.sqrt();
    let z: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
    ks_test(&z, normal_cdf, level)
}

/// Sample mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: a.len().min(b.len()) });
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let p_value = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
    Ok(KsResult { distance: d, p_value, n: a.len() + b.len(), level, pass: p_value > level })
}

/// `E (ln rho)^2`, the Sinai scaling constant of a recurrent site law.
pub fn sinai_sigma2(law: &EnvironmentLaw) -> Result<f64> {
    Ok(law.rho_atoms()?.iter().map(|a| a.weight * a.value.ln().powi(2)).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinaiRow {
    pub n: u64,
    pub ks_distance: f64,
    pub mean_max_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinaiReport {
    pub sigma2: f64,
    pub rows: Vec<SinaiRow>,
    /// Slope of `ln E max_{k<=n} |X_k|` against `ln ln n`.
    pub max_slope: ScalingFit,
    /// `σ² X_n / ln² n` at the last checkpoint.
    pub rescaled: Vec<f64>,
    /// KS distances strictly decrease along the grid.
    pub ks_decreasing: bool,
}

/// Rescales `X_n` by `ln² n / σ²` and compares with the Sinai limit law at every
/// checkpoint `>= min_step`.
pub fn sinai_rescale(ens: &EnsembleResult, sigma2: f64, min_step: u64) -> Result<SinaiReport> {
    let class = classify(&ens.law)?;
    if class.class != Transience::Recurrent {
        return Err(Error::InvalidArgument(format!("Sinai scaling needs a recurrent law, eta = {}", class.eta)));
    }
    if class.degenerate {
        return Err(Error::InvalidArgument("Sinai scaling needs P(rho = 1) < 1".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument("sigma2 must be positive".into()));
    }
    let cps: Vec<usize> = (0..ens.checkpoints.len()).filter(|&c| ens.checkpoints[c] >= min_step.max(3)).collect();
    if cps.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: cps.len() });
    }
    let rescale = |c: usize| {
        let l = (ens.checkpoints[c] as f64).ln();
        ens.positions[c].iter().map(|&x| sigma2 * x as f64 / (l * l)).collect::<Vec<f64>>()
    };
    let rows: Vec<SinaiRow> = cps
        .iter()
        .map(|&c| {
            let mut r = rescale(c);
            r.sort_by(f64::total_cmp);
            SinaiRow { n: ens.checkpoints[c], ks_distance: ks_distance_sorted(&r, sinai_cdf), mean_max_abs: ens.stats[c].mean_max_abs }
        })
        .collect();
    let lnln: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let mm: Vec<f64> = rows.iter().map(|r| r.mean_max_abs).collect();
    let max_slope = log_log_fit(&lnln, &mm)?;
    let ks_decreasing = rows.windows(2).all(|w| w[1].ks_distance < w[0].ks_distance);
    Ok(SinaiReport { sigma2, rows, max_slope, rescaled: rescale(*cps.last().unwrap()), ks_decreasing })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    /// `(ln n, E X_n / n^κ)` on the checkpoint grid.
    pub scaled: Vec<(f64, f64)>,
    /// `(ln n, scaled / one-period moving average)` where the window fits in the grid.
    pub detrended: Vec<(f64, f64)>,
    /// Minima locations in `ln n`.
    pub minima: Vec<f64>,
    /// Mean gap between consecutive minima.
    pub spacing: f64,
}

/// Minima shallower than this (relative to the curve level) are ignored.
pub const DEFAULT_PROMINENCE: f64 = 5e-3;

/// Trapezoidal mean of a piecewise-linear curve over `[a, b]`.
fn window_mean(pts: &[(f64, f64)], a: f64, b: f64) -> f64 {
    let at = |x: f64| {
        let i = pts.partition_point(|p| p.0 < x).clamp(1, pts.len() - 1);
        let ((x0, y0), (x1, y1)) = (pts[i - 1], pts[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    };
    let mut xs = vec![a];
    xs.extend(pts.iter().map(|p| p.0).filter(|&x| x > a && x < b));
    xs.push(b);
    let area: f64 = xs.windows(2).map(|w| 0.5 * (at(w[0]) + at(w[1])) * (w[1] - w[0])).sum();
    area / (b - a)
}

/// Local minima of `E X_n / n^κ` on the `ln n` axis.
///
/// The slowly varying envelope is divided out by a moving average over one
/// period (which leaves a periodic component intact and removes any linear
/// trend); minima are refined by three-point parabolas, must lie below the
/// highest points within half a period on both sides by `prominence`
/// (relative), and closer minima are merged.
pub fn oscillation_minima(steps: &[u64], means: &[f64], kappa: f64, period: f64) -> Result<OscillationReport> {
    oscillation_minima_with(steps, means, kappa, period, DEFAULT_PROMINENCE)
}

pub fn oscillation_minima_with(steps: &[u64], means: &[f64], kappa: f64, period: f64, prominence: f64) -> Result<OscillationReport> {
    if !(period > 0.0) {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let mut scaled: Vec<(f64, f64)> = steps
        .iter()
        .zip(means)
        .filter(|(&n, &m)| n > 0 && m > 0.0)
        .map(|(&n, &m)| {
            let l = (n as f64).ln();
            (l, m / (kappa * l).exp())
        })
        .collect();
    scaled.sort_by(|p, q| p.0.total_cmp(&q.0));
    scaled.dedup_by(|p, q| p.0 == q.0);
    if scaled.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: scaled.len() });
    }
    let (first, last) = (scaled[0].0, scaled[scaled.len() - 1].0);
    let half = 0.5 * period;
    let pts: Vec<(f64, f64)> = scaled
        .iter()
        .filter(|p| p.0 - half >= first && p.0 + half <= last)
        .map(|&(l, y)| (l, y / window_mean(&scaled, l - half, l + half)))
        .collect();

    let peak = |it: &mut dyn Iterator<Item = &(f64, f64)>| it.map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut minima: Vec<(f64, f64)> = Vec::new();
    for i in 1..pts.len().saturating_sub(1) {
        let ((x0, y0), (x1, y1), (x2, y2)) = (pts[i - 1], pts[i], pts[i + 1]);
        if !(y1 < y0 && y1 <= y2) {
            continue;
        }
        let left = peak(&mut pts[..i].iter().filter(|p| p.0 >= x1 - half));
        let right = peak(&mut pts[i + 1..].iter().filter(|p| p.0 <= x1 + half));
        if left.min(right) - y1 < prominence * y1.abs() {
            continue;
        }
        // vertex of the parabola through the three points
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let a = (d12 - d01) / (x2 - x0);
        let (xm, ym) = if a > 0.0 {
            let b = d01 - a * (x0 + x1);
            let xm = (-b / (2.0 * a)).clamp(x0, x2);
            (xm, y0 + d01 * (xm - x0) + a * (xm - x0) * (xm - x1))
        } else {
            (x1, y1)
        };
        match minima.last_mut() {
            Some(last) if xm - last.0 < half => {
                if ym < last.1 {
                    *last = (xm, ym);
                }
            }
            _ => minima.push((xm, ym)),
        }
    }
    if minima.len() < 2 {
        return Err(Error::Undefined(format!("found {} oscillation minima, need 2", minima.len())));
    }
    let spacing = (minima[minima.len() - 1].0 - minima[0].0) / (minima.len() - 1) as f64;
    Ok(OscillationReport { scaled, detrended: pts, minima: minima.iter().map(|m| m.0).collect(), spacing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize, tag: u64, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut rng = CounterRng::new(rng::derive_key(tag, domain::WALK, &[]));
        (0..n).map(|_| f(rng.next_open0())).collect()
    }

    #[test]
    fn hill_recovers_pareto_index() {
        for &k in &[0.5, 0.77, 1.64] {
            let xs = synthetic(100_000, 9, |u| u.powf(-1.0 / k));
            let t = tail_index(&xs).unwrap();
            assert!((t.index - k).abs() < 0.05 * k.max(1.0), "{k}: {t:?}");
            assert!(t.ci.0 <= k && k <= t.ci.1, "{k}: {t:?}");
        }
    }

    #[test]
    fn exponential_tail_is_light() {
        let xs = synthetic(100_000, 4, |u| -u.ln());
        assert!(tail_index(&xs).unwrap().light);
        assert!(matches!(tail_index(&xs[..100]), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn ks_matches_brute_force() {
        let xs = synthetic(100, 2, |u| (u - 0.5) * 3.0);
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let fast = ks_distance_sorted(&sorted, normal_cdf);
        let mut brute: f64 = 0.0;
        for &t in &xs {
            let below = xs.iter().filter(|&&v| v < t).count() as f64 / 100.0;
            let upto = xs.iter().filter(|&&v| v <= t).count() as f64 / 100.0;
            brute = brute.max((upto - normal_cdf(t)).abs()).max((normal_cdf(t) - below).abs());
        }
        assert!((fast - brute).abs() < 1e-12);
    }

    #[test]
    fn normal_samples_pass() {
        let mut rng = CounterRng::new(17);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.next_normal()).collect();
        let r = ks_normal(&xs, 0.0, 1.0, 0.05).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(ks_normal(&xs, 0.0, 0.0, 0.05).is_err());
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.2).collect();
        assert!(!ks_normal(&shifted, 0.0, 1.0, 0.05).unwrap().pass);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // P(K > 1.358) = 0.05
        assert!((kolmogorov_sf(1.358_098_8) - 0.05).abs() < 1e-6);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn two_sample_same_law_passes() {
        let a = synthetic(5000, 5, |u| u * u);
        let b = synthetic(5000, 6, |u| u * u);
        assert!(ks_two_sample(&a, &b, 0.01).unwrap().pass);
        let c = synthetic(5000, 7, |u| u);
        assert!(!ks_two_sample(&a, &c, 0.01).unwrap().pass);
    }

    #[test]
    fn synthetic_oscillation_spacing() {
        let period = 2.408;
        let steps: Vec<u64> = (0..=160).map(|i| 10f64.powf(2.0 + i as f64 / 40.0).round() as u64).collect();
        let means: Vec<f64> = steps
            .iter()
            .map(|&n| {
                let l = (n as f64).ln();
                (n as f64).sqrt() * (1.0 + 0.1 * (2.0 * std::f64::consts::PI * l / period).cos())
            })
            .collect();
        let r = oscillation_minima(&steps, &means, 0.5, period).unwrap();
        assert!(r.minima.len() >= 3);
        assert!((r.spacing - period).abs() < 0.02, "{}", r.spacing);
        let flat: Vec<f64> = steps.iter().map(|&n| (n as f64).sqrt()).collect();
        assert!(oscillation_minima(&steps, &flat, 0.5, period).is_err());
    }

    #[test]
    fn ols_slope_and_interval() {
        let x: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        let f = ols_fit(x, y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(f.contains(3.0));
        assert!(log_log_fit(&[1.0, 2.0, 4.0], &[1.0, 4.0, 16.0]).unwrap().slope - 2.0 < 1e-12);
    }
}
