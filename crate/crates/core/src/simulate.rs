//! Quenched walk engines and deterministic annealed ensembles.
//!
//! Every walk draws from its own counter-based stream keyed by
//! `(base seed, environment index, walk index)`, and every environment is
//! keyed by `(base seed, environment index)`, so results do not depend on
//! scheduling. Ensembles collect per-environment records in index order and
//! reduce them sequentially.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envgen::{Environment, EnvironmentLaw, Model};
use crate::error::{Error, Result};
use crate::rng::{self, domain, threshold, CounterRng, HalfWordStream};

/// Hard cap on continuous-time events per trajectory.
pub const EVENT_GUARD: u64 = 1_000_000_000;

const ENV_SEED_TAG: u64 = 0x656e_765f_7365_6564;

/// Seed of environment `index` in an ensemble.
pub fn env_seed(base_seed: u64, index: u64) -> u64 {
    rng::derive_key(base_seed, ENV_SEED_TAG, &[index])
}

/// Key of walk `walk` in environment `env`.
pub fn walk_key(base_seed: u64, env: u64, walk: u64) -> u64 {
    rng::derive_key(base_seed, domain::WALK, &[env, walk])
}

/// Geometric grid `round(10^{k/per_decade})` up to `max`, deduplicated, always ending at `max`.
pub fn geometric_checkpoints(max: u64, per_decade: u32) -> Vec<u64> {
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let v = 10f64.powf(k as f64 / per_decade as f64).round() as u64;
        if v >= max {
            break;
        }
        if out.last() != Some(&v) {
            out.push(v);
        }
        k += 1;
    }
    out.push(max);
    out
}

/// What a single walk records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkPlan {
    pub steps: u64,
    /// Step counts at which the position is recorded (sorted, at most `steps`).
    pub checkpoints: Vec<u64>,
    /// Positive levels whose hitting times are recorded (sorted).
    pub levels: Vec<i64>,
    /// Keep the full path (for regeneration scans).
    pub record_path: bool,
    /// End the walk once the last level is hit; no checkpoints are allowed.
    #[serde(default)]
    pub stop_at_last_level: bool,
    /// End the walk on its first visit to this negative level; no checkpoints are allowed.
    #[serde(default)]
    pub exit_below: Option<i64>,
}

impl WalkPlan {
    pub fn new(steps: u64) -> Self {
        WalkPlan { steps, checkpoints: vec![steps], levels: Vec::new(), record_path: false, stop_at_last_level: false, exit_below: None }
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn with_levels(mut self, levels: Vec<i64>) -> Self {
        self.levels = levels;
        self
    }

    pub fn with_path(mut self) -> Self {
        self.record_path = true;
        self
    }

    /// Stops each walk at its last hitting time and drops the checkpoints.
    pub fn stopping_at_last_level(mut self) -> Self {
        self.stop_at_last_level = true;
        self.checkpoints.clear();
        self
    }

    /// Stops each walk when it first reaches `level < 0` and drops the checkpoints.
    pub fn exiting_below(mut self, level: i64) -> Self {
        self.exit_below = Some(level);
        self.checkpoints.clear();
        self
    }

    fn normalized(&self) -> Result<WalkPlan> {
        let mut checkpoints: Vec<u64> = self.checkpoints.iter().copied().filter(|&c| c <= self.steps).collect();
        checkpoints.sort_unstable();
        checkpoints.dedup();
        let mut levels = self.levels.clone();
        if levels.iter().any(|&l| l <= 0) {
            return Err(Error::InvalidArgument("hitting levels must be positive".into()));
        }
        levels.sort_unstable();
        levels.dedup();
        if self.stop_at_last_level && (!checkpoints.is_empty() || levels.is_empty()) {
            return Err(Error::InvalidArgument("stopping at the last level needs levels and no checkpoints".into()));
        }
        if let Some(floor) = self.exit_below {
            if floor >= 0 || !checkpoints.is_empty() {
                return Err(Error::InvalidArgument("an exit level must be negative and comes without checkpoints".into()));
            }
        }
        Ok(WalkPlan { checkpoints, levels, ..self.clone() })
    }
}

/// One quenched trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub env_seed: u64,
    pub walk_key: u64,
    pub checkpoints: Vec<u64>,
    pub positions: Vec<i64>,
    /// `max_{k <= t} |X_k|` at each checkpoint.
    pub max_abs: Vec<i64>,
    /// Visits to the origin (after time 0) up to each checkpoint.
    pub returns: Vec<u64>,
    pub levels: Vec<i64>,
    pub hitting_times: Vec<Option<u64>>,
    /// Left steps taken before each hitting time (nearest-neighbour walks only).
    pub left_steps_at_hit: Vec<Option<u64>>,
    pub steps: u64,
    pub left_steps: u64,
    pub final_position: i64,
    pub max_abs_final: i64,
    pub path: Option<Vec<i64>>,
}

/// Bernoulli thresholds `floor(p_x 2^32)` over a range of sites.
struct Thresholds {
    lo: i64,
    thr: Vec<u64>,
}

/// Sites covered by the first table; later tables double the span.
const INITIAL_SPAN: i64 = 256;

impl Thresholds {
    /// Table for `lo..=hi`, realizing whatever the environment still lacks.
    fn build(env: &mut Environment, lo: i64, hi: i64) -> Result<Self> {
        match env.model() {
            Model::Sites => {
                env.ensure(lo, hi)?;
                let start = (lo - env.lo()) as usize;
                let data = &env.scalars()[start..start + (hi - lo + 1) as usize];
                Ok(Thresholds { lo, thr: data.iter().map(|&p| threshold(p)).collect() })
            }
            Model::Bonds | Model::Rates => {
                // p_x = c_{x,x+1} / (c_{x-1,x} + c_{x,x+1}), with c_{x,x+1} stored at site x
                env.ensure(lo - 1, hi)?;
                let start = (lo - 1 - env.lo()) as usize;
                let data = &env.scalars()[start..start + (hi - lo + 2) as usize];
                let thr = data.windows(2).map(|w| threshold(w[1] / (w[0] + w[1]))).collect();
                Ok(Thresholds { lo, thr })
            }
            Model::BoundedJump => Err(Error::WrongModel { expected: "nearest-neighbour", found: "bounded-jump" }),
        }
    }

    /// A table at least twice as wide that also covers `x`.
    fn widen(&self, env: &mut Environment, x: i64) -> Result<Self> {
        let span = (self.thr.len() as i64).max(INITIAL_SPAN);
        let (lo, hi) = if x < self.lo { (x.min(self.lo - span), self.hi() - 1) } else { (self.lo, x.max(self.hi() - 1 + span)) };
        match Thresholds::build(env, lo, hi) {
            Err(Error::SiteBudget { .. }) => Thresholds::build(env, x.min(self.lo), x.max(self.hi() - 1)),
            other => other,
        }
    }

    #[inline(always)]
    fn hi(&self) -> i64 {
        self.lo + self.thr.len() as i64
    }
}

/// Extends the window past `x`, at least doubling it so growth stays amortized.
fn grow(env: &mut Environment, x: i64) -> Result<()> {
    let span = (env.len() as i64).max(1024);
    if x < env.lo() {
        env.ensure(x.min(env.lo() - span), env.lo())
    } else {
        let hi = env.lo() + env.len() as i64;
        env.ensure(hi, x.max(hi + span))
    }
}

/// Runs a nearest-neighbour walk from 0 in a site or bond environment.
pub fn run_walk(env: &mut Environment, plan: &WalkPlan, walk_key: u64) -> Result<TrajectoryRecord> {
    let plan = plan.normalized()?;
    if env.model() == Model::BoundedJump {
        return Err(Error::WrongModel { expected: "nearest-neighbour", found: "bounded-jump" });
    }
    if !env.contains(-1) || !env.contains(1) {
        env.ensure(-1, 1)?;
    }
    let mut th = Thresholds::build(env, -INITIAL_SPAN, INITIAL_SPAN)?;
    let mut stream = HalfWordStream::new(walk_key);

    let n_cp = plan.checkpoints.len();
    let mut positions = Vec::with_capacity(n_cp);
    let mut max_abs_cp = Vec::with_capacity(n_cp);
    let mut returns_cp = Vec::with_capacity(n_cp);
    let mut hitting = vec![None; plan.levels.len()];
    let mut left_at_hit = vec![None; plan.levels.len()];
    let mut path = plan.record_path.then(|| {
        // walks that stop early would waste a full-length buffer
        let mut v = Vec::with_capacity((plan.steps as usize + 1).min(1 << 20));
        v.push(0i64);
        v
    });

    let mut x: i64 = 0;
    let mut t: u64 = 0;
    let mut left: u64 = 0;
    let mut returns: u64 = 0;
    let (mut max_x, mut min_x) = (0i64, 0i64);
    let mut next_level = 0usize;
    let mut next_cp = 0usize;
    while next_cp < n_cp && plan.checkpoints[next_cp] == 0 {
        positions.push(0);
        max_abs_cp.push(0);
        returns_cp.push(0);
        next_cp += 1;
    }
    let mut level_target = plan.levels.first().copied().unwrap_or(i64::MAX);
    let floor = plan.exit_below.unwrap_or(i64::MIN);
    let mut done = false;

    while t < plan.steps && !done {
        let stop = if next_cp < n_cp { plan.checkpoints[next_cp] } else { plan.steps };
        while t < stop {
            let idx = x - th.lo;
            if idx < 0 || idx >= th.thr.len() as i64 {
                th = th.widen(env, x)?;
                continue;
            }
            let right = (stream.next_u32() < th.thr[idx as usize]) as i64;
            x += 2 * right - 1;
            left += (1 - right) as u64;
            returns += (x == 0) as u64;
            max_x = max_x.max(x);
            min_x = min_x.min(x);
            // the running maximum moves by one, so it first reaches a level exactly when x does
            if max_x >= level_target {
                hitting[next_level] = Some(t + 1);
                left_at_hit[next_level] = Some(left);
                next_level += 1;
                level_target = plan.levels.get(next_level).copied().unwrap_or(i64::MAX);
                done = plan.stop_at_last_level && next_level == plan.levels.len();
            }
            t += 1;
            if let Some(p) = path.as_mut() {
                p.push(x);
            }
            if done || x <= floor {
                done = true;
                break;
            }
        }
        if next_cp < n_cp && !done {
            positions.push(x);
            max_abs_cp.push(max_x.max(-min_x));
            returns_cp.push(returns);
            next_cp += 1;
        }
    }
    debug_assert!(th.hi() > th.lo);

    Ok(TrajectoryRecord {
        env_seed: env.seed(),
        walk_key,
        checkpoints: plan.checkpoints,
        positions,
        max_abs: max_abs_cp,
        returns: returns_cp,
        levels: plan.levels,
        hitting_times: hitting,
        left_steps_at_hit: left_at_hit,
        steps: t,
        left_steps: left,
        final_position: x,
        max_abs_final: max_x.max(-min_x),
        path,
    })
}

/// Cumulative jump thresholds scanned from `R` down to `-L`.
fn jump_tables(law: &EnvironmentLaw) -> Result<(usize, usize, Vec<Vec<u64>>)> {
    match law {
        EnvironmentLaw::BoundedJump { left, right, atoms } => {
            let tables = atoms
                .iter()
                .map(|a| {
                    let mut cum = 0.0;
                    let mut out = Vec::with_capacity(left + right + 1);
                    for k in (0..a.probs.len()).rev() {
                        cum += a.probs[k];
                        out.push(if k == 0 { 1u64 << 32 } else { threshold(cum) });
                    }
                    out
                })
                .collect();
            Ok((*left, *right, tables))
        }
        _ => Err(Error::WrongModel { expected: "bounded-jump", found: law.model().name() }),
    }
}

/// Runs a bounded-jump walk from 0. Hitting times record the first time `X >= level`.
pub fn run_bounded_jump(env: &mut Environment, plan: &WalkPlan, walk_key: u64) -> Result<TrajectoryRecord> {
    let plan = plan.normalized()?;
    let (_, right, tables) = jump_tables(env.law())?;
    let right = right as i64;
    env.ensure(-1, 1)?;
    let mut stream = HalfWordStream::new(walk_key);

    let n_cp = plan.checkpoints.len();
    let mut positions = Vec::with_capacity(n_cp);
    let mut max_abs_cp = Vec::with_capacity(n_cp);
    let mut returns_cp = Vec::with_capacity(n_cp);
    let mut hitting = vec![None; plan.levels.len()];
    let mut path = plan.record_path.then(|| vec![0i64]);
    let (mut x, mut t, mut returns) = (0i64, 0u64, 0u64);
    let (mut max_x, mut min_x) = (0i64, 0i64);
    let mut next_level = 0usize;
    let mut next_cp = 0usize;
    while next_cp < n_cp && plan.checkpoints[next_cp] == 0 {
        positions.push(0);
        max_abs_cp.push(0);
        returns_cp.push(0);
        next_cp += 1;
    }
    while t < plan.steps {
        let stop = if next_cp < n_cp { plan.checkpoints[next_cp] } else { plan.steps };
        while t < stop {
            let atom = match env.atom_index(x) {
                Some(a) => a,
                None => {
                    grow(env, x)?;
                    continue;
                }
            };
            let u = stream.next_u32();
            // the last entry is 2^32 and never passed
            let table = &tables[atom];
            let k: i64 = table[..table.len() - 1].iter().map(|&c| (u >= c) as i64).sum();
            x += right - k;
            if x > max_x {
                max_x = x;
                while next_level < plan.levels.len() && x >= plan.levels[next_level] {
                    hitting[next_level] = Some(t + 1);
                    next_level += 1;
                }
            }
            if x < min_x {
                min_x = x;
            }
            if x == 0 {
                returns += 1;
            }
            t += 1;
            if let Some(p) = path.as_mut() {
                p.push(x);
            }
        }
        if next_cp < n_cp {
            positions.push(x);
            max_abs_cp.push(max_x.max(-min_x));
            returns_cp.push(returns);
            next_cp += 1;
        }
    }
    let n_levels = plan.levels.len();
    Ok(TrajectoryRecord {
        env_seed: env.seed(),
        walk_key,
        checkpoints: plan.checkpoints,
        positions,
        max_abs: max_abs_cp,
        returns: returns_cp,
        levels: plan.levels,
        hitting_times: hitting,
        left_steps_at_hit: vec![None; n_levels],
        steps: plan.steps,
        left_steps: 0,
        final_position: x,
        max_abs_final: max_x.max(-min_x),
        path,
    })
}

/// Times `t < n` at which the path reaches a strict new maximum and never
/// goes below that level afterwards.
pub fn regeneration_times(path: &[i64]) -> Vec<usize> {
    let n = path.len();
    if n < 2 {
        return Vec::new();
    }
    let mut suffix_min = vec![i64::MAX; n + 1];
    for t in (0..n).rev() {
        suffix_min[t] = suffix_min[t + 1].min(path[t]);
    }
    let mut out = Vec::new();
    let mut prefix_max = i64::MIN;
    for t in 0..n - 1 {
        if path[t] > prefix_max && suffix_min[t + 1] >= path[t] {
            out.push(t);
        }
        prefix_max = prefix_max.max(path[t]);
    }
    out
}

/// Regeneration times of a recorded trajectory.
pub fn regeneration_diagnostic(record: &TrajectoryRecord) -> Result<Vec<usize>> {
    record.path.as_deref().map(regeneration_times).ok_or_else(|| Error::InvalidArgument("trajectory was recorded without its path".into()))
}

/// Continuous-time trajectory in a symmetric rate environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtrwRecord {
    pub env_seed: u64,
    pub walk_key: u64,
    pub time_checkpoints: Vec<f64>,
    pub positions: Vec<i64>,
    /// `∫_0^{t_max} e^{-s t} 1{X_t = 0} dt` for each requested `s`.
    pub laplace_s: Vec<f64>,
    pub laplace_occupation: Vec<f64>,
    pub events: u64,
    pub t_max: f64,
    pub final_position: i64,
}

/// Event-driven walk: exponential sojourn with rate `c_{x,x-1} + c_{x,x+1}`,
/// then a jump right with probability `c_{x,x+1} / (c_{x,x-1} + c_{x,x+1})`.
pub fn run_ctrw(env: &mut Environment, t_max: f64, walk_key: u64, time_checkpoints: &[f64], laplace_s: &[f64]) -> Result<CtrwRecord> {
    if env.model() != Model::Rates && env.model() != Model::Bonds {
        return Err(Error::WrongModel { expected: "rate", found: env.model().name() });
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument("t_max must be positive".into()));
    }
    let mut cps: Vec<f64> = time_checkpoints.iter().copied().filter(|&c| c <= t_max).collect();
    cps.sort_by(f64::total_cmp);
    let mut rng = CounterRng::new(walk_key);
    let mut positions = Vec::with_capacity(cps.len());
    let mut occ = vec![0.0; laplace_s.len()];
    env.ensure(-2, 2)?;
    let (mut x, mut t, mut events) = (0i64, 0.0f64, 0u64);
    let mut next_cp = 0;
    loop {
        if !env.contains(x - 1) || !env.contains(x) {
            grow(env, x - 1)?;
            grow(env, x)?;
        }
        let cl = env.value(x - 1).unwrap_or(0.0);
        let cr = env.value(x).unwrap_or(0.0);
        let rate = cl + cr;
        let dwell = rng.next_exp(rate);
        let t_next = (t + dwell).min(t_max);
        if x == 0 {
            for (o, &s) in occ.iter_mut().zip(laplace_s) {
                *o += ((-s * t).exp() - (-s * t_next).exp()) / s;
            }
        }
        while next_cp < cps.len() && cps[next_cp] < t + dwell {
            positions.push(x);
            next_cp += 1;
        }
        if t + dwell >= t_max {
            break;
        }
        t += dwell;
        x += if rng.next_f64() * rate < cr { 1 } else { -1 };
        events += 1;
        if events >= EVENT_GUARD {
            return Err(Error::EventBudget { events, time: t });
        }
    }
    while positions.len() < cps.len() {
        positions.push(x);
    }
    Ok(CtrwRecord {
        env_seed: env.seed(),
        walk_key,
        time_checkpoints: cps,
        positions,
        laplace_s: laplace_s.to_vec(),
        laplace_occupation: occ,
        events,
        t_max,
        final_position: x,
    })
}

/// Site law of a balanced walk on `Z^d`: at each site the axis weights are
/// `w_i ∝ 1 + disorder (2 U_i - 1)` and `p(e_i) = p(-e_i) = w_i / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalancedLaw {
    pub dim: usize,
    /// In `[0, 1)`; 0 gives the simple symmetric walk.
    pub disorder: f64,
}

impl BalancedLaw {
    pub fn check(&self) -> Result<()> {
        if !(2..=3).contains(&self.dim) {
            return Err(Error::InvalidLaw(format!("balanced walks need d in {{2, 3}}, got {}", self.dim)));
        }
        if !(0.0..1.0).contains(&self.disorder) {
            return Err(Error::InvalidLaw(format!("disorder {} not in [0, 1)", self.disorder)));
        }
        Ok(())
    }

    /// Smallest possible `p(±e_i)`.
    pub fn ellipticity(&self) -> f64 {
        let d = self.dim as f64;
        let lo = 1.0 - self.disorder;
        let hi = 1.0 + self.disorder;
        lo / (lo + (d - 1.0) * hi) / 2.0
    }

    /// Axis weights at a site (summing to 1).
    #[inline]
    fn weights(&self, key: u64, site: &[i64; 3]) -> [f64; 3] {
        let mut w = [0.0; 3];
        if self.disorder == 0.0 {
            w[..self.dim].fill(1.0 / self.dim as f64);
            return w;
        }
        let h = rng::draw(key, site_hash(site));
        let mut total = 0.0;
        for (i, wi) in w.iter_mut().enumerate().take(self.dim) {
            let u = ((h >> (21 * i)) & 0x1F_FFFF) as f64 / (1u64 << 21) as f64;
            *wi = 1.0 + self.disorder * (2.0 * u - 1.0);
            total += *wi;
        }
        for wi in w.iter_mut().take(self.dim) {
            *wi /= total;
        }
        w
    }
}

#[inline]
fn site_hash(site: &[i64; 3]) -> u64 {
    let mut h = rng::mix64(site[0] as u64 ^ 0x5851_F42D_4C95_7F2D);
    h = rng::mix64(h ^ (site[1] as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng::mix64(h ^ (site[2] as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedRecord {
    pub dim: usize,
    pub checkpoints: Vec<u64>,
    pub positions: Vec<[i64; 3]>,
    /// Visits to the origin up to each checkpoint.
    pub returns: Vec<u64>,
    /// `Σ_k 2 p_{X_k}(e_i)` per axis over the whole run (the predictable quadratic variation).
    pub quadratic_variation: [f64; 3],
}

/// Balanced walk on `Z^d` from the origin; the environment is hashed from `(env_seed, site)`.
pub fn run_balanced(law: &BalancedLaw, steps: u64, env_seed: u64, walk_key: u64, checkpoints: &[u64]) -> Result<BalancedRecord> {
    law.check()?;
    let env_key = rng::derive_key(env_seed, domain::ENVIRONMENT, &[law.dim as u64]);
    let mut cps: Vec<u64> = checkpoints.iter().copied().filter(|&c| c <= steps).collect();
    cps.sort_unstable();
    cps.dedup();
    let mut rng = CounterRng::new(walk_key);
    let mut pos = [0i64; 3];
    let mut qv = [0.0; 3];
    let mut returns = 0u64;
    let mut out_pos = Vec::with_capacity(cps.len());
    let mut out_ret = Vec::with_capacity(cps.len());
    let mut next_cp = 0;
    while next_cp < cps.len() && cps[next_cp] == 0 {
        out_pos.push(pos);
        out_ret.push(0);
        next_cp += 1;
    }
    for t in 1..=steps {
        let w = law.weights(env_key, &pos);
        let bits = rng.next_u64();
        let u = rng::to_unit(bits);
        let mut axis = law.dim - 1;
        let mut cum = 0.0;
        for (i, wi) in w.iter().enumerate().take(law.dim) {
            qv[i] += wi;
            cum += wi;
            if u < cum && axis == law.dim - 1 && i < law.dim - 1 {
                axis = i;
            }
        }
        // the lowest bit is independent of the 53 bits used for the axis
        pos[axis] += if bits & 1 == 0 { 1 } else { -1 };
        if pos == [0, 0, 0] {
            returns += 1;
        }
        if next_cp < cps.len() && cps[next_cp] == t {
            out_pos.push(pos);
            out_ret.push(returns);
            next_cp += 1;
        }
    }
    Ok(BalancedRecord { dim: law.dim, checkpoints: cps, positions: out_pos, returns: out_ret, quadratic_variation: qv })
}

/// Ensemble description for discrete-time walks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_env: usize,
    pub n_walks: usize,
    pub plan: WalkPlan,
    pub base_seed: u64,
    /// Stop after this many steps in total, leaving a resumable partial result.
    pub step_budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStats {
    pub step: u64,
    pub mean: f64,
    pub variance: f64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub frac_positive: f64,
    pub frac_negative: f64,
    pub mean_max_abs: f64,
    pub mean_returns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: i64,
    pub reached: usize,
    /// Quantiles with unreached walks counted as `+inf`.
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

/// Aggregated annealed statistics; `positions[c][m]` is member `m` at checkpoint `c`,
/// members ordered by environment then walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub law: EnvironmentLaw,
    pub n_env: usize,
    pub n_walks: usize,
    pub steps: u64,
    pub base_seed: u64,
    pub checkpoints: Vec<u64>,
    pub stats: Vec<CheckpointStats>,
    pub levels: Vec<i64>,
    pub level_stats: Vec<LevelStats>,
    pub positions: Vec<Vec<i64>>,
    pub max_abs: Vec<Vec<i64>>,
    pub hitting_times: Vec<Vec<Option<u64>>>,
}

/// Records of the environments completed so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialEnsemble {
    pub law: EnvironmentLaw,
    pub config: EnsembleConfig,
    pub records: Vec<Vec<TrajectoryRecord>>,
}

impl PartialEnsemble {
    pub fn completed(&self) -> usize {
        self.records.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleOutcome {
    Complete(EnsembleResult),
    Partial(PartialEnsemble),
}

/// Type-7 quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if sorted[lo] == sorted[hi] {
        return sorted[lo];
    }
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn run_environment(law: &EnvironmentLaw, cfg: &EnsembleConfig, e: usize) -> Result<Vec<TrajectoryRecord>> {
    let seed = env_seed(cfg.base_seed, e as u64);
    let mut env = Environment::realize(law, seed, -1..=1)?;
    (0..cfg.n_walks)
        .map(|w| {
            let key = walk_key(cfg.base_seed, e as u64, w as u64);
            match law.model() {
                Model::BoundedJump => run_bounded_jump(&mut env, &cfg.plan, key),
                _ => run_walk(&mut env, &cfg.plan, key),
            }
        })
        .collect()
}

/// Runs (or resumes) an ensemble. Environments are processed in parallel on
/// the current rayon pool; the result does not depend on the pool size.
pub fn run_ensemble_resumable(law: &EnvironmentLaw, cfg: &EnsembleConfig, resume: Option<PartialEnsemble>) -> Result<EnsembleOutcome> {
    law.check()?;
    if cfg.n_env == 0 || cfg.n_walks == 0 || cfg.plan.steps == 0 {
        return Err(Error::InvalidArgument("ensemble budgets must be positive".into()));
    }
    let mut records = match resume {
        Some(p) => {
            if p.law != *law || p.config.plan != cfg.plan || p.config.base_seed != cfg.base_seed || p.config.n_walks != cfg.n_walks {
                return Err(Error::InvalidArgument("partial result belongs to a different ensemble".into()));
            }
            p.records
        }
        None => Vec::new(),
    };
    let start = records.len();
    let per_env = cfg.plan.steps.saturating_mul(cfg.n_walks as u64);
    let end = match cfg.step_budget {
        Some(b) => (start + (b / per_env.max(1)) as usize).min(cfg.n_env),
        None => cfg.n_env,
    };
    let fresh: Vec<Vec<TrajectoryRecord>> = (start..end).into_par_iter().map(|e| run_environment(law, cfg, e)).collect::<Result<_>>()?;
    records.extend(fresh);
    if records.len() < cfg.n_env {
        return Ok(EnsembleOutcome::Partial(PartialEnsemble { law: law.clone(), config: cfg.clone(), records }));
    }
    Ok(EnsembleOutcome::Complete(aggregate(law, cfg, &records)))
}

/// Runs a complete ensemble; a step budget that cuts the run short is an error.
pub fn run_ensemble(law: &EnvironmentLaw, cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    match run_ensemble_resumable(law, cfg, None)? {
        EnsembleOutcome::Complete(r) => Ok(r),
        EnsembleOutcome::Partial(p) => Err(Error::BudgetExhausted { completed: p.completed(), total: cfg.n_env }),
    }
}

fn aggregate(law: &EnvironmentLaw, cfg: &EnsembleConfig, records: &[Vec<TrajectoryRecord>]) -> EnsembleResult {
    let members: Vec<&TrajectoryRecord> = records.iter().flatten().collect();
    let first = members[0];
    let checkpoints = first.checkpoints.clone();
    let levels = first.levels.clone();
    let m = members.len() as f64;

    let positions: Vec<Vec<i64>> = (0..checkpoints.len()).map(|c| members.iter().map(|r| r.positions[c]).collect()).collect();
    let max_abs: Vec<Vec<i64>> = (0..checkpoints.len()).map(|c| members.iter().map(|r| r.max_abs[c]).collect()).collect();
    let stats = checkpoints
        .iter()
        .enumerate()
        .map(|(c, &step)| {
            let xs = &positions[c];
            let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / m;
            let variance = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            let mut sorted: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
            sorted.sort_by(f64::total_cmp);
            CheckpointStats {
                step,
                mean,
                variance,
                q10: quantile_sorted(&sorted, 0.1),
                median: quantile_sorted(&sorted, 0.5),
                q90: quantile_sorted(&sorted, 0.9),
                frac_positive: xs.iter().filter(|&&x| x > 0).count() as f64 / m,
                frac_negative: xs.iter().filter(|&&x| x < 0).count() as f64 / m,
                mean_max_abs: max_abs[c].iter().map(|&v| v as f64).sum::<f64>() / m,
                mean_returns: members.iter().map(|r| r.returns[c] as f64).sum::<f64>() / m,
            }
        })
        .collect();
    let hitting_times: Vec<Vec<Option<u64>>> = (0..levels.len()).map(|l| members.iter().map(|r| r.hitting_times[l]).collect()).collect();
    let level_stats = levels
        .iter()
        .enumerate()
        .map(|(l, &level)| {
            let mut sorted: Vec<f64> = hitting_times[l].iter().map(|h| h.map_or(f64::INFINITY, |v| v as f64)).collect();
            sorted.sort_by(f64::total_cmp);
            LevelStats {
                level,
                reached: hitting_times[l].iter().filter(|h| h.is_some()).count(),
                q25: quantile_sorted(&sorted, 0.25),
                median: quantile_sorted(&sorted, 0.5),
                q75: quantile_sorted(&sorted, 0.75),
            }
        })
        .collect();
    EnsembleResult {
        law: law.clone(),
        n_env: cfg.n_env,
        n_walks: cfg.n_walks,
        steps: cfg.plan.steps,
        base_seed: cfg.base_seed,
        checkpoints,
        stats,
        levels,
        level_stats,
        positions,
        max_abs,
        hitting_times,
    }
}

/// Continuous-time ensemble summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtrwEnsemble {
    pub law: EnvironmentLaw,
    pub n_env: usize,
    pub n_walks: usize,
    pub t_max: f64,
    pub time_checkpoints: Vec<f64>,
    /// `positions[c][m]`.
    pub positions: Vec<Vec<i64>>,
    pub mean_square: Vec<f64>,
    /// Fraction of members at the origin at each checkpoint.
    pub return_fraction: Vec<f64>,
    pub laplace_s: Vec<f64>,
    pub mean_laplace_occupation: Vec<f64>,
    pub mean_events: f64,
}

pub fn run_ctrw_ensemble(
    law: &EnvironmentLaw,
    n_env: usize,
    n_walks: usize,
    t_max: f64,
    time_checkpoints: &[f64],
    laplace_s: &[f64],
    base_seed: u64,
) -> Result<CtrwEnsemble> {
    law.check()?;
    if n_env == 0 || n_walks == 0 {
        return Err(Error::InvalidArgument("ensemble budgets must be positive".into()));
    }
    let records: Vec<Vec<CtrwRecord>> = (0..n_env)
        .into_par_iter()
        .map(|e| {
            let mut env = Environment::realize(law, env_seed(base_seed, e as u64), -2..=2)?;
            (0..n_walks)
                .map(|w| run_ctrw(&mut env, t_max, walk_key(base_seed, e as u64, w as u64), time_checkpoints, laplace_s))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let members: Vec<&CtrwRecord> = records.iter().flatten().collect();
    let m = members.len() as f64;
    let cps = members[0].time_checkpoints.clone();
    let positions: Vec<Vec<i64>> = (0..cps.len()).map(|c| members.iter().map(|r| r.positions[c]).collect()).collect();
    let mean_square = positions.iter().map(|xs| xs.iter().map(|&x| (x as f64).powi(2)).sum::<f64>() / m).collect();
    let return_fraction = positions.iter().map(|xs| xs.iter().filter(|&&x| x == 0).count() as f64 / m).collect();
    let mean_laplace_occupation = (0..laplace_s.len()).map(|i| members.iter().map(|r| r.laplace_occupation[i]).sum::<f64>() / m).collect();
    Ok(CtrwEnsemble {
        law: law.clone(),
        n_env,
        n_walks,
        t_max,
        time_checkpoints: cps,
        positions,
        mean_square,
        return_fraction,
        laplace_s: laplace_s.to_vec(),
        mean_laplace_occupation,
        mean_events: members.iter().map(|r| r.events as f64).sum::<f64>() / m,
    })
}

/// Balanced-walk ensemble summary; one environment per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedEnsemble {
    pub law: BalancedLaw,
    pub runs: usize,
    pub checkpoints: Vec<u64>,
    pub mean_returns: Vec<f64>,
    /// Per-axis mean of `X_n` at the last checkpoint and its standard error.
    pub axis_mean: [f64; 3],
    pub axis_std_error: [f64; 3],
    pub mean_square_norm: Vec<f64>,
    pub mean_quadratic_variation: [f64; 3],
}

pub fn run_balanced_ensemble(law: &BalancedLaw, runs: usize, steps: u64, checkpoints: &[u64], base_seed: u64) -> Result<BalancedEnsemble> {
    law.check()?;
    if runs < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: runs });
    }
    let records: Vec<BalancedRecord> = (0..runs)
        .into_par_iter()
        .map(|r| run_balanced(law, steps, env_seed(base_seed, r as u64), walk_key(base_seed, r as u64, 0), checkpoints))
        .collect::<Result<_>>()?;
    let n = runs as f64;
    let cps = records[0].checkpoints.clone();
    let last = cps.len() - 1;
    let mean_returns = (0..cps.len()).map(|c| records.iter().map(|r| r.returns[c] as f64).sum::<f64>() / n).collect();
    let mean_square_norm = (0..cps.len())
        .map(|c| records.iter().map(|r| r.positions[c].iter().map(|&v| (v as f64).powi(2)).sum::<f64>()).sum::<f64>() / n)
        .collect();
    let mut axis_mean = [0.0; 3];
    let mut axis_std_error = [0.0; 3];
    let mut mean_qv = [0.0; 3];
    for i in 0..law.dim {
        let xs: Vec<f64> = records.iter().map(|r| r.positions[last][i] as f64).collect();
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        axis_mean[i] = mean;
        axis_std_error[i] = (var / n).sqrt();
        mean_qv[i] = records.iter().map(|r| r.quadratic_variation[i]).sum::<f64>() / n;
    }
    Ok(BalancedEnsemble {
        law: *law,
        runs,
        checkpoints: cps,
        mean_returns,
        axis_mean,
        axis_std_error,
        mean_square_norm,
        mean_quadratic_variation: mean_qv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgen::{Atom, JumpAtom};

    fn constant(p: f64) -> EnvironmentLaw {
        EnvironmentLaw::DiscreteSites { atoms: vec![Atom::new(p, 1.0)] }
    }

    #[test]
    fn checkpoints_are_geometric() {
        let c = geometric_checkpoints(1000, 8);
        assert_eq!(c[0], 1);
        assert_eq!(*c.last().unwrap(), 1000);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn right_march() {
        let mut env = Environment::realize(&constant(1.0), 0, 0..=10).unwrap();
        let plan = WalkPlan::new(10_000).with_levels(vec![1, 10, 5000]).with_checkpoints(vec![0, 5, 10_000]);
        let r = run_walk(&mut env, &plan, 7).unwrap();
        assert_eq!(r.final_position, 10_000);
        assert_eq!(r.positions, vec![0, 5, 10_000]);
        assert_eq!(r.hitting_times, vec![Some(1), Some(10), Some(5000)]);
        assert_eq!(r.left_steps, 0);
    }

    #[test]
    fn left_step_identity_and_parity() {
        let law = EnvironmentLaw::TwoPointSites { alpha: 0.3, beta: 0.3 };
        for seed in 0..20 {
            let mut env = Environment::realize(&law, seed, -10..=10).unwrap();
            let plan = WalkPlan::new(20_000).with_levels(vec![1, 2, 5, 10, 30, 100]);
            let r = run_walk(&mut env, &plan, walk_key(seed, 0, 0)).unwrap();
            for (i, (&level, h)) in r.levels.iter().zip(&r.hitting_times).enumerate() {
                if let Some(t) = h {
                    let left = r.left_steps_at_hit[i].unwrap();
                    assert_eq!(*t, level as u64 + 2 * left);
                    assert_eq!((t - level as u64) % 2, 0);
                }
            }
        }
    }

    #[test]
    fn exit_level_ends_the_walk() {
        let mut env = Environment::realize(&constant(0.0), 0, -3..=3).unwrap();
        let r = run_walk(&mut env, &WalkPlan::new(100).exiting_below(-5), 1).unwrap();
        assert_eq!((r.steps, r.final_position), (5, -5));
        assert!(WalkPlan::new(100).exiting_below(0).normalized().is_err());
    }

    #[test]
    fn stopping_at_last_level_keeps_hitting_times() {
        let law = EnvironmentLaw::TwoPointSites { alpha: 0.8, beta: 0.7 };
        let plan = WalkPlan::new(100_000).with_levels(vec![10, 200]);
        let stopping = plan.clone().stopping_at_last_level();
        let mut env = Environment::realize(&law, 4, -1..=1).unwrap();
        let full = run_walk(&mut env, &plan, 11).unwrap();
        let short = run_walk(&mut env, &stopping, 11).unwrap();
        assert_eq!(full.hitting_times, short.hitting_times);
        assert_eq!(Some(short.steps), short.hitting_times[1]);
        assert_eq!(short.final_position, 200);
        assert!(WalkPlan { checkpoints: vec![5], ..stopping }.normalized().is_err());
    }

    #[test]
    fn bounded_jump_reduces_to_nearest_neighbour() {
        let nn = EnvironmentLaw::TwoPointSites { alpha: 0.4, beta: 0.3 };
        let bj = EnvironmentLaw::BoundedJump {
            left: 1,
            right: 1,
            atoms: vec![JumpAtom { probs: vec![0.7, 0.0, 0.3], weight: 0.4 }, JumpAtom { probs: vec![0.3, 0.0, 0.7], weight: 0.6 }],
        };
        let plan = WalkPlan::new(50_000).with_path();
        let mut e1 = Environment::realize(&nn, 5, -1..=1).unwrap();
        let mut e2 = Environment::realize(&bj, 5, -1..=1).unwrap();
        let a = run_walk(&mut e1, &plan, 99).unwrap();
        let b = run_bounded_jump(&mut e2, &plan, 99).unwrap();
        assert_eq!(a.path, b.path);
    }

    #[test]
    fn regeneration_of_monotone_path() {
        let path: Vec<i64> = (0..=10).collect();
        assert_eq!(regeneration_times(&path), (0..10).collect::<Vec<_>>());
        let path = vec![0, 1, 0, 1, 2, 3, 2, 3, 4];
        assert_eq!(regeneration_times(&path), vec![0, 4]);
    }

    #[test]
    fn ensemble_is_thread_count_independent() {
        let law = EnvironmentLaw::TwoPointSites { alpha: 0.8, beta: 0.7 };
        let cfg = EnsembleConfig {
            n_env: 12,
            n_walks: 3,
            plan: WalkPlan::new(5000).with_checkpoints(vec![100, 1000, 5000]).with_levels(vec![10, 100]),
            base_seed: 77,
            step_budget: None,
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_ensemble(&law, &cfg)).unwrap();
        let b = four.install(|| run_ensemble(&law, &cfg)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partial_run_resumes_to_same_result() {
        let law = EnvironmentLaw::TwoPointSites { alpha: 0.8, beta: 0.7 };
        let mut cfg = EnsembleConfig { n_env: 10, n_walks: 2, plan: WalkPlan::new(2000), base_seed: 3, step_budget: None };
        let full = run_ensemble(&law, &cfg).unwrap();
        cfg.step_budget = Some(4 * 2 * 2000);
        let partial = match run_ensemble_resumable(&law, &cfg, None).unwrap() {
            EnsembleOutcome::Partial(p) => p,
            EnsembleOutcome::Complete(_) => panic!("budget should stop the run"),
        };
        assert_eq!(partial.completed(), 4);
        assert!(matches!(run_ensemble(&law, &cfg), Err(Error::BudgetExhausted { completed: 4, total: 10 })));
        cfg.step_budget = None;
        let resumed = match run_ensemble_resumable(&law, &cfg, Some(partial)).unwrap() {
            EnsembleOutcome::Complete(r) => r,
            EnsembleOutcome::Partial(_) => panic!("resume should finish"),
        };
        assert_eq!(full, resumed);
    }

    #[test]
    fn ctrw_constant_rates_occupation() {
        let law = EnvironmentLaw::Rates { atoms: vec![Atom::new(1.0, 1.0)] };
        let mut env = Environment::realize(&law, 1, -2..=2).unwrap();
        let r = run_ctrw(&mut env, 100.0, 5, &[1.0, 10.0, 100.0], &[0.5]).unwrap();
        assert_eq!(r.positions.len(), 3);
        assert!(r.laplace_occupation[0] > 0.0 && r.laplace_occupation[0] <= 2.0);
    }

    #[test]
    fn balanced_uniform_is_simple_walk() {
        let law = BalancedLaw { dim: 2, disorder: 0.0 };
        let ens = run_balanced_ensemble(&law, 2000, 1000, &[1000], 4).unwrap();
        assert!((ens.mean_square_norm[0] / 1000.0 - 1.0).abs() < 0.1);
        assert!((ens.mean_quadratic_variation[0] - 500.0).abs() < 1e-6);
    }
}
