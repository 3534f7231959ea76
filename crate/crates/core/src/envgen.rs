//! Environment laws and reproducible environments.
//!
//! The datum at site `x` is drawn from the law using the counter-based draw
//! at `(key, x)`, so any window of any environment can be realized in any
//! order and always yields the same values.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, domain};

/// Sites are realized in aligned blocks of this many.
pub const CHUNK: i64 = 4096;

/// Default cap on the number of realized sites per environment.
pub const DEFAULT_SITE_LIMIT: usize = 1 << 27;

const WEIGHT_TOL: f64 = 1e-12;

/// A law value with its probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub weight: f64,
}

impl Atom {
    pub fn new(value: f64, weight: f64) -> Self {
        Atom { value, weight }
    }
}

/// A jump distribution over displacements `-left..=right` with its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpAtom {
    pub probs: Vec<f64>,
    pub weight: f64,
}

/// Distribution of the per-site (or per-bond) randomness. All laws are i.i.d.
/// over sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentLaw {
    /// `p = beta` with probability `alpha`, `p = 1 - beta` otherwise.
    TwoPointSites { alpha: f64, beta: f64 },
    /// Two-way site with odds `rho` with probability `alpha`, diode (`p = 1`) otherwise.
    Diode { alpha: f64, rho: f64 },
    /// General finite law of `p`.
    DiscreteSites { atoms: Vec<Atom> },
    /// Finite law of jump vectors over `-left..=right`.
    BoundedJump { left: usize, right: usize, atoms: Vec<JumpAtom> },
    /// Finite law of bond conductances `c_{x,x+1}`.
    BondWeights { atoms: Vec<Atom> },
    /// Finite law of symmetric bond rates `c_{x,x+1} = c_{x+1,x}`.
    Rates { atoms: Vec<Atom> },
    /// Rates with density `(1 - alpha) u^(-alpha)` on `(0, 1)`.
    RatesPowerLaw { alpha: f64 },
}

/// Which walk an environment drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Sites,
    BoundedJump,
    Bonds,
    Rates,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Sites => "nearest-neighbour site",
            Model::BoundedJump => "bounded-jump",
            Model::Bonds => "random-bond",
            Model::Rates => "rate",
        }
    }
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    let mut count = 0;
    for w in weights {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidLaw(format!("weight {w} is not a nonnegative number")));
        }
        total += w;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidLaw("law has no atoms".into()));
    }
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidLaw(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidLaw(format!("{what} = {p} is not in [0, 1]")))
    }
}

/// Index of the atom selected by a uniform `u` in `[0, 1)`.
fn pick(weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut cum = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        cum += w;
        last = i;
        if u < cum {
            return i;
        }
    }
    last
}

impl EnvironmentLaw {
    pub fn model(&self) -> Model {
        match self {
            EnvironmentLaw::TwoPointSites { .. } | EnvironmentLaw::Diode { .. } | EnvironmentLaw::DiscreteSites { .. } => Model::Sites,
            EnvironmentLaw::BoundedJump { .. } => Model::BoundedJump,
            EnvironmentLaw::BondWeights { .. } => Model::Bonds,
            EnvironmentLaw::Rates { .. } | EnvironmentLaw::RatesPowerLaw { .. } => Model::Rates,
        }
    }

    /// Checks parameter ranges and normalization.
    pub fn check(&self) -> Result<()> {
        match self {
            EnvironmentLaw::TwoPointSites { alpha, beta } => {
                check_probability(*alpha, "alpha")?;
                check_probability(*beta, "beta")
            }
            EnvironmentLaw::Diode { alpha, rho } => {
                check_probability(*alpha, "alpha")?;
                if !(*rho > 0.0) || !rho.is_finite() {
                    return Err(Error::InvalidLaw(format!("diode rho = {rho} must be positive")));
                }
                Ok(())
            }
            EnvironmentLaw::DiscreteSites { atoms } => {
                check_weights(atoms.iter().map(|a| a.weight))?;
                atoms.iter().try_for_each(|a| check_probability(a.value, "p"))
            }
            EnvironmentLaw::BoundedJump { left, right, atoms } => {
                if *left == 0 || *right == 0 {
                    return Err(Error::InvalidLaw("bounded jumps need L >= 1 and R >= 1".into()));
                }
                check_weights(atoms.iter().map(|a| a.weight))?;
                for a in atoms {
                    if a.probs.len() != left + right + 1 {
                        return Err(Error::InvalidLaw(format!("jump vector has {} entries, expected {}", a.probs.len(), left + right + 1)));
                    }
                    a.probs.iter().try_for_each(|&p| check_probability(p, "jump probability"))?;
                    let s: f64 = a.probs.iter().sum();
                    if (s - 1.0).abs() > WEIGHT_TOL {
                        return Err(Error::InvalidLaw(format!("jump vector sums to {s}, not 1")));
                    }
                }
                Ok(())
            }
            EnvironmentLaw::BondWeights { atoms } | EnvironmentLaw::Rates { atoms } => {
                check_weights(atoms.iter().map(|a| a.weight))?;
                for a in atoms {
                    if !(a.value > 0.0) || !a.value.is_finite() {
                        return Err(Error::InvalidLaw(format!("conductance {} must be positive", a.value)));
                    }
                }
                Ok(())
            }
            EnvironmentLaw::RatesPowerLaw { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::InvalidLaw(format!("power-law exponent {alpha} not in (0, 1)")));
                }
                Ok(())
            }
        }
    }

    /// Atoms `(p, weight)` of a nearest-neighbour site law, zero-weight atoms dropped.
    pub fn site_atoms(&self) -> Option<Vec<Atom>> {
        let atoms = match self {
            EnvironmentLaw::TwoPointSites { alpha, beta } => {
                vec![Atom::new(*beta, *alpha), Atom::new(1.0 - beta, 1.0 - alpha)]
            }
            EnvironmentLaw::Diode { alpha, rho } => {
                vec![Atom::new(1.0 / (1.0 + rho), *alpha), Atom::new(1.0, 1.0 - alpha)]
            }
            EnvironmentLaw::DiscreteSites { atoms } => atoms.clone(),
            _ => return None,
        };
        Some(atoms.into_iter().filter(|a| a.weight > 0.0).collect())
    }

    /// Atoms `(rho, weight)` with `rho = (1 - p) / p`; a `p = 1` atom maps to 0.
    pub fn rho_atoms(&self) -> Result<Vec<Atom>> {
        let atoms = self.site_atoms().ok_or(Error::WrongModel { expected: Model::Sites.name(), found: self.model().name() })?;
        atoms
            .into_iter()
            .map(|a| {
                if a.value <= 0.0 {
                    Err(Error::InvalidLaw("site law has an atom at p = 0 (rho infinite)".into()))
                } else {
                    Ok(Atom::new(odds(a.value), a.weight))
                }
            })
            .collect()
    }

    /// Atoms of the bond or rate law, if discrete.
    pub fn conductance_atoms(&self) -> Option<&[Atom]> {
        match self {
            EnvironmentLaw::BondWeights { atoms } | EnvironmentLaw::Rates { atoms } => Some(atoms),
            _ => None,
        }
    }

    /// The atom table indexed by [`Environment::atom_index`], for discrete laws.
    fn atom_weights(&self) -> Vec<f64> {
        match self {
            EnvironmentLaw::TwoPointSites { alpha, .. } | EnvironmentLaw::Diode { alpha, .. } => {
                vec![*alpha, 1.0 - alpha]
            }
            EnvironmentLaw::DiscreteSites { atoms } | EnvironmentLaw::BondWeights { atoms } | EnvironmentLaw::Rates { atoms } => {
                atoms.iter().map(|a| a.weight).collect()
            }
            EnvironmentLaw::BoundedJump { atoms, .. } => atoms.iter().map(|a| a.weight).collect(),
            EnvironmentLaw::RatesPowerLaw { .. } => Vec::new(),
        }
    }

    fn atom_values(&self) -> Vec<f64> {
        match self {
            EnvironmentLaw::BoundedJump { .. } | EnvironmentLaw::RatesPowerLaw { .. } => Vec::new(),
            EnvironmentLaw::TwoPointSites { beta, .. } => vec![*beta, 1.0 - beta],
            EnvironmentLaw::Diode { rho, .. } => vec![1.0 / (1.0 + rho), 1.0],
            EnvironmentLaw::DiscreteSites { atoms } | EnvironmentLaw::BondWeights { atoms } | EnvironmentLaw::Rates { atoms } => {
                atoms.iter().map(|a| a.value).collect()
            }
        }
    }
}

/// `q / p` for a right-step probability `p > 0`.
#[inline]
pub fn odds(p: f64) -> f64 {
    if p >= 1.0 {
        0.0
    } else {
        (1.0 - p) / p
    }
}

#[derive(Debug, Clone, PartialEq)]
enum SiteData {
    Scalar(Vec<f64>),
    Atom(Vec<u32>),
}

/// One realized environment: a window of site data for a fixed law and seed.
///
/// Site `x` of a bond or rate environment holds `c_{x,x+1}`.
#[derive(Debug, Clone)]
pub struct Environment {
    law: EnvironmentLaw,
    seed: u64,
    key: u64,
    weights: Vec<f64>,
    values: Vec<f64>,
    lo: i64,
    data: SiteData,
    site_limit: usize,
}

impl Environment {
    /// Realizes `range` (rounded out to whole chunks) for `(law, seed)`.
    pub fn realize(law: &EnvironmentLaw, seed: u64, range: RangeInclusive<i64>) -> Result<Self> {
        law.check()?;
        let (lo, hi) = (*range.start(), *range.end());
        if lo > hi {
            return Err(Error::EmptyRange { lo, hi });
        }
        let data = match law {
            EnvironmentLaw::BoundedJump { .. } => SiteData::Atom(Vec::new()),
            _ => SiteData::Scalar(Vec::new()),
        };
        let mut env = Environment {
            law: law.clone(),
            seed,
            key: rng::derive_key(seed, domain::ENVIRONMENT, &[]),
            weights: law.atom_weights(),
            values: law.atom_values(),
            lo: chunk_floor(lo),
            data,
            site_limit: DEFAULT_SITE_LIMIT,
        };
        env.ensure(lo, hi)?;
        Ok(env)
    }

    pub fn with_site_limit(mut self, limit: usize) -> Self {
        self.site_limit = limit;
        self
    }

    pub fn law(&self) -> &EnvironmentLaw {
        &self.law
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model(&self) -> Model {
        self.law.model()
    }

    /// Realized window as an inclusive range.
    pub fn window(&self) -> RangeInclusive<i64> {
        self.lo..=self.lo + self.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        match &self.data {
            SiteData::Scalar(v) => v.len(),
            SiteData::Atom(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First realized site.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.lo && x < self.lo + self.len() as i64
    }

    /// Extends the window to cover `lo..=hi`. Existing sites are untouched.
    pub fn ensure(&mut self, lo: i64, hi: i64) -> Result<()> {
        let cur_lo = self.lo;
        let cur_hi = self.lo + self.len() as i64; // exclusive
        let new_lo = if self.is_empty() { chunk_floor(lo) } else { cur_lo.min(chunk_floor(lo)) };
        let new_hi = if self.is_empty() { chunk_ceil(hi + 1) } else { cur_hi.max(chunk_ceil(hi + 1)) };
        if !self.is_empty() && new_lo == cur_lo && new_hi == cur_hi {
            return Ok(());
        }
        let total = (new_hi - new_lo) as usize;
        if total > self.site_limit {
            return Err(Error::SiteBudget { limit: self.site_limit });
        }
        let (front, back) = if self.is_empty() { (new_lo..new_hi, 0..0) } else { (new_lo..cur_lo, cur_hi..new_hi) };
        match &mut self.data {
            SiteData::Scalar(v) => {
                let mut out = Vec::with_capacity(total);
                out.extend(front.map(|x| scalar_datum(&self.law, &self.weights, &self.values, self.key, x)));
                out.extend_from_slice(v);
                out.extend(back.map(|x| scalar_datum(&self.law, &self.weights, &self.values, self.key, x)));
                *v = out;
            }
            SiteData::Atom(v) => {
                let mut out = Vec::with_capacity(total);
                out.extend(front.map(|x| atom_datum(&self.weights, self.key, x)));
                out.extend_from_slice(v);
                out.extend(back.map(|x| atom_datum(&self.weights, self.key, x)));
                *v = out;
            }
        }
        self.lo = new_lo;
        Ok(())
    }

    /// Scalar datum at a realized site: `p_x` for site laws, `c_{x,x+1}` for bonds and rates.
    #[inline]
    pub fn value(&self, x: i64) -> Option<f64> {
        match &self.data {
            SiteData::Scalar(v) => v.get(usize::try_from(x - self.lo).ok()?).copied(),
            SiteData::Atom(_) => None,
        }
    }

    /// Scalar datum, extending the window when needed.
    pub fn value_at(&mut self, x: i64) -> Result<f64> {
        if !self.contains(x) {
            self.ensure(x, x)?;
        }
        self.value(x).ok_or(Error::WrongModel { expected: "scalar-valued", found: self.model().name() })
    }

    /// Index of the jump atom at a realized site of a bounded-jump environment.
    #[inline]
    pub fn atom_index(&self, x: i64) -> Option<usize> {
        match &self.data {
            SiteData::Atom(v) => v.get(usize::try_from(x - self.lo).ok()?).map(|&i| i as usize),
            SiteData::Scalar(_) => None,
        }
    }

    /// Jump vector over `-L..=R` at site `x`, extending the window when needed.
    pub fn jump_vector(&mut self, x: i64) -> Result<&[f64]> {
        if !self.contains(x) {
            self.ensure(x, x)?;
        }
        let idx = self.atom_index(x).ok_or(Error::WrongModel { expected: Model::BoundedJump.name(), found: self.model().name() })?;
        match &self.law {
            EnvironmentLaw::BoundedJump { atoms, .. } => Ok(&atoms[idx].probs),
            _ => unreachable!(),
        }
    }

    /// Contiguous scalar data for the realized window (starting at [`Environment::lo`]).
    pub fn scalars(&self) -> &[f64] {
        match &self.data {
            SiteData::Scalar(v) => v,
            SiteData::Atom(_) => &[],
        }
    }

    /// Contiguous atom indices for the realized window of a bounded-jump environment.
    pub fn atom_indices(&self) -> &[u32] {
        match &self.data {
            SiteData::Atom(v) => v,
            SiteData::Scalar(_) => &[],
        }
    }

    fn require(&self, model: Model) -> Result<()> {
        if self.model() == model {
            Ok(())
        } else {
            Err(Error::WrongModel { expected: model.name(), found: self.model().name() })
        }
    }

    /// `p_x` of a nearest-neighbour site environment.
    pub fn p(&mut self, x: i64) -> Result<f64> {
        self.require(Model::Sites)?;
        self.value_at(x)
    }

    /// Bond or rate `c_{x,x+1}`.
    pub fn bond(&mut self, x: i64) -> Result<f64> {
        if self.model() != Model::Bonds && self.model() != Model::Rates {
            return Err(Error::WrongModel { expected: "bond or rate", found: self.model().name() });
        }
        self.value_at(x)
    }
}

/// `rho_x = q_x / p_x` at site `x`; zero at a diode.
pub fn site_rho(env: &mut Environment, x: i64) -> Result<f64> {
    let p = env.p(x)?;
    if p <= 0.0 {
        return Err(Error::NonPositiveP { site: x, p });
    }
    Ok(odds(p))
}

fn chunk_floor(x: i64) -> i64 {
    x.div_euclid(CHUNK) * CHUNK
}

fn chunk_ceil(x: i64) -> i64 {
    -chunk_floor(-x)
}

#[inline]
fn site_bits(key: u64, x: i64) -> u64 {
    rng::draw(key, x as u64)
}

fn atom_datum(weights: &[f64], key: u64, x: i64) -> u32 {
    pick(weights.iter().copied(), rng::to_unit(site_bits(key, x))) as u32
}

/// Atom index at any site of the environment `(law, seed)` without realizing a window.
///
/// Agrees with [`Environment::atom_index`] for bounded-jump laws and with the
/// atom order of [`EnvironmentLaw::site_atoms`] for two-point and diode laws.
#[derive(Debug, Clone)]
pub struct AtomSampler {
    key: u64,
    weights: Vec<f64>,
}

impl AtomSampler {
    pub fn new(law: &EnvironmentLaw, seed: u64) -> Self {
        AtomSampler { key: rng::derive_key(seed, domain::ENVIRONMENT, &[]), weights: law.atom_weights() }
    }

    #[inline]
    pub fn index(&self, x: i64) -> usize {
        atom_datum(&self.weights, self.key, x) as usize
    }
}

fn scalar_datum(law: &EnvironmentLaw, weights: &[f64], values: &[f64], key: u64, x: i64) -> f64 {
    let bits = site_bits(key, x);
    match law {
        EnvironmentLaw::RatesPowerLaw { alpha } => rng::to_unit_open0(bits).powf(1.0 / (1.0 - alpha)),
        _ => values[pick(weights.iter().copied(), rng::to_unit(bits))],
    }
}

/// Ellipticity status of a law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Ellipticity {
    /// All transition probabilities are bounded below by this margin.
    Margin(f64),
    /// Diode sites break ellipticity; the margin over two-way sites is reported.
    DiodeViolation { two_way_margin: f64 },
    /// Some transition probability can be arbitrarily close to (or equal) 0.
    Violated,
}

/// Support structure of `ln rho`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LogOddsSupport {
    /// Finite support contained in `{0, ±span, ±2 span, ...}`.
    Arithmetic {
        span: f64,
    },
    /// Degenerate at 0 (`rho = 1` almost surely).
    DegenerateZero,
    NonArithmetic,
}

/// Report produced by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawReport {
    pub model: &'static str,
    pub ellipticity: Ellipticity,
    /// `E ln rho` is finite (site laws only).
    pub eta_finite: Option<bool>,
    /// Lattice structure of the finite part of `ln rho` (site laws only).
    pub log_odds_support: Option<LogOddsSupport>,
    /// `ln rho` has an atom at minus infinity.
    pub atom_at_minus_infinity: bool,
}

/// Relative tolerance for deciding that log-odds values share a lattice.
const LATTICE_TOL: f64 = 1e-9;

/// Largest `c` such that every value is an integer multiple of `c`, if it is
/// not negligibly small compared to the values.
fn lattice_span(values: &[f64]) -> Option<f64> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let eps = LATTICE_TOL * scale;
    let mut g = 0.0f64;
    for &v in values {
        let mut a = v.abs();
        let mut b = g;
        if a < eps {
            continue;
        }
        // Euclid with tolerance
        for _ in 0..200 {
            if b < eps {
                break;
            }
            let r = a % b;
            let r = if b - r < eps { 0.0 } else { r };
            a = b;
            b = r;
        }
        g = a;
    }
    if g < 1e-6 * scale {
        return None;
    }
    let all_multiples = values.iter().all(|v| {
        let k = (v / g).round();
        (v - k * g).abs() <= 10.0 * eps
    });
    all_multiples.then_some(g)
}

/// Inspects a law: ellipticity margin, finiteness of `E ln rho`, arithmetic
/// support of `ln rho`. Never fails; malformed laws report what can be read.
pub fn validate(law: &EnvironmentLaw) -> LawReport {
    let model = law.model();
    let min_pos = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    let ellipticity = match law {
        EnvironmentLaw::Diode { alpha, rho } => {
            let p = 1.0 / (1.0 + rho);
            if *alpha >= 1.0 {
                Ellipticity::Margin(p.min(1.0 - p))
            } else {
                Ellipticity::DiodeViolation { two_way_margin: p.min(1.0 - p) }
            }
        }
        EnvironmentLaw::TwoPointSites { .. } | EnvironmentLaw::DiscreteSites { .. } => {
            let atoms = law.site_atoms().unwrap_or_default();
            let d = min_pos(&mut atoms.iter().map(|a| a.value.min(1.0 - a.value)));
            if d > 0.0 {
                Ellipticity::Margin(d)
            } else {
                Ellipticity::Violated
            }
        }
        EnvironmentLaw::BoundedJump { left, atoms, .. } => {
            let d = min_pos(
                &mut atoms
                    .iter()
                    .filter(|a| a.weight > 0.0)
                    .flat_map(|a| a.probs.iter().enumerate().filter(|(i, _)| i != left).map(|(_, &p)| p)),
            );
            if d > 0.0 {
                Ellipticity::Margin(d)
            } else {
                Ellipticity::Violated
            }
        }
        EnvironmentLaw::BondWeights { atoms } | EnvironmentLaw::Rates { atoms } => {
            let live = || atoms.iter().filter(|a| a.weight > 0.0).map(|a| a.value);
            let cmin = live().fold(f64::INFINITY, f64::min);
            let cmax = live().fold(0.0, f64::max);
            if cmin > 0.0 && cmax.is_finite() {
                Ellipticity::Margin(cmin / (cmin + cmax))
            } else {
                Ellipticity::Violated
            }
        }
        EnvironmentLaw::RatesPowerLaw { .. } => Ellipticity::Violated,
    };

    let (eta_finite, log_odds_support, atom_at_minus_infinity) = match law.site_atoms() {
        Some(atoms) => {
            let has_zero_p = atoms.iter().any(|a| a.value <= 0.0);
            let has_diode = atoms.iter().any(|a| a.value >= 1.0);
            let finite: Vec<f64> = atoms.iter().filter(|a| a.value > 0.0 && a.value < 1.0).map(|a| odds(a.value).ln()).collect();
            let support = if finite.iter().all(|v| *v == 0.0) && !finite.is_empty() {
                LogOddsSupport::DegenerateZero
            } else {
                match lattice_span(&finite) {
                    Some(span) => LogOddsSupport::Arithmetic { span },
                    None if finite.len() <= 1 => LogOddsSupport::Arithmetic { span: f64::NAN },
                    None => LogOddsSupport::NonArithmetic,
                }
            };
            (Some(!has_zero_p && !has_diode), Some(support), has_diode)
        }
        None => (None, None, false),
    };

    LawReport { model: model.name(), ellipticity, eta_finite, log_odds_support, atom_at_minus_infinity }
}
