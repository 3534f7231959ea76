//! Counter-based random numbers.
//!
//! Every draw is a pure function of a 64-bit key and a 64-bit counter, so
//! any stream position can be reproduced without replaying the stream. Keys
//! for environments, walks and bootstrap replicates are derived by hashing
//! a base seed together with a domain tag and integer indices.

/// Weyl increment (golden ratio) used to spread counters over the input space.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Domain tags keep keys for different purposes disjoint.
pub mod domain {
    pub const ENVIRONMENT: u64 = 0x656e_7669_726f_6e6d;
    pub const WALK: u64 = 0x7761_6c6b_6572_5f5f;
    pub const BOOTSTRAP: u64 = 0x626f_6f74_7374_7270;
    pub const FRAME: u64 = 0x6672_616d_655f_5f5f;
    pub const PAIRS: u64 = 0x7061_6972_735f_5f5f;
}

/// Stafford variant 13 finalizer (the SplitMix64 output function).
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a base seed, a domain tag and a list of indices into a key.
pub fn derive_key(seed: u64, domain: u64, indices: &[u64]) -> u64 {
    let mut h = mix64(seed ^ mix64(domain));
    for &i in indices {
        h = mix64(h.wrapping_add(GOLDEN) ^ mix64(i.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

/// Single draw at `(key, counter)`.
#[inline(always)]
pub fn draw(key: u64, counter: u64) -> u64 {
    mix64(counter.wrapping_mul(GOLDEN) ^ key)
}

/// Maps 64 random bits to a uniform in `[0, 1)` with 53-bit resolution.
#[inline(always)]
pub fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * TWO_POW_M53
}

/// Maps 64 random bits to a uniform in `(0, 1]`, safe for `ln`.
#[inline(always)]
pub fn to_unit_open0(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * TWO_POW_M53
}

/// Sequential view over the counter space of one key.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    pub fn at(key: u64, counter: u64) -> Self {
        CounterRng { key, counter }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline(always)]
    pub fn next_u64(&mut self) -> u64 {
        let out = draw(self.key, self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    #[inline(always)]
    pub fn next_f64(&mut self) -> f64 {
        to_unit(self.next_u64())
    }

    /// Uniform in `(0, 1]`.
    #[inline(always)]
    pub fn next_open0(&mut self) -> f64 {
        to_unit_open0(self.next_u64())
    }

    /// Exponential variate with the given rate by inversion.
    #[inline(always)]
    pub fn next_exp(&mut self, rate: f64) -> f64 {
        -self.next_open0().ln() / rate
    }

    /// Uniform index in `0..n` (multiply-shift, bias below 2^-32 for n < 2^32).
    #[inline(always)]
    pub fn next_index(&mut self, n: usize) -> usize {
        (((self.next_u64() >> 32) * n as u64) >> 32) as usize
    }

    /// Standard normal by Box-Muller (one of the pair is discarded).
    pub fn next_normal(&mut self) -> f64 {
        let u = self.next_open0();
        let v = self.next_f64();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}

/// Source of 32-bit uniforms taken two per 64-bit draw, low half first.
///
/// Walk engines compare these against per-site thresholds `floor(p * 2^32)`.
#[derive(Debug, Clone)]
pub struct HalfWordStream {
    rng: CounterRng,
    buffer: u64,
    pending: bool,
}

impl HalfWordStream {
    pub fn new(key: u64) -> Self {
        HalfWordStream { rng: CounterRng::new(key), buffer: 0, pending: false }
    }

    #[inline(always)]
    pub fn next_u32(&mut self) -> u64 {
        if self.pending {
            self.pending = false;
            self.buffer >> 32
        } else {
            self.buffer = self.rng.next_u64();
            self.pending = true;
            self.buffer & 0xFFFF_FFFF
        }
    }

    /// Full-resolution uniform in `(0, 1]`; discards any buffered half word.
    pub fn next_open0(&mut self) -> f64 {
        self.pending = false;
        self.rng.next_open0()
    }

    pub fn next_f64(&mut self) -> f64 {
        self.pending = false;
        self.rng.next_f64()
    }
}

/// Threshold for a Bernoulli(p) test against a 32-bit uniform.
#[inline]
pub fn threshold(p: f64) -> u64 {
    if p >= 1.0 {
        1u64 << 32
    } else if p <= 0.0 {
        0
    } else {
        (p * 4_294_967_296.0) as u64
    }
}
