//! Pinned pseudo-random source for reproducible instances and runs.
//!
//! Every random choice in the crate flows through [`SplitMix64`], a 64-bit
//! counter-based generator with a fixed output function, so that a seed pins
//! the full byte stream of instances, permutations and index draws across
//! builds. The mapping into floats is fixed too:
//!
//! * `next_f64`: top 53 bits, centered — `((x >> 11) + 0.5) * 2^-53`,
//!   strictly inside `(0, 1)`;
//! * `next_normal`: Box-Muller on two such uniforms, returning the cosine
//!   branch first;
//! * `next_index(n)`: Lemire multiply-shift reduction of one 64-bit draw;
//! * `shuffle`: Fisher-Yates from the top index down, one draw per swap.
//!
//! The u64 stream is bit-exact everywhere; the normal stream additionally
//! depends on libm's `ln`/`cos`/`sin`, identical on a given toolchain. Golden
//! vectors for seed 0 live in `tests/golden/` and are checked in unit tests.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64: state advances by a fixed odd constant; outputs are a mix of
/// the state. See Steele, Lea & Flood, "Fast splittable pseudorandom number
/// generators" (OOPSLA 2014).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    /// One pending Box-Muller sine draw.
    cached_normal: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 {
            state: seed,
            cached_normal: None,
        }
    }

    /// Derives an independent stream from `(seed, tag)`. Defined as
    /// `mix64(seed) ^ mix64(tag ^ 0x517C_C1B7_2722_0A95)` so distinct tags
    /// give uncorrelated state starts while staying platform-independent.
    pub fn derive(seed: u64, tag: u64) -> Self {
        SplitMix64 {
            state: mix64(seed) ^ mix64(tag ^ 0x517C_C1B7_2722_0A95),
            cached_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform draw strictly inside `(0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller; consumes two uniforms every other call.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Uniform index in `0..n` by Lemire's multiply-shift reduction.
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (((self.next_u64() as u128) * (n as u128)) >> 64) as usize
    }

    /// In-place Fisher-Yates shuffle, high index down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_index(i + 1);
            items.swap(i, j);
        }
    }
}
