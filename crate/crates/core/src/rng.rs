//! splitmix64-seeded xoshiro256**.
//!
//! This is the only source of randomness in the crate. The algorithms follow
//! the public-domain reference implementations by Blackman and Vigna exactly,
//! so a stream is a pure function of its seed regardless of host or
//! architecture.

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One splitmix64 step. Returns `(value, next_state)`.
#[inline]
pub fn splitmix64_next(state: u64) -> (u64, u64) {
    let next = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = next;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31), next)
}

/// xoshiro256** generator state.
///
/// Passed by `&mut` through every operator; cloning forks an identical stream.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngState {
    s: [u64; 4],
}

impl RngState {
    /// Expands `seed` into four state words with splitmix64.
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for word in &mut s {
            let (value, next) = splitmix64_next(sm);
            *word = value;
            sm = next;
        }
        if s == [0; 4] {
            s[0] = 1;
        }
        RngState { s }
    }

    /// Builds a generator from raw state words. An all-zero state is replaced
    /// by `[1, 0, 0, 0]` since xoshiro never leaves the zero state.
    pub fn from_words(mut s: [u64; 4]) -> Self {
        if s == [0; 4] {
            s[0] = 1;
        }
        RngState { s }
    }

    pub fn words(&self) -> [u64; 4] {
        self.s
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Value in `[0, n)` by modulo reduction of one draw (slightly biased
    /// when `n` does not divide 2^64).
    ///
    /// # Panics
    ///
    /// Panics if `n == 0`.
    #[inline]
    pub fn rand_below(&mut self, n: u64) -> u64 {
        assert!(n >= 1, "rand_below requires n >= 1");
        self.next_u64() % n
    }

    /// Uniform real in `[0, 1)` from the top 53 bits of one draw.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Advances the stream by `n` draws.
    pub fn skip(&mut self, n: usize) {
        for _ in 0..n {
            self.next_u64();
        }
    }
}
