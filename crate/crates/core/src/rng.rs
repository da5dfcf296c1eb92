//! Counter-based random stream, version 1.
//!
//! Output `k` (0-based) of the stream with seed `s` is
//! `mix(s + (k + 1) * 0x9E3779B97F4A7C15)` (wrapping), where `mix` is the
//! SplitMix64 finalizer:
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! Derived quantities, also part of version 1:
//! - `uniform_f64`: `(u >> 11) * 2^-53`, in `[0, 1)`.
//! - `below(n)`: Lemire multiply-shift, `(u * n) >> 64` with rejection of
//!   the low product word when it falls under `(2^64 - n) mod n`.
//!
//! Any reimplementation following these three rules reproduces the index
//! streams emitted by [`crate::ordering::Ordering`] exactly.

use rand_core::{impls, RngCore};

pub const STREAM_VERSION: u32 = 1;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed, counter: 0 }
    }

    /// Independent stream derived from `seed` and a purpose tag.
    pub fn derived(seed: u64, tag: u64) -> Self {
        CounterRng::new(mix(seed ^ mix(tag.wrapping_add(GOLDEN))))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn position(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    #[inline]
    pub fn uniform_f64(&mut self) -> f64 {
        (self.next() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. Panics when `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let mut m = (self.next() as u128) * (n as u128);
        let mut lo = m as u64;
        if lo < n {
            let threshold = n.wrapping_neg() % n;
            while lo < threshold {
                m = (self.next() as u128) * (n as u128);
                lo = m as u64;
            }
        }
        (m >> 64) as u64
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}
