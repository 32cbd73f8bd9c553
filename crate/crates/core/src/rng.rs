//! Seeded random streams.
//!
//! Every stochastic operation in the crate draws from SplitMix64. Work items
//! (detectors, epochs, corpus items) get their own substream derived from
//! `(seed, index)`, so results do not depend on iteration order or thread
//! count. The derivation and the float conversion below are frozen: changing
//! either changes every golden output.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// A SplitMix64 stream with the crate's float conventions.
#[derive(Debug, Clone)]
pub struct Stream {
    inner: SplitMix64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    /// Independent substream keyed by `index`.
    pub fn substream(seed: u64, index: u64) -> Self {
        Self::new(seed ^ hash64(index))
    }

    /// Substream of a substream, e.g. (epoch, route).
    pub fn substream2(seed: u64, outer: u64, inner: u64) -> Self {
        Self::substream(seed ^ hash64(outer).rotate_left(17), inner)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// One SplitMix64 output for state `x`; used only to decorrelate keys.
fn hash64(x: u64) -> u64 {
    SplitMix64::seed_from_u64(x).next_u64()
}
