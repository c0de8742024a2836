//! Deterministic per-trial random substreams.
//!
//! Every trial gets its own stream keyed by `(seed, trial_index)`, so trials
//! can be evaluated in any order, or in parallel, and still draw exactly the
//! same variates. The mapping is frozen: a key is derived by hashing seed and
//! index through the SplitMix64 finalizer, and output j of a stream is
//! `mix64(key ^ (j+1)·GOLDEN)`. A counter-based scheme like this has no state
//! to carry between trials and never changes meaning across versions.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Vigna); full-avalanche 64-bit mix.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based generator for one trial's substream.
#[derive(Debug, Clone)]
pub struct TrialRng {
    key: u64,
    counter: u64,
}

impl TrialRng {
    /// Open the substream for `trial_index` under `seed`.
    pub fn new(seed: u64, trial_index: u64) -> Self {
        let key = mix64(mix64(seed ^ GOLDEN) ^ trial_index.wrapping_mul(0xD134_2543_DE82_EF95));
        TrialRng { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(GOLDEN);
        mix64(self.key ^ self.counter)
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Uniform index in `[0, len)` (Lemire multiply-shift; bias < 2^-60 here).
    #[inline]
    pub fn next_index(&mut self, len: usize) -> usize {
        debug_assert!(len > 0);
        ((self.next_u64() as u128 * len as u128) >> 64) as usize
    }
}
