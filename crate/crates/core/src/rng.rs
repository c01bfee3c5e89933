//! Counter-based deterministic random number generation.
//!
//! Every random draw in the toolkit comes from [`CounterRng`], a 64-bit
//! counter-based generator: output `i` of a stream is `mix64(key + i * GAMMA)`
//! where `mix64` is the SplitMix64 finalizer and `key` is derived from a
//! `(seed, stream tag)` pair. Streams with different tags are statistically
//! independent, so adding a new consumer of randomness never perturbs the
//! outputs of existing ones.

use rand::RngCore;

/// Weyl-sequence increment (golden-ratio constant).
pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. Bijective on u64, so distinct counters never collide.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a stream tag.
#[inline]
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag))
}

/// Stream tags. One per independent consumer of randomness.
pub mod stream {
    pub const MASK_RANDOM_BINARY: u64 = 0x01;
    pub const MASK_GAUSSIAN: u64 = 0x02;
    pub const MASK_LORENTZIAN: u64 = 0x03;
    pub const MASK_FRACTAL: u64 = 0x04;
    pub const SIM_POSITION_JITTER: u64 = 0x10;
    pub const SIM_EXPOSURE_JITTER: u64 = 0x11;
    pub const SIM_POISSON: u64 = 0x12;
    pub const SIM_PIXEL_DEFECTS: u64 = 0x13;
    pub const SIM_FLUX_DRIFT: u64 = 0x14;
    pub const OFFSET_SAMPLING: u64 = 0x20;
}

/// Keyed counter-based generator.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    /// Generator for the stream identified by `(seed, tag)`.
    pub fn from_stream(seed: u64, tag: u64) -> Self {
        CounterRng { key: derive_seed(seed, tag), counter: 0 }
    }

    #[inline]
    pub fn next(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fair coin.
    #[inline]
    pub fn next_bool(&mut self) -> bool {
        self.next() >> 63 == 1
    }

    /// Uniform integer in [0, bound) by rejection, bias-free.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next();
            if v < zone {
                return v % bound;
            }
        }
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}
