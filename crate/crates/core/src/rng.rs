//! Seeded randomness. One generator, used everywhere, so replaying a seed
//! chain replays the run.
//!
//! The generator is the standard SplitMix64 finalizer. Child streams are
//! derived by hashing `(parent seed, label, index)`, which makes every
//! consumer's stream independent of evaluation order and worker scheduling.

use alloc::string::String;

use crate::math::fnv1a64;

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform index in [0, n); n must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Child generator for an independent, labeled stream.
    pub fn derive(&self, label: &str, index: u64) -> SplitMix64 {
        SplitMix64::new(derive_seed(self.state, label, index))
    }
}

/// Stable seed-chaining rule: FNV-1a over the parent seed, a stream label,
/// and an index, all little-endian.
pub fn derive_seed(parent: u64, label: &str, index: u64) -> u64 {
    let mut bytes = [0u8; 16];
    bytes[..8].copy_from_slice(&parent.to_le_bytes());
    bytes[8..].copy_from_slice(&index.to_le_bytes());
    let mut h = fnv1a64(&bytes);
    h ^= fnv1a64(label.as_bytes());
    // One finalizer round so nearby indices do not produce nearby seeds.
    let mut z = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Canonical 16-hex-digit rendering of a seed, used in episode directory
/// names and manifests.
pub fn seed_hex(seed: u64) -> String {
    alloc::format!("{seed:016x}")
}
