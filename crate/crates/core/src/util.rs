//! Small internal helpers: hashing and seeded RNG streams.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

/// FNV-1a over bytes. Used for trigram bucketing and per-sentence RNG
/// derivation; must stay stable across platforms and releases.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic RNG stream keyed by (seed, arbitrary bytes). Independent of
/// iteration order, so parallel maps over sentences stay reproducible.
pub(crate) fn stream_rng(seed: u64, key: &[u8]) -> ChaCha8Rng {
    let k = fnv1a64(key);
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    s[8..16].copy_from_slice(&k.to_le_bytes());
    s[16..24].copy_from_slice(&seed.rotate_left(17).wrapping_add(k).to_le_bytes());
    ChaCha8Rng::from_seed(s)
}

/// Uniform f64 in [0, 1) from the top 53 bits of the next u64.
pub(crate) fn next_f64(rng: &mut ChaCha8Rng) -> f64 {
    use rand_core::RngCore;
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in [0, n). Modulo bias is negligible for the small ranges
/// used here and keeps the draw count fixed.
pub(crate) fn next_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    use rand_core::RngCore;
    debug_assert!(n > 0);
    (rng.next_u64() % n as u64) as usize
}
