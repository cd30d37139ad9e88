//! Deterministic, platform-stable hashing for sampling and provenance.
//!
//! Not cryptographic. FNV-1a gives a cheap stable digest of bytes and
//! a SplitMix64 finalizer repairs its weak bit diffusion, which matters
//! when the low bits drive a keep/drop decision.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over `bytes`, mixed with `seed` through SplitMix64.
#[must_use]
pub fn stable_hash64(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(seed ^ h)
}

/// Maps a hash to `[0, 1)` using the top 53 bits.
#[must_use]
pub fn unit_interval(hash: u64) -> f64 {
    (hash >> 11) as f64 / (1u64 << 53) as f64
}

/// Running FNV-1a digest for hashing structured content (vocabularies,
/// configs) without materializing one big buffer.
#[derive(Debug, Clone)]
pub struct Fnv1a(u64);

impl Fnv1a {
    #[must_use]
    pub fn new() -> Self {
        Fnv1a(FNV_OFFSET)
    }

    pub fn update(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
    }

    /// Finalized digest as a fixed-width hex string.
    #[must_use]
    pub fn hex(&self) -> String {
        format!("{:016x}", splitmix64(self.0))
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_across_calls() {
        let a = stable_hash64(7, b"tweet-123");
        let b = stable_hash64(7, b"tweet-123");
        assert_eq!(a, b);
        assert_ne!(a, stable_hash64(8, b"tweet-123"));
        assert_ne!(a, stable_hash64(7, b"tweet-124"));
    }

    #[test]
    fn unit_interval_in_range() {
        for i in 0..1000u64 {
            let u = unit_interval(stable_hash64(42, &i.to_le_bytes()));
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn unit_interval_roughly_uniform() {
        let n = 100_000u64;
        let mean: f64 = (0..n)
            .map(|i| unit_interval(stable_hash64(1, format!("id{i}").as_bytes())))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }
}
