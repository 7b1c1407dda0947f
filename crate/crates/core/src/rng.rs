//! Seeded random streams.
//!
//! Every random decision in the pipeline draws from a ChaCha8 stream keyed by
//! `(seed, domain, index)`. The domain string separates stages that share a
//! seed, and the index gives each instance or request its own stream so
//! results never depend on traversal order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Single logical stream for `seed` within `domain`.
pub fn domain_rng(seed: u64, domain: &str) -> SeededRng {
    ChaCha8Rng::seed_from_u64(mix(seed, domain))
}

/// Independent stream number `index` for `seed` within `domain`.
pub fn stream_rng(seed: u64, domain: &str, index: u64) -> SeededRng {
    let mut rng = domain_rng(seed, domain);
    rng.set_stream(index);
    rng
}

fn mix(seed: u64, domain: &str) -> u64 {
    // FNV-1a over the domain, folded into the seed through splitmix64.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in domain.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
