//! Named random sub-streams derived from one user seed.
//!
//! Each stage draws from its own stream (`"pair-sampling"`, `"kmeans"`,
//! `"local-search"`, ...) keyed additionally by the group it works on, so a
//! stage can be re-run on its own and still reproduce the full-pipeline result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PAIR_SAMPLING: &str = "pair-sampling";
pub const KMEANS: &str = "kmeans";
pub const LOCAL_SEARCH: &str = "local-search";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET ^ seed;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of `base`, scoped to `scope` (usually a group).
pub fn stream_seed(base: u64, stream: &str, scope: &str) -> u64 {
    let h = fnv1a(base, stream.as_bytes());
    let h = fnv1a(h, &[0xff]);
    splitmix64(fnv1a(h, scope.as_bytes()))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
