//! Deterministic derivation of per-unit RNG seeds.
//!
//! Parallel or repeated stochastic units (forest trees, search trials,
//! permutation repeats, synthetic hives) each get their own seed derived from
//! a master seed, a domain label, and an index. Results are therefore
//! independent of execution order and worker count.

/// splitmix64 finalizer: cheap, stable across platforms, good avalanche.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a hash of the domain label, so unrelated consumers of the same master
/// seed land on unrelated streams.
fn domain_hash(domain: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in domain.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a child seed from `(master, domain, index)`.
pub(crate) fn derive_seed(master: u64, domain: &str, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(domain_hash(domain) ^ splitmix64(index)))
}
