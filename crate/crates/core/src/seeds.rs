//! Deterministic seed derivation.
//!
//! Every stochastic step in the crate derives its RNG seed from a base
//! seed plus a stream tag through this mixer, so runs are replayable
//! from the manifests alone.

/// splitmix64 finalizer over the combined base and stream.
pub(crate) fn derive(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(stream)
        .wrapping_add(0x2545_f491_4f6c_dd1d);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
