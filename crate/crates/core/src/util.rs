//! Small shared helpers.

/// Derives an independent seed from a base seed and a stream tag.
///
/// Every randomized component (solver permutations, split protocols, the
/// synthetic generator) takes its seed from one user-facing seed through this
/// function, so distinct components never share an RNG stream and a single
/// seed reproduces an entire run.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined word.
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
