//! Deterministic sub-seed derivation.
//!
//! Every randomized component derives per-unit seeds (per trial, per block,
//! per sample) from a master seed through [`mix`], so output is a pure
//! function of the master seed regardless of worker count or scheduling.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a sequence of stream labels into a sub-seed.
///
/// The mixing is a fixed SplitMix64 chain: `s_0 = sm(master)`,
/// `s_{i+1} = sm(s_i xor sm(label_i))`. Labels identify the consumer
/// (trial index, block index, sample index, ...).
pub fn mix(master: u64, labels: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &l in labels {
        s = splitmix64(s ^ splitmix64(l));
    }
    s
}
