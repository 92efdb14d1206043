//! Deterministic derivation of independent per-trial seeds.

/// SplitMix64 finalizer applied to `base` mixed with `stream`.
pub fn derive(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Two-level derivation for (experiment cell, trial) pairs.
pub fn derive2(base: u64, a: u64, b: u64) -> u64 {
    derive(derive(base, a), b)
}
