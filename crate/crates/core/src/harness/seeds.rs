//! Per-trial seed derivation. Every trial is replayable from its own seed.

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Chain of SplitMix64 mixes over `parts`.
pub fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0, |h, p| splitmix64(h ^ splitmix64(*p)))
}

/// Seed of trial `trial` for policy `label` at grid point `c_index`.
pub fn trial_seed(base_seed: u64, label: &str, c_index: usize, trial: usize) -> u64 {
    mix(&[base_seed, fnv1a(label.as_bytes()), c_index as u64, trial as u64])
}
