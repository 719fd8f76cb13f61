//! Seed derivation. Every random stage draws from its own stream, keyed by
//! `(master seed, stage, index)`, so results do not depend on scheduling.

/// Stage keys.
pub mod stage {
    pub const SYNTH_ORDER: u64 = 1;
    pub const SYNTH_TRIAL: u64 = 2;
    pub const SYNTH_TEMPLATE: u64 = 3;
    pub const FOLDS: u64 = 10;
    pub const GMM: u64 = 20;
    pub const PERMUTE: u64 = 30;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `stage` at `index` under the master `seed`.
pub fn derive(seed: u64, stage: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stage.wrapping_mul(0xA24B_AED4_963E_E407)) ^ index)
}
