//! Deterministic seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha stream whose seed is
//! derived here. Seeds are position-based (never sequential), so results do
//! not depend on execution order and stay stable across platforms.

use sha2::{Digest, Sha256};

/// Derives a child seed from `base` and a purpose label.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Seed for one sweep trial, keyed by parameter name and the positions of
/// the value and trial within the plan.
pub fn derive_trial_seed(master: u64, parameter: &str, value_idx: usize, trial_idx: usize) -> u64 {
    derive_seed(
        master,
        &format!("trial:{parameter}:{value_idx}:{trial_idx}"),
    )
}
