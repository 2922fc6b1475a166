//! Counter-based phase stream.
//!
//! Each phase is a pure function of `(seed, sample_index, tensor, flat)`:
//!
//! * ChaCha20 key: `seed` (u64 LE) ++ `sample_index` (u64 LE) ++ [`DOMAIN`].
//! * Stream id: `tensor`.
//! * The value for `flat` is the `u64` assembled from keystream words
//!   `2 flat` (low half) and `2 flat + 1` (high half).
//! * `u = (x >> 11) * 2^-53`, phase `= 2 pi u`, kept strictly below `2 pi`.

use std::f64::consts::TAU;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

pub const DOMAIN: [u8; 16] = *b"bsrm.phases.v1\0\0";

fn key(seed: u64, sample_index: u64) -> [u8; 32] {
    let mut k = [0u8; 32];
    k[..8].copy_from_slice(&seed.to_le_bytes());
    k[8..16].copy_from_slice(&sample_index.to_le_bytes());
    k[16..].copy_from_slice(&DOMAIN);
    k
}

fn stream(seed: u64, sample_index: u64, tensor: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::from_seed(key(seed, sample_index));
    rng.set_stream(tensor);
    rng
}

#[inline]
pub fn to_phase(x: u64) -> f64 {
    let u = (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let p = TAU * u;
    if p < TAU {
        p
    } else {
        f64::from_bits(TAU.to_bits() - 1)
    }
}

/// Raw 64-bit word for one element.
pub fn raw_at(seed: u64, sample_index: u64, tensor: u64, flat: u64) -> u64 {
    let mut rng = stream(seed, sample_index, tensor);
    rng.set_word_pos(2 * flat as u128);
    rng.next_u64()
}

pub fn phase_at(seed: u64, sample_index: u64, tensor: u64, flat: u64) -> f64 {
    to_phase(raw_at(seed, sample_index, tensor, flat))
}

/// Sequential fill of `out.len()` phases starting at element 0.
pub fn fill_phases(seed: u64, sample_index: u64, tensor: u64, out: &mut [f64]) {
    let mut rng = stream(seed, sample_index, tensor);
    for v in out.iter_mut() {
        *v = to_phase(rng.next_u64());
    }
}
