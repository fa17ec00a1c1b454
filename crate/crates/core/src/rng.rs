//! Counter-based stream splitting.
//!
//! Every random quantity is drawn from `stream(seed, domain, index)`: a
//! ChaCha8 key derived from `(seed, domain)` and the ChaCha stream id set to
//! `index`. Sample `i` therefore sees the same numbers regardless of which
//! worker runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream domains used inside the crate. Callers may use any other value.
pub mod domain {
    pub const SAMPLE: u64 = 0x5a4d_504c;
    pub const STATIONARY: u64 = 0x5354_4154;
    pub const LANGEVIN: u64 = 0x4c41_4e47;
    pub const DYSON: u64 = 0x4459_534e;
    pub const CONDITIONAL: u64 = 0x434f_4e44;
    pub const MOMENTS: u64 = 0x4d4f_4d54;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key material for `(seed, domain)`.
pub fn key(seed: u64, domain: u64) -> [u8; 32] {
    let mut state = seed;
    let mixed = splitmix64(&mut state) ^ domain;
    let mut state = mixed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

pub fn stream(seed: u64, domain: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::from_seed(key(seed, domain));
    rng.set_stream(index);
    rng
}
