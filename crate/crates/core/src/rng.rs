//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by the
//! master seed, with the stream id chosen by the consumer. Stream ids depend
//! only on *what* is being sampled (a wavevector, a Monte-Carlo replica), so
//! adding work never perturbs the streams of existing work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derived seed for batch member `index`; used for per-worker seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Stream id for an integer wavevector and a real component (0 = cosine, 1 = sine).
pub fn mode_stream(mode: &[i64], component: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325_u64;
    for &m in mode {
        h = splitmix64(h ^ (m as u64));
    }
    splitmix64(h ^ component)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
