//! Splittable seed derivation.
//!
//! Every random draw in the simulator comes from a substream addressed by a
//! tag path under a single master seed, e.g. `(NOISE, scheme, snr, frame,
//! block, path, repeat)`. Substreams are statistically independent ChaCha
//! streams, so blocks and experiment cells can be computed in any order (or
//! concurrently) with identical results.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags for the first component of a derivation path.
pub mod tag {
    pub const MESSAGE: u64 = 0x01;
    pub const TRAIN_NOISE: u64 = 0x02;
    pub const EVAL_NOISE: u64 = 0x03;
    pub const DEFENSE: u64 = 0x04;
    pub const INIT: u64 = 0x05;
    pub const SHUFFLE: u64 = 0x06;
    pub const RNI: u64 = 0x07;
    pub const SPSA: u64 = 0x08;

    /// Channel paths of the two-receiver model.
    pub const PATH_RECEIVER: u64 = 0x10;
    pub const PATH_INTRUDER: u64 = 0x11;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a substream seed from a master seed and a tag path.
pub fn derive(master: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &t in tags {
        s = splitmix64(s ^ splitmix64(t));
    }
    s
}

/// Stable tag for an SNR value (milli-dB resolution).
pub fn snr_tag(snr_db: f64) -> u64 {
    ((snr_db * 1000.0).round() as i64) as u64
}

/// The RNG used throughout: seeded ChaCha, identical on every platform.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One standard-normal pair via Box-Muller.
pub fn normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    let mut u: f64 = rng.gen();
    if u < f64::MIN_POSITIVE {
        u = f64::MIN_POSITIVE;
    }
    let v: f64 = rng.gen();
    let r = (-2.0 * u.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * v;
    (r * th.cos(), r * th.sin())
}
