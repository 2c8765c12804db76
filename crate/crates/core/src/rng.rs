//! Seeded random streams.
//!
//! Every stochastic component draws from ChaCha8 (`rand_chacha::ChaCha8Rng`):
//! the 64-bit seed is expanded into the 256-bit key with `seed_from_u64`, and
//! independent streams of the same seed are selected through ChaCha's 64-bit
//! stream counter. Results are reproducible for a fixed seed across platforms;
//! no attempt is made to match other implementations bit for bit.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for `seed`, positioned on stream `stream`.
pub fn seeded(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exponential variate with the given rate, by inversion: `-ln(U) / rate` with `U` in (0, 1).
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    -u.ln() / rate
}
