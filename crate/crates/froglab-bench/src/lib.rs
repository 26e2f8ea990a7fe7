//! Shared fixtures for the criterion benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use froglab::{random_bandlimited_pulse, random_pulse, Pulse};

pub fn seeded_pair(n: usize, seed: u64) -> (Pulse, Pulse) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (random_pulse(n, &mut rng), random_pulse(n, &mut rng))
}

pub fn seeded_bandlimited(n: usize, seed: u64) -> Pulse {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    random_bandlimited_pulse(n, n / 2, &mut rng)
}
