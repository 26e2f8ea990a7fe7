//! Seeded signal generators used by the CLI, the reconstruction
//! initializers, and the test suites.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dft::idft;
use crate::types::Pulse;

/// Complex white-Gaussian pulse.
pub fn random_pulse<R: Rng>(n: usize, rng: &mut R) -> Pulse {
    Pulse::new(
        (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect(),
    )
    .expect("n >= 2")
}

/// Zero-run length required by the uniqueness hypothesis: `ceil((N-1)/2)`.
pub fn required_zero_run(n: usize) -> usize {
    (n - 1).div_ceil(2)
}

/// Pulse whose spectrum is zero on the circular run
/// `[zero_run_start, zero_run_start + floor(N/2))` and complex Gaussian on
/// the complement, so the band-limit hypothesis holds by construction.
pub fn random_bandlimited_pulse<R: Rng>(n: usize, zero_run_start: usize, rng: &mut R) -> Pulse {
    let run = n / 2;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for (k, c) in spectrum.iter_mut().enumerate() {
        let in_run = (0..run).any(|j| (zero_run_start + j) % n == k);
        if !in_run {
            *c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    Pulse::new(idft(&spectrum)).expect("n >= 2")
}

/// Gaussian amplitude envelope with i.i.d. uniform random phases, the
/// customary reconstruction initializer.
pub fn gaussian_random_phase_pulse<R: Rng>(n: usize, rng: &mut R) -> Pulse {
    let center = n as f64 / 2.0;
    let sigma = n as f64 / 10.0;
    Pulse::new(
        (0..n)
            .map(|i| {
                let amp = (-((i as f64 - center).powi(2)) / (2.0 * sigma * sigma)).exp();
                let phase = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                Complex64::from_polar(amp, phase)
            })
            .collect(),
    )
    .expect("n >= 2")
}
