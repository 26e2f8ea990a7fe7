//! Exact-length DFT under the crate-wide convention: unnormalized forward
//! kernel `e^{-2pi j k n / N}`, factor `1/N` on the inverse. Any N >= 2 is
//! supported; transforms are planned once per length per thread.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::types::{Pulse, Spectrum};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn run(buf: &mut [Complex64], forward: bool) {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        let plan = cache
            .entry((buf.len(), forward))
            .or_insert_with(|| {
                planner.plan_fft(
                    buf.len(),
                    if forward {
                        FftDirection::Forward
                    } else {
                        FftDirection::Inverse
                    },
                )
            })
            .clone();
        plan.process(buf);
    });
}

/// Forward DFT of a raw buffer, unnormalized.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    run(&mut buf, true);
    buf
}

/// Inverse DFT of a raw buffer, carrying the `1/N` factor.
pub fn idft(s: &[Complex64]) -> Vec<Complex64> {
    let mut buf = s.to_vec();
    run(&mut buf, false);
    let scale = 1.0 / s.len() as f64;
    for v in &mut buf {
        *v *= scale;
    }
    buf
}

/// `coefficients[k] = sum_n x[n] e^{-2pi j k n / N}`.
pub fn dft_forward(x: &Pulse) -> Spectrum {
    Spectrum::new(dft(x.samples())).expect("forward DFT of a valid pulse is valid")
}

/// `x[n] = (1/N) sum_l s[l] e^{2pi j l n / N}`.
pub fn dft_inverse(s: &Spectrum) -> Pulse {
    Pulse::new(idft(s.coefficients())).expect("inverse DFT of a valid spectrum is valid")
}

/// `out[n] = x[(n - n0) mod N]`.
pub fn circular_shift(x: &Pulse, n0: i64) -> Pulse {
    let n = x.len();
    let samples = (0..n as i64).map(|i| x.get(i - n0)).collect();
    Pulse::new(samples).expect("shift of a valid pulse is valid")
}
