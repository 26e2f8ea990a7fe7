//! Trace synthesis: gate products for every nonlinearity, the time-domain
//! trace definition, and the spectral convolution route for L = 1.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::dft::{dft, dft_forward};
use crate::error::{FrogError, Result};
use crate::types::{FrogTrace, NonlinearityKind, Pulse, TraceGeometry};

/// Noise applied to the intensity trace, deterministic per seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    /// Gaussian: std relative to the peak trace value. Poisson: expected
    /// photon count at the peak.
    pub level: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    None,
    AdditiveGaussian,
    Poisson,
}

impl NoiseSpec {
    pub fn clean() -> Self {
        Self {
            model: NoiseModel::None,
            level: 0.0,
            seed: 0,
        }
    }
}

fn check_pair(x1: &Pulse, x2: &Pulse, g: &TraceGeometry) -> Result<()> {
    if x1.len() != x2.len() {
        return Err(FrogError::LengthMismatch(x1.len(), x2.len()));
    }
    if x1.len() != g.n() {
        return Err(FrogError::LengthMismatch(x1.len(), g.n()));
    }
    if g.kind() == NonlinearityKind::Shg && x1 != x2 {
        return Err(FrogError::ShgMismatch);
    }
    Ok(())
}

/// Gate product `y_m` for delay index `m`.
pub fn gate_product(x1: &Pulse, x2: &Pulse, m: usize, g: &TraceGeometry) -> Result<Pulse> {
    check_pair(x1, x2, g)?;
    if m >= g.m_count() {
        return Err(FrogError::DelayOutOfRange {
            m,
            m_count: g.m_count(),
        });
    }
    let n = g.n() as i64;
    let d = g.delay(m);
    let samples = (0..n)
        .map(|i| match g.kind() {
            NonlinearityKind::BlindShg | NonlinearityKind::Shg => x1.get(i) * x2.get(i + d),
            NonlinearityKind::Thg => x1.get(i) * x1.get(i) * x1.get(i + d),
            NonlinearityKind::Pg => x1.get(i) * x1.get(i + d).norm(),
            NonlinearityKind::Crab => {
                x1.get(i) * Complex64::from_polar(1.0, x2.get(i + d).re)
            }
        })
        .collect();
    Pulse::new(samples)
}

/// `Z[k, m] = |DFT(y_m)[k]|^2` over all delay indices.
pub fn synthesize_trace(x1: &Pulse, x2: &Pulse, g: &TraceGeometry) -> Result<FrogTrace> {
    check_pair(x1, x2, g)?;
    let n = g.n();
    let mut values = Array2::zeros((n, g.m_count()));
    for m in 0..g.m_count() {
        let y = gate_product(x1, x2, m, g)?;
        let s = dft_forward(&y);
        for k in 0..n {
            values[[k, m]] = s.get(k as i64).norm_sqr();
        }
    }
    FrogTrace::new(values, *g)
}

/// Trace via the spectral identity
/// `Y[k, m] = (1/N) sum_l x1hat[k - l] x2hat[l] e^{2pi j m l / N}`,
/// valid for the SHG family at L = 1.
pub fn synthesize_trace_spectral(x1: &Pulse, x2: &Pulse, g: &TraceGeometry) -> Result<FrogTrace> {
    check_pair(x1, x2, g)?;
    if g.l() != 1 {
        return Err(FrogError::RequiresUnitStride(g.l()));
    }
    if !matches!(
        g.kind(),
        NonlinearityKind::BlindShg | NonlinearityKind::Shg
    ) {
        return Err(FrogError::UnsupportedKind(g.kind()));
    }
    let n = g.n();
    let s1 = dft_forward(x1);
    let s2 = dft_forward(x2);
    let mut values = Array2::zeros((n, n));
    let sign = g.delay_sign() as i64;
    for k in 0..n {
        // row_l = (1/N) x1hat[k - l] x2hat[l]; Y[k, .] is its inverse-kernel
        // sum over l, evaluated with an unnormalized inverse transform.
        let row: Vec<Complex64> = (0..n)
            .map(|l| s1.get(k as i64 - l as i64) * s2.get(l as i64) / n as f64)
            .collect();
        let mut buf = row;
        // e^{+2pi j m l / N} sum == conjugate of a forward DFT of the
        // conjugated row; cheaper: reuse forward DFT on reversed index.
        buf = buf.iter().map(|v| v.conj()).collect();
        let spec = dft(&buf);
        for m in 0..n {
            // delay_sign -1 reads the conjugate route at mirrored m
            let mm = if sign == 1 { m } else { (n - m) % n };
            values[[k, mm]] = spec[m].norm_sqr();
        }
    }
    FrogTrace::new(values, *g)
}

/// `|DFT(x)[k]|^2` per frequency bin.
pub fn power_spectrum(x: &Pulse) -> Vec<f64> {
    dft_forward(x)
        .coefficients()
        .iter()
        .map(|c| c.norm_sqr())
        .collect()
}

/// Applies the noise model to a trace. Per-column seeding keeps the result
/// independent of evaluation order.
pub fn add_noise(t: &FrogTrace, spec: &NoiseSpec) -> Result<FrogTrace> {
    if spec.level < 0.0 {
        return Err(FrogError::NegativeNoiseLevel(spec.level));
    }
    match spec.model {
        NoiseModel::None => Ok(t.clone()),
        NoiseModel::AdditiveGaussian => {
            if spec.level == 0.0 {
                return Ok(t.clone());
            }
            let sigma = spec.level * t.max_value();
            let normal = Normal::new(0.0, sigma).expect("sigma > 0");
            let mut values = t.values().clone();
            for m in 0..values.ncols() {
                let mut rng = column_rng(spec.seed, m);
                for k in 0..values.nrows() {
                    values[[k, m]] = (values[[k, m]] + normal.sample(&mut rng)).max(0.0);
                }
            }
            FrogTrace::new(values, *t.geometry())
        }
        NoiseModel::Poisson => {
            let peak = t.max_value();
            if peak == 0.0 || spec.level == 0.0 {
                return Ok(t.clone());
            }
            let scale = spec.level / peak;
            let mut values = t.values().clone();
            for m in 0..values.ncols() {
                let mut rng = column_rng(spec.seed, m);
                for k in 0..values.nrows() {
                    let lambda = values[[k, m]] * scale;
                    let counts = if lambda > 0.0 {
                        Poisson::new(lambda).expect("lambda > 0").sample(&mut rng)
                    } else {
                        0.0
                    };
                    values[[k, m]] = counts / scale;
                }
            }
            FrogTrace::new(values, *t.geometry())
        }
    }
}

fn column_rng(seed: u64, column: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(column as u64 + 1);
    // burn a draw so streams with equal seeds still decorrelate quickly
    let _: u64 = rng.gen();
    rng
}
