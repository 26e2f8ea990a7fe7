//! Domain types: pulses, spectra, trace geometry, and FROG traces.
//!
//! All temporal indexing is circular (`x[i] = x[i mod N]`). The DFT
//! convention is fixed in [`crate::dft`]: unnormalized forward kernel
//! `e^{-2pi j k n / N}`, factor `1/N` on the inverse.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{FrogError, Result};

/// A length-N complex sample sequence with circular indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    samples: Vec<Complex64>,
}

impl Pulse {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(FrogError::TooShort(samples.len()));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.re.is_finite() || !s.im.is_finite() {
                return Err(FrogError::NonFinite(i));
            }
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Circular access: `get(i)` reads sample `((i mod N) + N) mod N`.
    pub fn get(&self, i: i64) -> Complex64 {
        let n = self.samples.len() as i64;
        self.samples[(((i % n) + n) % n) as usize]
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// DFT coefficients of a [`Pulse`] under the crate-wide convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(FrogError::TooShort(coefficients.len()));
        }
        for (i, c) in coefficients.iter().enumerate() {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(FrogError::NonFinite(i));
            }
        }
        Ok(Self { coefficients })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Circular access, mirroring [`Pulse::get`].
    pub fn get(&self, i: i64) -> Complex64 {
        let n = self.coefficients.len() as i64;
        self.coefficients[(((i % n) + n) % n) as usize]
    }
}

/// Gating nonlinearity of the measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NonlinearityKind {
    /// `y_m[n] = x1[n] x2[n + d]` with two independent signals.
    BlindShg,
    /// Blind-SHG gate with `x2` forced equal to `x1`.
    Shg,
    /// Third harmonic: `y_m[n] = x1[n]^2 x1[n - mL]`.
    Thg,
    /// Polarization gating: `y_m[n] = x1[n] |x1[n - mL]|`.
    Pg,
    /// Attosecond streaking: `y_m[n] = x1[n] e^{j Re(x2[n - mL])}`.
    Crab,
}

impl NonlinearityKind {
    pub const ALL: [NonlinearityKind; 5] = [
        NonlinearityKind::BlindShg,
        NonlinearityKind::Shg,
        NonlinearityKind::Thg,
        NonlinearityKind::Pg,
        NonlinearityKind::Crab,
    ];

    /// Default delay sign: `+1` for the SHG family, `-1` for the rest.
    pub fn default_delay_sign(self) -> i8 {
        match self {
            NonlinearityKind::BlindShg | NonlinearityKind::Shg => 1,
            _ => -1,
        }
    }

    /// Whether the gate involves a second, independent signal.
    pub fn is_bivariate(self) -> bool {
        matches!(self, NonlinearityKind::BlindShg | NonlinearityKind::Crab)
    }
}

/// Signal length, delay stride, and gate kind of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceGeometry {
    n: usize,
    l: usize,
    m_count: usize,
    kind: NonlinearityKind,
    delay_sign: i8,
}

impl TraceGeometry {
    /// Geometry with the kind's default delay sign and `m_count = ceil(N/L)`.
    pub fn new(n: usize, l: usize, kind: NonlinearityKind) -> Result<Self> {
        if n < 2 {
            return Err(FrogError::TooShort(n));
        }
        if l == 0 || l > n {
            return Err(FrogError::InvalidGeometry(format!(
                "delay stride L = {l} out of range 1..={n}"
            )));
        }
        Ok(Self {
            n,
            l,
            m_count: n.div_ceil(l),
            kind,
            delay_sign: kind.default_delay_sign(),
        })
    }

    pub fn with_delay_sign(mut self, sign: i8) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(FrogError::InvalidGeometry(format!(
                "delay sign must be +1 or -1, got {sign}"
            )));
        }
        self.delay_sign = sign;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m_count(&self) -> usize {
        self.m_count
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    pub fn delay_sign(&self) -> i8 {
        self.delay_sign
    }

    /// Signed circular delay for delay index `m`. THG/PG/CRAB gates are
    /// written with a `-mL` delay regardless of `delay_sign`.
    pub fn delay(&self, m: usize) -> i64 {
        let d = (m * self.l) as i64;
        match self.kind {
            NonlinearityKind::BlindShg | NonlinearityKind::Shg => self.delay_sign as i64 * d,
            _ => -d,
        }
    }
}

/// Nonnegative intensity data `Z[k, m]` plus its geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct FrogTrace {
    values: Array2<f64>,
    geometry: TraceGeometry,
}

impl FrogTrace {
    pub fn new(values: Array2<f64>, geometry: TraceGeometry) -> Result<Self> {
        if values.nrows() != geometry.n() || values.ncols() != geometry.m_count() {
            return Err(FrogError::InvalidGeometry(format!(
                "trace is {}x{}, geometry wants {}x{}",
                values.nrows(),
                values.ncols(),
                geometry.n(),
                geometry.m_count()
            )));
        }
        for ((k, m), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(FrogError::NonFinite(k * values.ncols() + m));
            }
            if *v < 0.0 {
                return Err(FrogError::NegativeEntry(k, m));
            }
        }
        Ok(Self { values, geometry })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn geometry(&self) -> &TraceGeometry {
        &self.geometry
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }
}

/// Largest relative entrywise deviation between two same-shape traces.
pub fn trace_relative_deviation(a: &FrogTrace, b: &FrogTrace) -> f64 {
    let scale = a.max_value().max(b.max_value()).max(f64::MIN_POSITIVE);
    a.values()
        .iter()
        .zip(b.values().iter())
        .map(|(x, y)| (x - y).abs() / scale)
        .fold(0.0, f64::max)
}
