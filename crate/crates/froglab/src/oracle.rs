//! Brute-force reference implementations. These deliberately share no code
//! with the fast paths they certify: gates and transforms are re-evaluated
//! with literal summation loops.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{FrogError, Result};
use crate::types::{FrogTrace, NonlinearityKind, Pulse, TraceGeometry};

/// `Z[k, m] = |sum_n y_m[n] e^{-2pi j k n / N}|^2` by explicit double sum.
pub fn direct_trace(x1: &Pulse, x2: &Pulse, g: &TraceGeometry) -> Result<FrogTrace> {
    if x1.len() != x2.len() {
        return Err(FrogError::LengthMismatch(x1.len(), x2.len()));
    }
    if x1.len() != g.n() {
        return Err(FrogError::LengthMismatch(x1.len(), g.n()));
    }
    if g.kind() == NonlinearityKind::Shg && x1 != x2 {
        return Err(FrogError::ShgMismatch);
    }
    let n = g.n();
    // kernel table e^{-2 pi j t / N}; the double sum below stays literal
    let kernel: Vec<Complex64> = (0..n)
        .map(|t| {
            let angle = -2.0 * std::f64::consts::PI * t as f64 / n as f64;
            Complex64::new(angle.cos(), angle.sin())
        })
        .collect();
    let mut values = ndarray::Array2::zeros((n, g.m_count()));
    for m in 0..g.m_count() {
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n as i64 {
                let d = match g.kind() {
                    NonlinearityKind::BlindShg | NonlinearityKind::Shg => {
                        g.delay_sign() as i64 * (m * g.l()) as i64
                    }
                    _ => -((m * g.l()) as i64),
                };
                let y = match g.kind() {
                    NonlinearityKind::BlindShg | NonlinearityKind::Shg => {
                        x1.get(i) * x2.get(i + d)
                    }
                    NonlinearityKind::Thg => x1.get(i) * x1.get(i) * x1.get(i + d),
                    NonlinearityKind::Pg => {
                        x1.get(i)
                            * (x1.get(i + d).re * x1.get(i + d).re
                                + x1.get(i + d).im * x1.get(i + d).im)
                                .sqrt()
                    }
                    NonlinearityKind::Crab => {
                        let phase = x2.get(i + d).re;
                        x1.get(i) * Complex64::new(phase.cos(), phase.sin())
                    }
                };
                acc += y * kernel[(k * i as usize) % n];
            }
            values[[k, m]] = acc.norm_sqr();
        }
    }
    FrogTrace::new(values, *g)
}

/// A phase assignment on the support indices that reproduces the row
/// spectrum within `tol`.
#[derive(Debug, Clone)]
pub struct RowMatch {
    /// phase per index; entries off support are zero
    pub phases: Vec<f64>,
}

/// Enumerates every phase assignment on the grid `{2 pi i / q}` over the
/// support of `row_magnitudes` and keeps those whose Fourier magnitudes
/// match `sqrt(row_spectrum)` within `tol` (max abs deviation).
pub fn exhaustive_row_search(
    row_magnitudes: &[f64],
    row_spectrum: &[f64],
    q: usize,
    tol: f64,
) -> Result<Vec<RowMatch>> {
    let n = row_magnitudes.len();
    if n > 6 {
        return Err(FrogError::OracleBudget(format!("N = {n} > 6")));
    }
    if q > 16 || q == 0 {
        return Err(FrogError::OracleBudget(format!("q = {q} not in 1..=16")));
    }
    if row_spectrum.len() != n {
        return Err(FrogError::LengthMismatch(row_spectrum.len(), n));
    }
    let peak = row_magnitudes.iter().copied().fold(0.0, f64::max);
    let support: Vec<usize> = (0..n)
        .filter(|&i| row_magnitudes[i] > 1e-12 * peak && row_magnitudes[i] > 0.0)
        .collect();
    let target: Vec<f64> = row_spectrum.iter().map(|&p| p.max(0.0).sqrt()).collect();

    let mut matches = Vec::new();
    let total = q.pow(support.len() as u32);
    for code in 0..total {
        let mut phases = vec![0.0; n];
        let mut rem = code;
        for &idx in &support {
            let step = rem % q;
            rem /= q;
            phases[idx] = 2.0 * std::f64::consts::PI * step as f64 / q as f64;
        }
        // explicit DFT magnitude check
        let mut ok = true;
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for &idx in &support {
                let angle =
                    phases[idx] - 2.0 * std::f64::consts::PI * (k * idx) as f64 / n as f64;
                acc += row_magnitudes[idx] * Complex64::new(angle.cos(), angle.sin());
            }
            if (acc.norm() - target[k]).abs() > tol {
                ok = false;
                break;
            }
        }
        if ok {
            matches.push(RowMatch { phases });
        }
    }
    Ok(matches)
}

/// Whether two row matches describe the same signal up to global phase or
/// global phase plus conjugate reflection.
pub fn row_matches_equivalent(
    row_magnitudes: &[f64],
    a: &RowMatch,
    b: &RowMatch,
    tol: f64,
) -> bool {
    let n = row_magnitudes.len();
    let signal = |m: &RowMatch| -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::from_polar(row_magnitudes[i].max(0.0), m.phases[i]))
            .collect()
    };
    let sa = signal(a);
    let sb = signal(b);
    let norm: f64 = sa.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return true;
    }
    let close_up_to_phase = |u: &[Complex64], v: &[Complex64]| -> bool {
        let inner: Complex64 = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
        if inner.norm() == 0.0 {
            return u.iter().zip(v).all(|(x, y)| (x - y).norm() <= tol);
        }
        let phase = inner / inner.norm();
        u.iter()
            .zip(v)
            .all(|(x, y)| (x * phase - y).norm() <= tol * norm.max(1.0))
    };
    if close_up_to_phase(&sa, &sb) {
        return true;
    }
    let reflected: Vec<Complex64> = (0..n).map(|i| sa[(n - i) % n].conj()).collect();
    close_up_to_phase(&reflected, &sb)
}

/// Numerical null space via SVD; singular values at or below
/// `threshold * sigma_max` count as zero. Returns (dimension, orthonormal
/// basis as columns).
pub fn numeric_nullspace(matrix: &DMatrix<f64>, threshold: f64) -> Result<(usize, DMatrix<f64>)> {
    if matrix.ncols() == 0 || matrix.nrows() == 0 {
        return Err(FrogError::Degenerate("empty matrix".into()));
    }
    // nalgebra's thin SVD only exposes min(m, n) right singular vectors; pad
    // with zero rows so V is always square.
    let cols = matrix.ncols();
    let padded = if matrix.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (matrix.nrows(), cols)).copy_from(matrix);
        p
    } else {
        matrix.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = threshold * sigma_max;
    let mut basis_rows: Vec<usize> = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            basis_rows.push(i);
        }
    }
    let mut basis = DMatrix::zeros(cols, basis_rows.len());
    for (j, &i) in basis_rows.iter().enumerate() {
        basis.set_column(j, &v_t.row(i).transpose());
    }
    Ok((basis_rows.len(), basis))
}

/// Max norm of `A d` over columns `d` of `dirs`, each normalized.
pub fn max_image_norm(matrix: &DMatrix<f64>, dirs: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..dirs.ncols() {
        let d: DVector<f64> = dirs.column(j).into();
        let dn = d.norm();
        if dn == 0.0 {
            continue;
        }
        worst = worst.max((matrix * &d).norm() / dn);
    }
    worst
}
