//! Constructive uniqueness pipeline: spectral reduction of the trace to
//! per-row phase retrieval problems, assembly and minimum-norm solve of the
//! linear phase system, null-space analysis, and ambiguity-aligned
//! comparison against the ground-truth pair.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::ambiguity::{align_up_to_ambiguities, AmbiguityTransform};
use crate::dft::{dft, dft_forward, idft};
use crate::error::{FrogError, Result};
use crate::forward::{power_spectrum, synthesize_trace};
use crate::oracle::{max_image_norm, numeric_nullspace};
use crate::types::{FrogTrace, NonlinearityKind, Pulse, Spectrum, TraceGeometry};

/// Relative support threshold on the magnitude-product matrix.
pub const SUPPORT_TAU: f64 = 1e-12;
/// Relative singular-value threshold for the numerical null space.
pub const NULLSPACE_TAU: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandlimitReport {
    pub satisfied: bool,
    pub zero_run_start: usize,
    pub zero_run_length: usize,
    /// all-zero spectrum
    pub degenerate: bool,
}

/// Longest circular run of below-threshold spectral entries versus the
/// `ceil((N-1)/2)` requirement.
pub fn check_bandlimit(s: &Spectrum) -> Result<BandlimitReport> {
    let n = s.len();
    let mags: Vec<f64> = s.coefficients().iter().map(|c| c.norm()).collect();
    let peak = mags.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(BandlimitReport {
            satisfied: false,
            zero_run_start: 0,
            zero_run_length: n,
            degenerate: true,
        });
    }
    let is_zero: Vec<bool> = mags.iter().map(|&m| m <= 1e-12 * peak).collect();
    let mut best_len = 0usize;
    let mut best_start = 0usize;
    let mut run = 0usize;
    for i in 0..2 * n {
        if is_zero[i % n] {
            run += 1;
            let len = run.min(n);
            if len > best_len {
                best_len = len;
                best_start = (i + 1 - run.min(i + 1)) % n;
            }
        } else {
            run = 0;
        }
    }
    let required = (n - 1).div_ceil(2);
    Ok(BandlimitReport {
        satisfied: best_len >= required,
        zero_run_start: best_start,
        zero_run_length: best_len,
        degenerate: false,
    })
}

/// Known magnitudes `I[k,l] = (1/N)|x1hat[k-l]||x2hat[l]|`, optional
/// ground-truth phase sums, and the support mask.
#[derive(Debug, Clone)]
pub struct MagnitudePhaseDecomp {
    pub magnitude_product: Array2<f64>,
    pub phase_sum: Option<Array2<f64>>,
    pub support: Array2<bool>,
}

pub fn build_decomposition(
    ps1: &[f64],
    ps2: &[f64],
    phases: Option<(&[f64], &[f64])>,
) -> Result<MagnitudePhaseDecomp> {
    let n = ps1.len();
    if ps2.len() != n {
        return Err(FrogError::LengthMismatch(ps2.len(), n));
    }
    for (i, &p) in ps1.iter().chain(ps2.iter()).enumerate() {
        if p < 0.0 {
            return Err(FrogError::NegativeEntry(i % n, i / n));
        }
    }
    let a1: Vec<f64> = ps1.iter().map(|&p| p.sqrt()).collect();
    let a2: Vec<f64> = ps2.iter().map(|&p| p.sqrt()).collect();
    let mut magnitude = Array2::zeros((n, n));
    for k in 0..n {
        for l in 0..n {
            magnitude[[k, l]] = a1[(k + n - l) % n] * a2[l] / n as f64;
        }
    }
    let peak = magnitude.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(FrogError::Degenerate(
            "magnitude-product matrix is identically zero".into(),
        ));
    }
    let support = magnitude.mapv(|v| v > SUPPORT_TAU * peak);
    let phase_sum = phases.map(|(phi1, phi2)| {
        let mut p = Array2::zeros((n, n));
        for k in 0..n {
            for l in 0..n {
                p[[k, l]] = phi1[(k + n - l) % n] + phi2[l];
            }
        }
        p
    });
    Ok(MagnitudePhaseDecomp {
        magnitude_product: magnitude,
        phase_sum,
        support,
    })
}

/// Row `k` of the result is the power spectrum (over `l`) of `S[k, .]`:
/// `m -> Z[k, (-m) mod N]`.
pub fn rows_from_trace(t: &FrogTrace) -> Result<Array2<f64>> {
    let g = t.geometry();
    if g.l() != 1 {
        return Err(FrogError::RequiresUnitStride(g.l()));
    }
    let n = g.n();
    let mut rows = Array2::zeros((n, n));
    for k in 0..n {
        for m in 0..n {
            rows[[k, m]] = t.values()[[k, (n - m) % n]];
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct GsOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for GsOptions {
    fn default() -> Self {
        Self {
            max_iter: 400,
            tol: 1e-12,
            restarts: 32,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GsRowResult {
    /// phase per index, zero off support
    pub phases: Vec<f64>,
    /// relative Fourier-magnitude residual of the best restart
    pub residual: f64,
}

/// Alternating projections between known temporal magnitudes (on support)
/// and known Fourier magnitudes; best of `restarts` random initializations.
pub fn retrieve_row_phases_gs(
    row_spectrum: &[f64],
    row_magnitudes: &[f64],
    opts: &GsOptions,
    seed: u64,
) -> Result<GsRowResult> {
    let n = row_magnitudes.len();
    if row_spectrum.len() != n {
        return Err(FrogError::LengthMismatch(row_spectrum.len(), n));
    }
    let spec_energy: f64 = row_spectrum.iter().sum();
    let mag_energy: f64 = row_magnitudes.iter().map(|&m| m * m).sum();
    let scale = spec_energy.max(n as f64 * mag_energy);
    if scale == 0.0 {
        return Ok(GsRowResult {
            phases: vec![0.0; n],
            residual: 0.0,
        });
    }
    let mismatch = (spec_energy - n as f64 * mag_energy).abs() / scale;
    if mismatch > 1e-6 {
        return Err(FrogError::ParsevalMismatch(mismatch));
    }

    let peak = row_magnitudes.iter().copied().fold(0.0, f64::max);
    let support: Vec<bool> = row_magnitudes
        .iter()
        .map(|&m| m > SUPPORT_TAU * peak)
        .collect();
    let target: Vec<f64> = row_spectrum.iter().map(|&p| p.max(0.0).sqrt()).collect();
    let target_norm = target.iter().map(|&t| t * t).sum::<f64>().sqrt();

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<Complex64>, f64)> = None;
    for _ in 0..opts.restarts.max(1) {
        let mut s: Vec<Complex64> = (0..n)
            .map(|i| {
                if support[i] {
                    Complex64::from_polar(
                        row_magnitudes[i],
                        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                    )
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        for _ in 0..opts.max_iter {
            let s_hat = dft(&s);
            let residual = s_hat
                .iter()
                .zip(&target)
                .map(|(v, t)| (v.norm() - t).powi(2))
                .sum::<f64>()
                .sqrt()
                / target_norm;
            if residual < opts.tol {
                break;
            }
            let projected: Vec<Complex64> = s_hat
                .iter()
                .zip(&target)
                .map(|(v, &t)| {
                    if v.norm() > 0.0 {
                        v * (t / v.norm())
                    } else {
                        Complex64::new(t, 0.0)
                    }
                })
                .collect();
            let back = idft(&projected);
            for i in 0..n {
                s[i] = if support[i] {
                    if back[i].norm() > 0.0 {
                        back[i] * (row_magnitudes[i] / back[i].norm())
                    } else {
                        Complex64::from_polar(row_magnitudes[i], s[i].arg())
                    }
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
        }
        // residual of the final temporal-projected iterate
        let s_hat = dft(&s);
        let final_residual = s_hat
            .iter()
            .zip(&target)
            .map(|(v, t)| (v.norm() - t).powi(2))
            .sum::<f64>()
            .sqrt()
            / target_norm;
        if best.as_ref().map_or(true, |(_, b)| final_residual < *b) {
            best = Some((s, final_residual));
        }
        if best.as_ref().unwrap().1 < opts.tol {
            break;
        }
    }
    let (s, residual) = best.expect("at least one restart");
    let phases = (0..n)
        .map(|i| if support[i] { s[i].arg() } else { 0.0 })
        .collect();
    Ok(GsRowResult { phases, residual })
}

/// Adds an independent uniform random offset per row (oracle mode only).
/// Returns the offset matrix and the drawn offsets.
pub fn inject_row_offsets(p: &Array2<f64>, seed: u64) -> (Array2<f64>, Vec<f64>) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = p.nrows();
    let psi: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let mut out = p.clone();
    for k in 0..n {
        for l in 0..p.ncols() {
            out[[k, l]] += psi[k];
        }
    }
    (out, psi)
}

/// Sparse linear system `phi1[(k-l) mod N] + phi2[l] + psi[k] = Ptilde[k,l]`
/// over supported cells, with below-threshold unknowns pinned to zero.
#[derive(Debug, Clone)]
pub struct PhaseSystem {
    n: usize,
    cells: Vec<(usize, usize)>,
    rhs: Vec<f64>,
    column_mask: Vec<bool>,
}

impl PhaseSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn column_mask(&self) -> &[bool] {
        &self.column_mask
    }

    pub fn unknowns(&self) -> usize {
        self.column_mask.iter().filter(|&&b| b).count()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    fn column_map(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; 3 * self.n];
        let mut next = 0;
        for (i, &kept) in self.column_mask.iter().enumerate() {
            if kept {
                map[i] = Some(next);
                next += 1;
            }
        }
        map
    }

    /// Dense constraint matrix over the unpinned columns.
    pub fn reduced_matrix(&self) -> DMatrix<f64> {
        let map = self.column_map();
        let mut a = DMatrix::zeros(self.cells.len(), self.unknowns());
        for (row, &(k, l)) in self.cells.iter().enumerate() {
            let cols = [(k + self.n - l) % self.n, self.n + l, 2 * self.n + k];
            for c in cols {
                if let Some(j) = map[c] {
                    a[(row, j)] = 1.0;
                }
            }
        }
        a
    }

    /// Expands a reduced-coordinate vector to the full `(phi1, phi2, psi)`
    /// layout, zeros on pinned columns.
    pub fn expand(&self, reduced: &DVector<f64>) -> Vec<f64> {
        let map = self.column_map();
        (0..3 * self.n)
            .map(|i| map[i].map_or(0.0, |j| reduced[j]))
            .collect()
    }
}

pub fn build_phase_system(decomp: &MagnitudePhaseDecomp, ptilde: &Array2<f64>) -> Result<PhaseSystem> {
    let n = decomp.magnitude_product.nrows();
    let mut cells = Vec::new();
    let mut rhs = Vec::new();
    let mut column_mask = vec![false; 3 * n];
    for k in 0..n {
        for l in 0..n {
            if decomp.support[[k, l]] {
                cells.push((k, l));
                rhs.push(ptilde[[k, l]]);
                column_mask[(k + n - l) % n] = true;
                column_mask[n + l] = true;
                column_mask[2 * n + k] = true;
            }
        }
    }
    if cells.is_empty() {
        return Err(FrogError::EmptySupport);
    }
    Ok(PhaseSystem {
        n,
        cells,
        rhs,
        column_mask,
    })
}

#[derive(Debug, Clone)]
pub struct PhaseSolution {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub psi: Vec<f64>,
    pub residual: f64,
}

fn min_norm_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    svd.solve(rhs, NULLSPACE_TAU * sigma_max.max(f64::MIN_POSITIVE))
        .expect("svd solve")
}

/// Minimum-norm least-squares solve of the phase system.
pub fn solve_phases(sys: &PhaseSystem) -> PhaseSolution {
    solve_phases_with_rhs(sys, &DVector::from_vec(sys.rhs.clone()))
}

fn solve_phases_with_rhs(sys: &PhaseSystem, rhs: &DVector<f64>) -> PhaseSolution {
    let a = sys.reduced_matrix();
    let v = min_norm_solve(&a, rhs);
    let residual = (&a * &v - rhs).norm();
    let full = sys.expand(&v);
    let n = sys.n();
    PhaseSolution {
        phi1: full[0..n].to_vec(),
        phi2: full[n..2 * n].to_vec(),
        psi: full[2 * n..3 * n].to_vec(),
        residual,
    }
}

/// Gauss-Seidel synchronization over unit phasors: finds reduced-coordinate
/// phases whose per-cell sums match the right-hand side modulo 2 pi. The
/// returned vector seeds the wrap-aware refinement; a multiplicative
/// formulation is immune to the 2-pi wraps that defeat a direct real solve.
fn synchronize_phasors(
    sys: &PhaseSystem,
    sweeps: usize,
    restarts: usize,
    seed: u64,
) -> DVector<f64> {
    let map = sys.column_map();
    let n = sys.n();
    let unknowns = sys.unknowns();
    let row_cols: Vec<[Option<usize>; 3]> = sys
        .cells
        .iter()
        .map(|&(k, l)| [map[(k + n - l) % n], map[n + l], map[2 * n + k]])
        .collect();
    let z: Vec<Complex64> = sys
        .rhs
        .iter()
        .map(|&r| Complex64::from_polar(1.0, r))
        .collect();
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); unknowns];
    for (r, cols) in row_cols.iter().enumerate() {
        for c in cols.iter().flatten() {
            col_rows[*c].push(r);
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for restart in 0..restarts.max(1) {
        let mut p: Vec<Complex64> = if restart == 0 {
            vec![Complex64::new(1.0, 0.0); unknowns]
        } else {
            (0..unknowns)
                .map(|_| {
                    Complex64::from_polar(
                        1.0,
                        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                    )
                })
                .collect()
        };
        for _ in 0..sweeps {
            let mut moved = 0.0f64;
            for c in 0..unknowns {
                let mut acc = Complex64::new(0.0, 0.0);
                for &r in &col_rows[c] {
                    let mut other = z[r];
                    for oc in row_cols[r].iter().flatten() {
                        if *oc != c {
                            other *= p[*oc].conj();
                        }
                    }
                    acc += other;
                }
                if acc.norm() > 0.0 {
                    let updated = acc / acc.norm();
                    moved = moved.max((updated - p[c]).norm());
                    p[c] = updated;
                }
            }
            if moved < 1e-13 {
                break;
            }
        }
        let res: f64 = row_cols
            .iter()
            .enumerate()
            .map(|(r, cols)| {
                let mut prod = Complex64::new(1.0, 0.0);
                for c in cols.iter().flatten() {
                    prod *= p[*c];
                }
                (z[r] - prod).norm_sqr()
            })
            .sum();
        if best.as_ref().map_or(true, |(b, _)| res < *b) {
            best = Some((res, p));
        }
        if best.as_ref().unwrap().0 < 1e-20 {
            break;
        }
    }
    let (_, p) = best.expect("at least one restart");
    DVector::from_vec(p.iter().map(|c| c.arg()).collect())
}

/// Re-wraps the right-hand side toward the current model prediction by
/// integer multiples of 2 pi, re-solving until fixation. Seeded by a phasor
/// synchronization pass so the first prediction already sits on the right
/// 2-pi sheet. Used for GS-retrieved (wrapped) phase data.
pub fn solve_phases_wrap_refined(sys: &PhaseSystem, max_passes: usize) -> PhaseSolution {
    let a = sys.reduced_matrix();
    let mut rhs = DVector::from_vec(sys.rhs.clone());
    let v0 = synchronize_phasors(sys, 300, 8, 0x51CC);
    let pred0 = &a * &v0;
    let two_pi_full = 2.0 * std::f64::consts::PI;
    for i in 0..rhs.len() {
        let shift = ((pred0[i] - rhs[i]) / two_pi_full).round();
        rhs[i] += two_pi_full * shift;
    }
    let mut sol = solve_phases_with_rhs(sys, &rhs);
    let two_pi = 2.0 * std::f64::consts::PI;
    for _ in 0..max_passes {
        let v = {
            // rebuild reduced vector from the expanded solution
            let full: Vec<f64> = sol
                .phi1
                .iter()
                .chain(sol.phi2.iter())
                .chain(sol.psi.iter())
                .copied()
                .collect();
            let mut reduced = Vec::with_capacity(sys.unknowns());
            for (i, &kept) in sys.column_mask.iter().enumerate() {
                if kept {
                    reduced.push(full[i]);
                }
            }
            DVector::from_vec(reduced)
        };
        let pred = &a * &v;
        let mut changed = false;
        for i in 0..rhs.len() {
            let shift = ((pred[i] - rhs[i]) / two_pi).round();
            if shift != 0.0 {
                rhs[i] += two_pi * shift;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        sol = solve_phases_with_rhs(sys, &rhs);
    }
    sol
}

#[derive(Debug, Clone)]
pub struct NullspaceReport {
    pub dimension: usize,
    /// orthonormal basis in the full 3N coordinate layout, pinned rows zero
    pub basis: DMatrix<f64>,
    pub contains_constants: bool,
}

/// Numerical null space of the reduced system plus a check that the two
/// constant directions lie in it.
pub fn analyze_nullspace(sys: &PhaseSystem) -> Result<NullspaceReport> {
    let a = sys.reduced_matrix();
    let (dimension, basis_reduced) = numeric_nullspace(&a, NULLSPACE_TAU)?;
    let n = sys.n();
    let mut basis = DMatrix::zeros(3 * n, dimension);
    for j in 0..dimension {
        let full = sys.expand(&basis_reduced.column(j).into());
        for i in 0..3 * n {
            basis[(i, j)] = full[i];
        }
    }
    // constant directions in reduced coordinates
    let mut dirs = DMatrix::zeros(sys.unknowns(), 2);
    let mut idx = 0;
    for (i, &kept) in sys.column_mask.iter().enumerate() {
        if kept {
            if i < n {
                dirs[(idx, 0)] = 1.0;
            } else if i < 2 * n {
                dirs[(idx, 1)] = 1.0;
            } else {
                dirs[(idx, 0)] = -1.0;
                dirs[(idx, 1)] = -1.0;
            }
            idx += 1;
        }
    }
    let annihilated = max_image_norm(&a, &dirs) <= 1e-10;
    // also require the directions to project into the reported span
    let mut in_span = true;
    for j in 0..2 {
        let d: DVector<f64> = dirs.column(j).into();
        let dn = d.norm();
        if dn == 0.0 {
            continue;
        }
        let proj = &basis_reduced * (basis_reduced.transpose() * &d);
        if (&d - proj).norm() > 1e-6 * dn {
            in_span = false;
        }
    }
    Ok(NullspaceReport {
        dimension,
        basis,
        contains_constants: annihilated && in_span,
    })
}

/// `xihat = sqrt(psi) e^{j phii}`, then inverse DFT.
pub fn assemble_signals(
    ps1: &[f64],
    phi1: &[f64],
    ps2: &[f64],
    phi2: &[f64],
) -> Result<(Pulse, Pulse)> {
    let n = ps1.len();
    if phi1.len() != n || ps2.len() != n || phi2.len() != n {
        return Err(FrogError::LengthMismatch(phi1.len(), n));
    }
    let build = |ps: &[f64], phi: &[f64]| -> Pulse {
        let spec: Vec<Complex64> = ps
            .iter()
            .zip(phi)
            .map(|(&p, &f)| Complex64::from_polar(p.max(0.0).sqrt(), f))
            .collect();
        Pulse::new(idft(&spec)).expect("valid")
    };
    Ok((build(ps1, phi1), build(ps2, phi2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    /// phase sums taken from ground truth plus random row offsets
    OraclePhases,
    /// per-row alternating-projection phase retrieval
    FullGs,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub gs: GsOptions,
    pub shg_mode: bool,
    /// warn-and-continue on a violated band-limit hypothesis
    pub allow_bandlimit_violation: bool,
    pub pass_threshold: f64,
    /// per-row GS residual below which a row counts as converged
    pub row_converged_tol: f64,
    pub wrap_refine_passes: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            gs: GsOptions::default(),
            shg_mode: false,
            allow_bandlimit_violation: false,
            pass_threshold: 1e-8,
            row_converged_tol: 1e-8,
            wrap_refine_passes: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub bandlimit: BandlimitReport,
    pub per_row_residuals: Vec<f64>,
    pub rows_converged: Vec<bool>,
    pub system_residual: f64,
    pub nullspace_dimension: usize,
    pub nullspace_contains_constants: bool,
    pub aligned_residual: f64,
    pub transform: AmbiguityTransform,
    pub passed: bool,
}

/// Runs the full constructive pipeline against a known pair and reports the
/// ambiguity-aligned recovery error.
pub fn verify_uniqueness(
    x1: &Pulse,
    x2: &Pulse,
    mode: VerifyMode,
    opts: &VerifyOptions,
    seed: u64,
) -> Result<UniquenessReport> {
    if x1.len() != x2.len() {
        return Err(FrogError::LengthMismatch(x1.len(), x2.len()));
    }
    if opts.shg_mode && x1 != x2 {
        return Err(FrogError::ShgMismatch);
    }
    let n = x1.len();
    let s1 = dft_forward(x1);
    let s2 = dft_forward(x2);
    let bandlimit = check_bandlimit(&s1)?;
    if !bandlimit.satisfied && !opts.allow_bandlimit_violation {
        return Err(FrogError::BandlimitViolated {
            run: bandlimit.zero_run_length,
            required: (n - 1).div_ceil(2),
        });
    }

    let kind = if opts.shg_mode {
        NonlinearityKind::Shg
    } else {
        NonlinearityKind::BlindShg
    };
    let g = TraceGeometry::new(n, 1, kind)?;
    let trace = synthesize_trace(x1, x2, &g)?;
    let rows = rows_from_trace(&trace)?;

    let ps1 = power_spectrum(x1);
    let ps2 = power_spectrum(x2);
    let phi1_true: Vec<f64> = s1.coefficients().iter().map(|c| c.arg()).collect();
    let phi2_true: Vec<f64> = s2.coefficients().iter().map(|c| c.arg()).collect();
    let decomp = build_decomposition(&ps1, &ps2, Some((&phi1_true, &phi2_true)))?;

    let (ptilde, per_row_residuals, rows_converged) = match mode {
        VerifyMode::OraclePhases => {
            let p = decomp
                .phase_sum
                .as_ref()
                .expect("built with ground-truth phases");
            let (pt, _) = inject_row_offsets(p, seed);
            (pt, vec![0.0; n], vec![true; n])
        }
        VerifyMode::FullGs => {
            let results: Vec<Result<GsRowResult>> = (0..n)
                .into_par_iter()
                .map(|k| {
                    let spectrum: Vec<f64> = (0..n).map(|m| rows[[k, m]]).collect();
                    let magnitudes: Vec<f64> =
                        (0..n).map(|l| decomp.magnitude_product[[k, l]]).collect();
                    retrieve_row_phases_gs(&spectrum, &magnitudes, &opts.gs, seed ^ k as u64)
                })
                .collect();
            let mut pt = Array2::zeros((n, n));
            let mut residuals = Vec::with_capacity(n);
            let mut converged = Vec::with_capacity(n);
            for (k, r) in results.into_iter().enumerate() {
                let r = r?;
                for l in 0..n {
                    pt[[k, l]] = r.phases[l];
                }
                converged.push(r.residual < opts.row_converged_tol);
                residuals.push(r.residual);
            }
            (pt, residuals, converged)
        }
    };

    let sys = build_phase_system(&decomp, &ptilde)?;
    let sol = match mode {
        VerifyMode::OraclePhases => solve_phases(&sys),
        VerifyMode::FullGs => solve_phases_wrap_refined(&sys, opts.wrap_refine_passes),
    };
    let ns = analyze_nullspace(&sys)?;

    // The theorem's claim is equality modulo the system's null space (the
    // trivial/affine directions). The minimum-norm solve lands at an
    // arbitrary point of the solution set, e.g. with a fractional-shift
    // spectral ramp when the support never wraps; re-anchor within the null
    // space so the aligned residual reflects only genuine deviation.
    let p_true = decomp.phase_sum.as_ref().expect("built with truth phases");
    let mut v_true = vec![0.0; 3 * n];
    v_true[..n].copy_from_slice(&phi1_true);
    v_true[n..2 * n].copy_from_slice(&phi2_true);
    for k in 0..n {
        // circular mean of the retrieved-minus-true phase sums per row
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 0..n {
            if decomp.support[[k, l]] {
                acc += Complex64::from_polar(
                    decomp.magnitude_product[[k, l]],
                    ptilde[[k, l]] - p_true[[k, l]],
                );
            }
        }
        v_true[2 * n + k] = if acc.norm() > 0.0 { acc.arg() } else { 0.0 };
    }
    let mut v_sol = Vec::with_capacity(3 * n);
    v_sol.extend_from_slice(&sol.phi1);
    v_sol.extend_from_slice(&sol.phi2);
    v_sol.extend_from_slice(&sol.psi);
    let mask = sys.column_mask();
    let mut diff = DVector::zeros(3 * n);
    for i in 0..3 * n {
        if mask[i] {
            diff[i] = v_true[i] - v_sol[i];
        }
    }
    let correction = &ns.basis * (ns.basis.transpose() * &diff);
    let phi1_adj: Vec<f64> = (0..n).map(|i| sol.phi1[i] + correction[i]).collect();
    let phi2_adj: Vec<f64> = (0..n).map(|i| sol.phi2[i] + correction[n + i]).collect();

    let (e1, e2) = assemble_signals(&ps1, &phi1_adj, &ps2, &phi2_adj)?;
    // scoring always uses the full bivariate ambiguity group
    let (transform, aligned_residual) = align_up_to_ambiguities(&e1, &e2, x1, x2, false)?;

    Ok(UniquenessReport {
        bandlimit,
        per_row_residuals,
        rows_converged,
        system_residual: sol.residual,
        nullspace_dimension: ns.dimension,
        nullspace_contains_constants: ns.contains_constants,
        aligned_residual,
        transform,
        passed: aligned_residual < opts.pass_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_bandlimited_pulse, random_pulse};
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn spectrum(v: Vec<Complex64>) -> Spectrum {
        Spectrum::new(v).unwrap()
    }

    #[test]
    fn bandlimit_trailing_zeros() {
        let mut v = vec![Complex64::new(1.0, 0.5); 8];
        for c in v.iter_mut().skip(4) {
            *c = Complex64::new(0.0, 0.0);
        }
        let r = check_bandlimit(&spectrum(v)).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.zero_run_length, 4);
        assert_eq!(r.zero_run_start, 4);
    }

    #[test]
    fn bandlimit_three_zeros_insufficient() {
        let mut v = vec![Complex64::new(1.0, 0.0); 8];
        for c in v.iter_mut().skip(5) {
            *c = Complex64::new(0.0, 0.0);
        }
        let r = check_bandlimit(&spectrum(v)).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.zero_run_length, 3);
    }

    #[test]
    fn bandlimit_wrapping_run_n5() {
        // zeros at indices 4 and 0; N = 5 requires ceil(4/2) = 2
        let v = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let r = check_bandlimit(&spectrum(v)).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.zero_run_length, 2);
        assert_eq!(r.zero_run_start, 4);
    }

    #[test]
    fn bandlimit_all_zero_is_degenerate() {
        let v = vec![Complex64::new(0.0, 0.0); 6];
        let r = check_bandlimit(&spectrum(v)).unwrap();
        assert!(r.degenerate);
        assert!(!r.satisfied);
    }

    #[test]
    fn decomposition_n2_by_hand() {
        let ps1 = [1.0, 4.0];
        let ps2 = [9.0, 16.0];
        let d = build_decomposition(&ps1, &ps2, None).unwrap();
        let expect = [[1.5, 4.0], [3.0, 2.0]];
        for k in 0..2 {
            for l in 0..2 {
                assert_relative_eq!(d.magnitude_product[[k, l]], expect[k][l]);
            }
        }
    }

    #[test]
    fn decomposition_rejects_bad_input() {
        assert!(build_decomposition(&[1.0, -0.1], &[1.0, 1.0], None).is_err());
        assert!(matches!(
            build_decomposition(&[1.0, 1.0], &[0.0, 0.0], None),
            Err(FrogError::Degenerate(_))
        ));
    }

    #[test]
    fn bandlimited_spectrum_gives_row_zero_runs() {
        let mut r = rng(3);
        let n = 8;
        let x1 = random_bandlimited_pulse(n, n / 2, &mut r);
        let x2 = random_pulse(n, &mut r);
        let d = build_decomposition(&power_spectrum(&x1), &power_spectrum(&x2), None).unwrap();
        let required = (n - 1).div_ceil(2);
        for k in 0..n {
            let row: Vec<Complex64> = (0..n)
                .map(|l| {
                    if d.support[[k, l]] {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            let rep = check_bandlimit(&Spectrum::new(row).unwrap()).unwrap();
            assert!(rep.zero_run_length >= required, "row {k}");
        }
    }

    #[test]
    fn rows_from_trace_is_reordered_columns() {
        let mut r = rng(5);
        let n = 8;
        let x1 = random_pulse(n, &mut r);
        let x2 = random_pulse(n, &mut r);
        let g = TraceGeometry::new(n, 1, NonlinearityKind::BlindShg).unwrap();
        let t = synthesize_trace(&x1, &x2, &g).unwrap();
        let rows = rows_from_trace(&t).unwrap();
        // applying the m-reversal twice recovers the original column order
        for k in 0..n {
            for m in 0..n {
                let twice = rows[[k, (n - m) % n]];
                assert_relative_eq!(twice, t.values()[[k, m]], max_relative = 1e-12);
            }
        }
        // reject L != 1
        let g2 = TraceGeometry::new(n, 2, NonlinearityKind::BlindShg).unwrap();
        let t2 = synthesize_trace(&x1, &x2, &g2).unwrap();
        assert!(rows_from_trace(&t2).is_err());
    }

    #[test]
    fn row_spectra_match_dft_of_s_rows() {
        let mut r = rng(7);
        let n = 8;
        let x1 = random_pulse(n, &mut r);
        let x2 = random_pulse(n, &mut r);
        let s1 = dft_forward(&x1);
        let s2 = dft_forward(&x2);
        let g = TraceGeometry::new(n, 1, NonlinearityKind::BlindShg).unwrap();
        let rows = rows_from_trace(&synthesize_trace(&x1, &x2, &g).unwrap()).unwrap();
        let scale = rows.iter().copied().fold(0.0, f64::max);
        for k in 0..n {
            let s_row: Vec<Complex64> = (0..n)
                .map(|l| s1.get(k as i64 - l as i64) * s2.get(l as i64) / n as f64)
                .collect();
            let spec = dft(&s_row);
            for m in 0..n {
                assert!(
                    (spec[m].norm_sqr() - rows[[k, m]]).abs() / scale < 1e-10,
                    "k={k}, m={m}"
                );
            }
        }
    }

    #[test]
    fn gs_single_support_converges_immediately() {
        let mags = [0.0, 2.0, 0.0, 0.0];
        let spectrum = [4.0, 4.0, 4.0, 4.0];
        let r = retrieve_row_phases_gs(&spectrum, &mags, &GsOptions::default(), 1).unwrap();
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn gs_rejects_parseval_violation() {
        let mags = [1.0, 1.0, 0.0, 0.0];
        let spectrum = [2.0, 2.0, 2.0, 3.0]; // Parseval wants a sum of 8
        assert!(matches!(
            retrieve_row_phases_gs(&spectrum, &mags, &GsOptions::default(), 1),
            Err(FrogError::ParsevalMismatch(_))
        ));
    }

    #[test]
    fn gs_zero_row_returns_zero() {
        let mags = [0.0; 4];
        let spectrum = [0.0; 4];
        let r = retrieve_row_phases_gs(&spectrum, &mags, &GsOptions::default(), 1).unwrap();
        assert_eq!(r.phases, vec![0.0; 4]);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn gs_success_rate_on_oracle_rows() {
        // bandlimited support, 32 restarts: expect >= 70% of rows below 1e-8
        let mut r = rng(11);
        let n = 8;
        let mut ok = 0;
        let trials = 40;
        for t in 0..trials {
            let x1 = random_bandlimited_pulse(n, n / 2, &mut r);
            let x2 = random_pulse(n, &mut r);
            let s1 = dft_forward(&x1);
            let s2 = dft_forward(&x2);
            let k = t % n;
            let s_row: Vec<Complex64> = (0..n)
                .map(|l| s1.get(k as i64 - l as i64) * s2.get(l as i64) / n as f64)
                .collect();
            let mags: Vec<f64> = s_row.iter().map(|c| c.norm()).collect();
            let spectrum: Vec<f64> = dft(&s_row).iter().map(|c| c.norm_sqr()).collect();
            let res =
                retrieve_row_phases_gs(&spectrum, &mags, &GsOptions::default(), 1000 + t as u64)
                    .unwrap();
            if res.residual < 1e-8 {
                ok += 1;
            }
        }
        assert!(
            ok * 10 >= trials * 7,
            "only {ok}/{trials} rows converged below 1e-8"
        );
    }

    #[test]
    fn offsets_are_deterministic_and_row_constant() {
        let p = Array2::from_shape_fn((4, 4), |(k, l)| (k * 4 + l) as f64 * 0.1);
        let (a, psi_a) = inject_row_offsets(&p, 9);
        let (b, _) = inject_row_offsets(&p, 9);
        assert_eq!(a, b);
        for k in 0..4 {
            for l in 0..4 {
                assert_relative_eq!(a[[k, l]] - p[[k, l]], psi_a[k], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn system_shapes_full_support() {
        let d4 = build_decomposition(&[1.0; 4], &[1.0; 4], None).unwrap();
        let sys4 = build_phase_system(&d4, &Array2::zeros((4, 4))).unwrap();
        assert_eq!(sys4.rows(), 16);
        assert_eq!(sys4.unknowns(), 12);
        let a = sys4.reduced_matrix();
        for row in 0..a.nrows() {
            assert_eq!(a.row(row).iter().filter(|&&v| v == 1.0).count(), 3);
        }

        let d2 = build_decomposition(&[1.0, 1.0], &[1.0, 1.0], None).unwrap();
        let sys2 = build_phase_system(&d2, &Array2::zeros((2, 2))).unwrap();
        assert_eq!(sys2.rows(), 4);
        assert_eq!(sys2.unknowns(), 6);
    }

    #[test]
    fn system_counts_under_bandlimit() {
        let n = 8;
        let mut ps1 = vec![1.0; n];
        for p in ps1.iter_mut().skip(4) {
            *p = 0.0;
        }
        let ps2 = vec![1.0; n];
        let d = build_decomposition(&ps1, &ps2, None).unwrap();
        let sys = build_phase_system(&d, &Array2::zeros((n, n))).unwrap();
        let support_cells: usize = d.support.iter().filter(|&&b| b).count();
        assert_eq!(sys.rows(), support_cells);
        let phi1_unknowns = sys.column_mask()[0..n].iter().filter(|&&b| b).count();
        assert_eq!(phi1_unknowns, 4);
    }

    #[test]
    fn solve_zero_rhs_gives_zero() {
        let d = build_decomposition(&[1.0; 4], &[1.0; 4], None).unwrap();
        let sys = build_phase_system(&d, &Array2::zeros((4, 4))).unwrap();
        let sol = solve_phases(&sys);
        assert!(sol.residual < 1e-12);
        for v in sol.phi1.iter().chain(&sol.phi2).chain(&sol.psi) {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn solve_roundtrip_within_nullspace() {
        let mut r = rng(13);
        let n = 6;
        let phi1: Vec<f64> = (0..n).map(|_| r.gen_range(-0.5..0.5)).collect();
        let phi2: Vec<f64> = (0..n).map(|_| r.gen_range(-0.5..0.5)).collect();
        let psi: Vec<f64> = (0..n).map(|_| r.gen_range(-0.5..0.5)).collect();
        let d = build_decomposition(&vec![1.0; n], &vec![1.0; n], Some((&phi1, &phi2))).unwrap();
        let mut pt = d.phase_sum.clone().unwrap();
        for k in 0..n {
            for l in 0..n {
                pt[[k, l]] += psi[k];
            }
        }
        let sys = build_phase_system(&d, &pt).unwrap();
        let sol = solve_phases(&sys);
        assert!(sol.residual < 1e-10, "residual {}", sol.residual);
        // solution differs from truth only by per-block constants
        let d1: Vec<f64> = sol.phi1.iter().zip(&phi1).map(|(a, b)| a - b).collect();
        let spread = d1.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        assert!(spread.1 - spread.0 < 1e-9, "phi1 shift not constant: {d1:?}");
    }

    #[test]
    fn solve_is_stable_under_small_rhs_noise() {
        let mut r = rng(17);
        let n = 6;
        let phi1: Vec<f64> = (0..n).map(|_| r.gen_range(-0.5..0.5)).collect();
        let phi2: Vec<f64> = (0..n).map(|_| r.gen_range(-0.5..0.5)).collect();
        let d = build_decomposition(&vec![1.0; n], &vec![1.0; n], Some((&phi1, &phi2))).unwrap();
        let pt = d.phase_sum.clone().unwrap();
        let sys = build_phase_system(&d, &pt).unwrap();
        let clean = solve_phases(&sys);
        let mut noisy_sys = sys.clone();
        let noise: Vec<f64> = (0..noisy_sys.rhs.len())
            .map(|_| r.gen_range(-1e-6..1e-6))
            .collect();
        let noise_norm = noise.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (v, e) in noisy_sys.rhs.iter_mut().zip(&noise) {
            *v += e;
        }
        let noisy = solve_phases(&noisy_sys);
        assert!(noisy.residual <= noise_norm + 1e-12);
        let drift: f64 = clean
            .phi1
            .iter()
            .zip(&noisy.phi1)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(drift < 1e-4, "drift {drift}");
    }

    #[test]
    fn nullspace_full_support_dimension_two() {
        let d = build_decomposition(&[1.0; 4], &[1.0; 4], None).unwrap();
        let sys = build_phase_system(&d, &Array2::zeros((4, 4))).unwrap();
        let ns = analyze_nullspace(&sys).unwrap();
        assert_eq!(ns.dimension, 2);
        assert!(ns.contains_constants);
    }

    #[test]
    fn nullspace_bandlimited_dimension_two() {
        let mut r = rng(19);
        let n = 8;
        let mut dims = Vec::new();
        for _ in 0..20 {
            let x1 = random_bandlimited_pulse(n, n / 2, &mut r);
            let x2 = random_pulse(n, &mut r);
            let d =
                build_decomposition(&power_spectrum(&x1), &power_spectrum(&x2), None).unwrap();
            let sys = build_phase_system(&d, &Array2::zeros((n, n))).unwrap();
            let ns = analyze_nullspace(&sys).unwrap();
            dims.push(ns.dimension);
        }
        let ok = dims.iter().filter(|&&d| d == 2).count();
        assert!(ok >= 19, "dims: {dims:?}");
    }

    #[test]
    fn nullspace_degenerate_support_reported() {
        // x2hat supported on a single bin
        let n = 6;
        let ps1 = vec![1.0; n];
        let mut ps2 = vec![0.0; n];
        ps2[2] = 1.0;
        let d = build_decomposition(&ps1, &ps2, None).unwrap();
        let sys = build_phase_system(&d, &Array2::zeros((n, n))).unwrap();
        let ns = analyze_nullspace(&sys).unwrap();
        assert!(ns.dimension > 2, "dimension {}", ns.dimension);
    }

    #[test]
    fn assemble_roundtrip_and_affine_shift() {
        let mut r = rng(23);
        let n = 8;
        let x1 = random_pulse(n, &mut r);
        let x2 = random_pulse(n, &mut r);
        let ps1 = power_spectrum(&x1);
        let ps2 = power_spectrum(&x2);
        let phi1: Vec<f64> = dft_forward(&x1).coefficients().iter().map(|c| c.arg()).collect();
        let phi2: Vec<f64> = dft_forward(&x2).coefficients().iter().map(|c| c.arg()).collect();
        let (e1, e2) = assemble_signals(&ps1, &phi1, &ps2, &phi2).unwrap();
        for i in 0..n as i64 {
            assert!((e1.get(i) - x1.get(i)).norm() < 1e-12);
            assert!((e2.get(i) - x2.get(i)).norm() < 1e-12);
        }
        // a common integer-slope spectral ramp is a circular shift of both
        // signals, plus global phases
        let (c1, c2) = (1.0, 0.7);
        let phi1_aff: Vec<f64> = (0..n)
            .map(|k| phi1[k] + c1 * 2.0 * std::f64::consts::PI * k as f64 / n as f64 + c2)
            .collect();
        let phi2_aff: Vec<f64> = (0..n)
            .map(|k| phi2[k] + c1 * 2.0 * std::f64::consts::PI * k as f64 / n as f64 + c2)
            .collect();
        let (a1, a2) = assemble_signals(&ps1, &phi1_aff, &ps2, &phi2_aff).unwrap();
        let (_, residual) = align_up_to_ambiguities(&a1, &a2, &x1, &x2, false).unwrap();
        assert!(residual < 1e-10, "residual {residual}");
    }

    #[test]
    fn assemble_zero_phase_symmetric() {
        // even-symmetric real pulse has real nonnegative-symmetric spectrum
        let n = 8;
        let ps: Vec<f64> = (0..n)
            .map(|k| {
                let kk = k.min(n - k) as f64;
                (1.0 - kk / 5.0).max(0.0).powi(2)
            })
            .collect();
        let zeros = vec![0.0; n];
        let (e, _) = assemble_signals(&ps, &zeros, &ps, &zeros).unwrap();
        for i in 0..n as i64 {
            assert!(e.get(i).im.abs() < 1e-12);
            assert!((e.get(i) - e.get(-i)).norm() < 1e-12);
        }
    }

    #[test]
    fn verify_oracle_mode_blind() {
        let mut r = rng(29);
        let n = 8;
        let x1 = random_bandlimited_pulse(n, n / 2, &mut r);
        let x2 = random_pulse(n, &mut r);
        let report =
            verify_uniqueness(&x1, &x2, VerifyMode::OraclePhases, &VerifyOptions::default(), 4)
                .unwrap();
        assert!(
            report.aligned_residual < 1e-8,
            "residual {}",
            report.aligned_residual
        );
        assert!(report.passed);
        assert_eq!(report.nullspace_dimension, 2);
    }

    #[test]
    fn verify_oracle_mode_shg() {
        let mut r = rng(31);
        let n = 8;
        let x = random_bandlimited_pulse(n, n / 2, &mut r);
        let opts = VerifyOptions {
            shg_mode: true,
            ..Default::default()
        };
        let report = verify_uniqueness(&x, &x, VerifyMode::OraclePhases, &opts, 4).unwrap();
        assert!(
            report.aligned_residual < 1e-8,
            "residual {}",
            report.aligned_residual
        );
    }

    #[test]
    fn verify_flags_bandlimit_violation() {
        let mut r = rng(37);
        let n = 8;
        let x1 = random_pulse(n, &mut r); // generic: full spectrum
        let x2 = random_pulse(n, &mut r);
        assert!(matches!(
            verify_uniqueness(&x1, &x2, VerifyMode::OraclePhases, &VerifyOptions::default(), 1),
            Err(FrogError::BandlimitViolated { .. })
        ));
        let opts = VerifyOptions {
            allow_bandlimit_violation: true,
            ..Default::default()
        };
        let report = verify_uniqueness(&x1, &x2, VerifyMode::OraclePhases, &opts, 1).unwrap();
        assert!(!report.bandlimit.satisfied);
    }

    #[test]
    fn verify_full_gs_n8() {
        let mut r = rng(41);
        let n = 8;
        let mut successes = 0;
        let trials = 6;
        for t in 0..trials {
            let x1 = random_bandlimited_pulse(n, n / 2, &mut r);
            let x2 = random_pulse(n, &mut r);
            let opts = VerifyOptions {
                pass_threshold: 1e-4,
                ..Default::default()
            };
            let report =
                verify_uniqueness(&x1, &x2, VerifyMode::FullGs, &opts, 100 + t).unwrap();
            if report.passed {
                successes += 1;
            } else {
                assert!(
                    report.rows_converged.iter().any(|&c| !c),
                    "failing trial {t} has all rows converged (residual {})",
                    report.aligned_residual
                );
            }
        }
        assert!(successes >= 3, "only {successes}/{trials} succeeded");
    }
}
