//! Subcommand implementations. Each command validates inputs (exit 2 on
//! failure), runs the corresponding library pipeline, and writes
//! reproducible artifacts under `--out-prefix`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde_json::json;

use froglab::uniqueness::{analyze_nullspace, build_decomposition, build_phase_system};
use froglab::{
    add_noise, aligned_residual_vs_truth, check_bandlimit, check_trace_invariance_with,
    dft_forward, gaussian_random_phase_pulse, pcgp_reconstruct, power_spectrum, ptycho_reconstruct,
    random_bandlimited_pulse, random_pulse, synthesize_trace, trace_error, verify_uniqueness,
    FrogError, InvarianceOutcome, NoiseModel, NoiseSpec, NonlinearityKind, Pulse, ReconOptions,
    TraceGeometry, TransformKind, VerifyMode, VerifyOptions,
};

use crate::io::{
    fmt_f64, kind_from_str, kind_to_str, read_signal, read_trace, validation, write_csv,
    write_report, write_signal, write_trace,
};

fn out_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(suffix);
    prefix.with_file_name(name)
}

#[derive(Debug, Args)]
pub struct RandomInput {
    /// Generate a random input signal of this length instead of reading files
    #[arg(long)]
    pub random: Option<usize>,
    /// Zero out a spectral run of length floor(N/2), satisfying the
    /// uniqueness band-limit hypothesis by construction
    #[arg(long)]
    pub bandlimit: bool,
    /// First index of the spectral zero run (default ceil(N/2))
    #[arg(long)]
    pub zero_run_start: Option<usize>,
}

impl RandomInput {
    fn draw_primary(&self, rng: &mut ChaCha12Rng) -> Result<Pulse> {
        let n = self.random.expect("checked by caller");
        if n < 2 {
            return validation(format!("--random length must be at least 2, got {n}"));
        }
        let start = self.zero_run_start.unwrap_or(n.div_ceil(2));
        if start >= n {
            return validation(format!("--zero-run-start {start} out of range 0..{n}"));
        }
        Ok(if self.bandlimit {
            random_bandlimited_pulse(n, start, rng)
        } else {
            random_pulse(n, rng)
        })
    }
}

/// Resolves the (x1, x2) pair for a given kind from files or `--random`.
fn resolve_pair(
    signal: &Option<PathBuf>,
    signal2: &Option<PathBuf>,
    random: &RandomInput,
    kind: NonlinearityKind,
    seed: u64,
) -> Result<(Pulse, Pulse)> {
    if signal.is_some() && random.random.is_some() {
        return validation("--signal and --random are mutually exclusive");
    }
    if signal.is_none() && random.random.is_none() {
        return validation("provide --signal or --random");
    }
    if !kind.is_bivariate() && signal2.is_some() {
        return validation(format!(
            "kind {} uses a single signal; --signal2 is not allowed",
            kind_to_str(kind)
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let x1 = match signal {
        Some(path) => read_signal(path)?,
        None => random.draw_primary(&mut rng)?,
    };
    let x2 = if kind.is_bivariate() {
        match signal2 {
            Some(path) => read_signal(path)?,
            None => {
                if signal.is_some() {
                    return validation(format!(
                        "kind {} requires --signal2 alongside --signal",
                        kind_to_str(kind)
                    ));
                }
                random_pulse(x1.len(), &mut rng)
            }
        }
    } else {
        x1.clone()
    };
    if x1.len() != x2.len() {
        return validation(format!(
            "signal lengths differ: {} vs {}",
            x1.len(),
            x2.len()
        ));
    }
    Ok((x1, x2))
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Input SignalFile (JSON)
    #[arg(long)]
    pub signal: Option<PathBuf>,
    /// Second SignalFile for bivariate kinds (blind-shg, crab)
    #[arg(long)]
    pub signal2: Option<PathBuf>,
    #[command(flatten)]
    pub random: RandomInput,
    /// Gate nonlinearity: blind-shg, shg, thg, pg, crab
    #[arg(long, default_value = "shg")]
    pub kind: String,
    /// Delay stride L
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    /// Noise model: none, gaussian, poisson
    #[arg(long, default_value = "none")]
    pub noise_model: String,
    /// Gaussian: std relative to peak; Poisson: expected peak photon count
    #[arg(long, default_value_t = 0.0)]
    pub noise_level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

pub fn run_synth(args: &SynthArgs) -> Result<()> {
    let kind = kind_from_str(&args.kind)?;
    let (x1, x2) = resolve_pair(&args.signal, &args.signal2, &args.random, kind, args.seed)?;
    let geometry = TraceGeometry::new(x1.len(), args.l, kind)
        .map_err(|e| anyhow::anyhow!(crate::io::ValidationError(e.to_string())))?;

    let noise_model = match args.noise_model.as_str() {
        "none" => NoiseModel::None,
        "gaussian" => NoiseModel::AdditiveGaussian,
        "poisson" => NoiseModel::Poisson,
        other => return validation(format!("unknown noise model '{other}'")),
    };
    if args.noise_level < 0.0 {
        return validation(format!(
            "--noise-level must be nonnegative, got {}",
            args.noise_level
        ));
    }
    let noise_desc = match noise_model {
        NoiseModel::None => "none".to_string(),
        NoiseModel::AdditiveGaussian => format!("gaussian:{}", args.noise_level),
        NoiseModel::Poisson => format!("poisson:{}", args.noise_level),
    };

    let clean = synthesize_trace(&x1, &x2, &geometry)?;
    let trace = add_noise(
        &clean,
        &NoiseSpec {
            model: noise_model,
            level: args.noise_level,
            seed: args.seed,
        },
    )?;

    let trace_path = out_path(&args.out_prefix, "_trace.csv");
    write_trace(&trace_path, &trace, args.seed, &noise_desc)?;

    let ps1 = power_spectrum(&x1);
    let spectrum_rows: Vec<Vec<f64>> = ps1
        .iter()
        .enumerate()
        .map(|(k, &p)| vec![k as f64, p])
        .collect();
    write_csv(&out_path(&args.out_prefix, "_spectrum1.csv"), "k,power", &spectrum_rows)?;
    if kind.is_bivariate() {
        let ps2 = power_spectrum(&x2);
        let rows: Vec<Vec<f64>> = ps2
            .iter()
            .enumerate()
            .map(|(k, &p)| vec![k as f64, p])
            .collect();
        write_csv(&out_path(&args.out_prefix, "_spectrum2.csv"), "k,power", &rows)?;
    }
    if args.random.random.is_some() {
        write_signal(
            &out_path(&args.out_prefix, "_signal1.json"),
            &x1,
            Some("x1".into()),
        )?;
        if kind.is_bivariate() {
            write_signal(
                &out_path(&args.out_prefix, "_signal2.json"),
                &x2,
                Some("x2".into()),
            )?;
        }
    }

    let bandlimit = check_bandlimit(&dft_forward(&x1))?;
    let report = json!({
        "command": "synth",
        "inputs": {
            "signal": args.signal.as_ref().map(|p| p.display().to_string()),
            "signal2": args.signal2.as_ref().map(|p| p.display().to_string()),
            "random": args.random.random,
            "bandlimit": args.random.bandlimit,
        },
        "options": {
            "kind": kind_to_str(kind),
            "l": args.l,
            "noise": noise_desc,
        },
        "metrics": {
            "trace_max": trace.max_value(),
            "trace_total": trace.total(),
            "spectrum_zero_run": bandlimit.zero_run_length,
            "bandlimit_satisfied": bandlimit.satisfied,
        },
        "seed": args.seed,
    });
    write_report(&out_path(&args.out_prefix, "_report.json"), &report)?;
    println!(
        "wrote {} ({}x{}, kind {})",
        trace_path.display(),
        geometry.n(),
        geometry.m_count(),
        kind_to_str(kind)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// recon
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct ReconArgs {
    /// TraceFile CSV (with JSON sidecar next to it)
    #[arg(long)]
    pub trace: PathBuf,
    /// Algorithm: pcgp or ptycho
    #[arg(long, default_value = "pcgp")]
    pub algo: String,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    /// Ptychographic step size
    #[arg(long, default_value_t = 0.2)]
    pub beta: f64,
    /// Trace-error stopping threshold
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ground-truth SignalFile for an aligned residual
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Second ground-truth signal (blind kinds)
    #[arg(long)]
    pub truth2: Option<PathBuf>,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

pub fn run_recon(args: &ReconArgs) -> Result<()> {
    let trace = read_trace(&args.trace)?;
    let g = *trace.geometry();
    let shg_mode = match g.kind() {
        NonlinearityKind::Shg => true,
        NonlinearityKind::BlindShg => false,
        other => {
            return validation(format!(
                "reconstruction supports shg and blind-shg traces, got {}",
                kind_to_str(other)
            ))
        }
    };

    let opts = ReconOptions {
        max_iter: args.max_iter,
        tol: args.tol,
        restarts: args.restarts,
        seed: args.seed,
        beta: args.beta,
        ..Default::default()
    };
    let report_data = match args.algo.as_str() {
        "pcgp" => {
            if g.l() != 1 {
                return validation(format!(
                    "pcgp requires unit delay stride (L = 1); this trace has L = {}",
                    g.l()
                ));
            }
            pcgp_reconstruct(&trace, &opts, shg_mode)?
        }
        "ptycho" => ptycho_reconstruct(&trace, &opts, shg_mode)?,
        other => return validation(format!("unknown algorithm '{other}'")),
    };

    let aligned_residual = match (&args.truth, &args.truth2) {
        (None, None) => None,
        (None, Some(_)) => return validation("--truth2 requires --truth"),
        (Some(t1), t2) => {
            let truth1 = read_signal(t1)?;
            let truth2 = match t2 {
                Some(p) => read_signal(p)?,
                None => {
                    if !shg_mode {
                        return validation("blind trace needs --truth2 alongside --truth");
                    }
                    truth1.clone()
                }
            };
            Some(aligned_residual_vs_truth(
                &report_data.x1,
                &report_data.x2,
                &truth1,
                &truth2,
                shg_mode,
            )?)
        }
    };

    write_signal(
        &out_path(&args.out_prefix, "_estimate1.json"),
        &report_data.x1,
        Some("estimate x1".into()),
    )?;
    write_signal(
        &out_path(&args.out_prefix, "_estimate2.json"),
        &report_data.x2,
        Some("estimate x2".into()),
    )?;
    let trajectory_rows: Vec<Vec<f64>> = report_data
        .trajectory
        .iter()
        .enumerate()
        .map(|(i, &g)| vec![i as f64, g])
        .collect();
    write_csv(
        &out_path(&args.out_prefix, "_trajectory.csv"),
        "iteration,trace_error",
        &trajectory_rows,
    )?;
    let recon_trace = synthesize_trace(&report_data.x1, &report_data.x2, &g)?;
    write_trace(
        &out_path(&args.out_prefix, "_recon_trace.csv"),
        &recon_trace,
        args.seed,
        "none",
    )?;
    let (g_check, _) = trace_error(&recon_trace, &trace)?;

    let report = json!({
        "command": "recon",
        "inputs": {
            "trace": args.trace.display().to_string(),
            "truth": args.truth.as_ref().map(|p| p.display().to_string()),
        },
        "options": {
            "algo": args.algo,
            "max_iter": args.max_iter,
            "restarts": args.restarts,
            "beta": args.beta,
            "tol": args.tol,
        },
        "metrics": {
            "trace_error": g_check,
            "iterations": report_data.iterations,
            "converged": report_data.converged,
            "best_restart": report_data.best_restart,
            "aligned_residual": aligned_residual,
        },
        "seed": args.seed,
    });
    write_report(&out_path(&args.out_prefix, "_report.json"), &report)?;
    println!(
        "G = {:.3e} after {} iterations (converged: {})",
        report_data.final_error, report_data.iterations, report_data.converged
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub signal: Option<PathBuf>,
    #[arg(long)]
    pub signal2: Option<PathBuf>,
    #[command(flatten)]
    pub random: RandomInput,
    /// Pipeline mode: oracle (ground-truth phase sums) or gs (per-row
    /// alternating-projection retrieval)
    #[arg(long, default_value = "oracle")]
    pub mode: String,
    /// SHG mode: x2 = x1, single-signal uniqueness
    #[arg(long)]
    pub shg: bool,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fail (exit 2) on a violated band-limit hypothesis instead of
    /// recording it per trial
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

pub fn run_verify(args: &VerifyArgs) -> Result<()> {
    let mode = match args.mode.as_str() {
        "oracle" => VerifyMode::OraclePhases,
        "gs" => VerifyMode::FullGs,
        other => return validation(format!("unknown mode '{other}'")),
    };
    if args.trials == 0 {
        return validation("--trials must be at least 1");
    }
    let kind = if args.shg {
        NonlinearityKind::Shg
    } else {
        NonlinearityKind::BlindShg
    };
    let fixed = if args.signal.is_some() {
        Some(resolve_pair(
            &args.signal,
            &args.signal2,
            &args.random,
            kind,
            args.seed,
        )?)
    } else if args.random.random.is_none() {
        return validation("provide --signal or --random");
    } else {
        None
    };

    let opts = VerifyOptions {
        shg_mode: args.shg,
        allow_bandlimit_violation: !args.strict,
        pass_threshold: if mode == VerifyMode::OraclePhases {
            1e-8
        } else {
            1e-4
        },
        ..Default::default()
    };

    struct Trial {
        passed: bool,
        aligned_residual: f64,
        nullspace_dimension: usize,
        bandlimit_satisfied: bool,
        rows: Vec<(f64, bool)>,
    }
    let results: Vec<Result<Trial>> = (0..args.trials)
        .into_par_iter()
        .map(|t| {
            let (x1, x2) = match &fixed {
                Some(pair) => pair.clone(),
                None => {
                    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
                    rng.set_stream(t as u64 + 1);
                    let x1 = args.random.draw_primary(&mut rng)?;
                    let x2 = if args.shg {
                        x1.clone()
                    } else {
                        random_pulse(x1.len(), &mut rng)
                    };
                    (x1, x2)
                }
            };
            let report =
                verify_uniqueness(&x1, &x2, mode, &opts, args.seed.wrapping_add(t as u64))?;
            Ok(Trial {
                passed: report.passed,
                aligned_residual: report.aligned_residual,
                nullspace_dimension: report.nullspace_dimension,
                bandlimit_satisfied: report.bandlimit.satisfied,
                rows: report
                    .per_row_residuals
                    .iter()
                    .zip(&report.rows_converged)
                    .map(|(&r, &c)| (r, c))
                    .collect(),
            })
        })
        .collect();

    let mut trials = Vec::with_capacity(args.trials);
    for r in results {
        match r {
            Ok(t) => trials.push(t),
            Err(e) => {
                if matches!(
                    e.downcast_ref::<FrogError>(),
                    Some(FrogError::BandlimitViolated { .. })
                ) {
                    return validation(format!("{e} (rerun without --strict to record it)"));
                }
                return Err(e);
            }
        }
    }

    let pass_count = trials.iter().filter(|t| t.passed).count();
    let pass_rate = pass_count as f64 / trials.len() as f64;
    let mut dim_histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for t in &trials {
        *dim_histogram.entry(t.nullspace_dimension).or_default() += 1;
    }

    let residual_rows: Vec<Vec<f64>> = trials
        .iter()
        .enumerate()
        .map(|(i, t)| vec![i as f64, t.aligned_residual])
        .collect();
    write_csv(
        &out_path(&args.out_prefix, "_residuals.csv"),
        "trial,aligned_residual",
        &residual_rows,
    )?;
    let dim_rows: Vec<Vec<f64>> = dim_histogram
        .iter()
        .map(|(&d, &c)| vec![d as f64, c as f64])
        .collect();
    write_csv(
        &out_path(&args.out_prefix, "_nullspace_dims.csv"),
        "dimension,count",
        &dim_rows,
    )?;
    if args.trials == 1 && mode == VerifyMode::FullGs {
        let rows: Vec<Vec<f64>> = trials[0]
            .rows
            .iter()
            .enumerate()
            .map(|(k, &(r, c))| vec![k as f64, r, if c { 1.0 } else { 0.0 }])
            .collect();
        write_csv(
            &out_path(&args.out_prefix, "_rows.csv"),
            "k,residual,converged",
            &rows,
        )?;
    }

    let report = json!({
        "command": "verify",
        "inputs": {
            "signal": args.signal.as_ref().map(|p| p.display().to_string()),
            "signal2": args.signal2.as_ref().map(|p| p.display().to_string()),
            "random": args.random.random,
            "bandlimit": args.random.bandlimit,
        },
        "options": {
            "mode": args.mode,
            "shg": args.shg,
            "trials": args.trials,
            "strict": args.strict,
            "pass_threshold": opts.pass_threshold,
        },
        "metrics": {
            "pass_rate": pass_rate,
            "pass_count": pass_count,
            "nullspace_dimension_histogram": dim_histogram
                .iter()
                .map(|(d, c)| (d.to_string(), c))
                .collect::<BTreeMap<_, _>>(),
            "bandlimit_violations": trials.iter().filter(|t| !t.bandlimit_satisfied).count(),
            "max_aligned_residual": trials
                .iter()
                .map(|t| t.aligned_residual)
                .fold(0.0f64, f64::max),
        },
        "seed": args.seed,
    });
    write_report(&out_path(&args.out_prefix, "_report.json"), &report)?;
    println!(
        "pass rate {pass_count}/{} (threshold {:.1e})",
        trials.len(),
        opts.pass_threshold
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// ambiguity
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct AmbiguityArgs {
    #[arg(long)]
    pub signal: Option<PathBuf>,
    #[arg(long)]
    pub signal2: Option<PathBuf>,
    #[command(flatten)]
    pub random: RandomInput,
    #[arg(long, default_value = "blind-shg")]
    pub kind: String,
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Negative control: shift only x1, which must break invariance
    #[arg(long, hide = true)]
    pub corrupt: bool,
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

fn transform_label(kind: TransformKind) -> &'static str {
    match kind {
        TransformKind::GlobalPhase => "global-phase",
        TransformKind::Shift => "shift",
        TransformKind::ConjugateReflect => "conjugate-reflect",
        TransformKind::Modulation => "modulation",
    }
}

pub fn run_ambiguity(args: &AmbiguityArgs) -> Result<()> {
    let kind = kind_from_str(&args.kind)?;
    let (x1, x2) = resolve_pair(&args.signal, &args.signal2, &args.random, kind, args.seed)?;
    let g = TraceGeometry::new(x1.len(), args.l, kind)
        .map_err(|e| anyhow::anyhow!(crate::io::ValidationError(e.to_string())))?;
    let report = check_trace_invariance_with(&x1, &x2, &g, args.seed, args.corrupt)?;

    let mut items = Vec::new();
    for item in &report.items {
        let label = transform_label(item.kind);
        match &item.outcome {
            InvarianceOutcome::Pass { deviation } => {
                println!("{label}: PASS (max deviation {})", fmt_f64(*deviation));
                items.push(json!({"transform": label, "outcome": "pass", "deviation": deviation}));
            }
            InvarianceOutcome::Fail { deviation } => {
                println!("{label}: FAIL (max deviation {})", fmt_f64(*deviation));
                items.push(json!({"transform": label, "outcome": "fail", "deviation": deviation}));
            }
            InvarianceOutcome::Skipped { reason } => {
                println!("{label}: SKIP ({reason})");
                items.push(json!({"transform": label, "outcome": "skipped", "reason": reason}));
            }
        }
    }
    println!("overall: {}", if report.passed { "PASS" } else { "FAIL" });

    if let Some(prefix) = &args.out_prefix {
        let doc = json!({
            "command": "ambiguity",
            "inputs": {
                "signal": args.signal.as_ref().map(|p| p.display().to_string()),
                "signal2": args.signal2.as_ref().map(|p| p.display().to_string()),
                "random": args.random.random,
            },
            "options": { "kind": kind_to_str(kind), "l": args.l },
            "metrics": { "passed": report.passed, "items": items },
            "seed": args.seed,
        });
        write_report(&out_path(prefix, "_report.json"), &doc)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// nullspace
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct NullspaceArgs {
    /// Signal length for synthetic supports
    #[arg(long)]
    pub n: Option<usize>,
    /// Support model: full, bandlimit, or from-signal
    #[arg(long, default_value = "full")]
    pub support: String,
    /// SignalFile for --support from-signal
    #[arg(long)]
    pub signal: Option<PathBuf>,
    #[arg(long)]
    pub signal2: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

pub fn run_nullspace(args: &NullspaceArgs) -> Result<()> {
    if args.trials == 0 {
        return validation("--trials must be at least 1");
    }
    let spectra = |trial: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
        rng.set_stream(trial as u64 + 1);
        match args.support.as_str() {
            "full" => {
                let n = args
                    .n
                    .ok_or_else(|| anyhow::anyhow!(crate::io::ValidationError(
                        "--support full requires --n".into()
                    )))?;
                // strictly positive spectra keep every cell supported
                let ps1 = power_spectrum(&gaussian_random_phase_pulse(n, &mut rng))
                    .iter()
                    .map(|&p| p + 1.0)
                    .collect();
                let ps2 = power_spectrum(&gaussian_random_phase_pulse(n, &mut rng))
                    .iter()
                    .map(|&p| p + 1.0)
                    .collect();
                Ok((ps1, ps2))
            }
            "bandlimit" => {
                let n = args
                    .n
                    .ok_or_else(|| anyhow::anyhow!(crate::io::ValidationError(
                        "--support bandlimit requires --n".into()
                    )))?;
                let x1 = random_bandlimited_pulse(n, n.div_ceil(2), &mut rng);
                let x2 = random_pulse(n, &mut rng);
                Ok((power_spectrum(&x1), power_spectrum(&x2)))
            }
            "from-signal" => {
                let path = args.signal.as_ref().ok_or_else(|| {
                    anyhow::anyhow!(crate::io::ValidationError(
                        "--support from-signal requires --signal".into()
                    ))
                })?;
                let x1 = read_signal(path)?;
                let x2 = match &args.signal2 {
                    Some(p) => read_signal(p)?,
                    None => x1.clone(),
                };
                Ok((power_spectrum(&x1), power_spectrum(&x2)))
            }
            other => validation(format!("unknown support model '{other}'")),
        }
    };

    let mut dims = Vec::new();
    let mut constants = Vec::new();
    let mut shape = String::new();
    for t in 0..args.trials {
        let (ps1, ps2) = spectra(t)?;
        let decomp = build_decomposition(&ps1, &ps2, None)?;
        let zeros = ndarray::Array2::zeros((ps1.len(), ps1.len()));
        let sys = build_phase_system(&decomp, &zeros)?;
        let ns = analyze_nullspace(&sys)?;
        shape = format!("{}x{}", sys.rows(), sys.unknowns());
        dims.push(ns.dimension);
        constants.push(ns.contains_constants);
    }

    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in &dims {
        *histogram.entry(d).or_default() += 1;
    }
    let dim_rows: Vec<Vec<f64>> = histogram
        .iter()
        .map(|(&d, &c)| vec![d as f64, c as f64])
        .collect();
    write_csv(
        &out_path(&args.out_prefix, "_dims.csv"),
        "dimension,count",
        &dim_rows,
    )?;

    let report = json!({
        "command": "nullspace",
        "inputs": {
            "n": args.n,
            "signal": args.signal.as_ref().map(|p| p.display().to_string()),
        },
        "options": { "support": args.support, "trials": args.trials },
        "metrics": {
            "system_shape": shape,
            "dimensions": dims,
            "contains_constants": constants.iter().all(|&c| c),
            "dimension_histogram": histogram
                .iter()
                .map(|(d, c)| (d.to_string(), c))
                .collect::<BTreeMap<_, _>>(),
        },
        "seed": args.seed,
    });
    write_report(&out_path(&args.out_prefix, "_report.json"), &report)?;
    println!("system {shape}; dimensions {dims:?}");
    Ok(())
}
