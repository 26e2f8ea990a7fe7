//! Frequency-resolved optical gating (FROG) toolbox: trace synthesis for
//! five gate nonlinearities, the trivial-ambiguity group with invariance
//! checks and exhaustive alignment, a constructive uniqueness-verification
//! pipeline (spectral reduction, per-row phase retrieval, linear phase
//! solve, null-space analysis), and practical PCGP / ptychographic
//! reconstruction engines.

pub mod ambiguity;
pub mod dft;
pub mod error;
pub mod forward;
pub mod gen;
pub mod oracle;
pub mod recon;
pub mod types;
pub mod uniqueness;

pub use ambiguity::{
    align_single_fast, align_up_to_ambiguities, apply_transform, check_trace_invariance,
    check_trace_invariance_with, AmbiguityTransform, InvarianceItem, InvarianceOutcome,
    InvarianceReport, TransformKind,
};
pub use dft::{circular_shift, dft, dft_forward, dft_inverse, idft};
pub use error::{FrogError, Result};
pub use forward::{
    add_noise, gate_product, power_spectrum, synthesize_trace, synthesize_trace_spectral,
    NoiseModel, NoiseSpec,
};
pub use gen::{gaussian_random_phase_pulse, random_bandlimited_pulse, random_pulse};
pub use recon::{
    aligned_residual_vs_truth, pcgp_reconstruct, ptycho_reconstruct, trace_error, Init,
    ReconOptions, ReconReport,
};
pub use types::{
    trace_relative_deviation, FrogTrace, NonlinearityKind, Pulse, Spectrum, TraceGeometry,
};
pub use uniqueness::{
    check_bandlimit, verify_uniqueness, BandlimitReport, GsOptions, NullspaceReport,
    UniquenessReport, VerifyMode, VerifyOptions,
};
