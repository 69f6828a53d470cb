//! Frequency locator polynomials on aliased spectrum windows.
//!
//! For a bucket `i` whose aliased content comes from the slot set `T`, the
//! polynomial `G(z) = prod_{l in T} (1 - z / z_l)` with candidates
//! `z_l = exp(j 2 pi (i + l M) c / N)` annihilates the phase-aligned coset
//! values. Stacking `d` neighbouring buckets gives an overdetermined linear
//! system for the coefficients. [`system`] builds it, [`solve`] holds the
//! LS/TLS solvers, [`candidates`] evaluates the fitted polynomial on the
//! `alpha` candidate roots, and [`stats`] has the null and low-SNR laws of
//! those evaluations.

pub mod candidates;
pub mod solve;
pub mod stats;
pub mod svd;
pub mod system;

pub use candidates::{
    candidate_root, candidate_roots, evaluate_candidates, evaluate_polynomial, exact_flp, select_smallest,
    CandidateEvaluation,
};
pub use solve::{ls_residual, solve, solve_ls, solve_tls, tls_residual, FlpCoefficients, SolverMethod};
pub use stats::{
    detection_threshold, low_snr_stats, normal_cdf, predicted_pd, pure_noise_stats, q_function,
    q_inv, LowSnrStats, NoiseStats, ThresholdMode,
};
pub use system::{aligned_rows, build_window_system, build_window_system_wrapped, WindowSystem};

use num_complex::Complex64;
use std::f64::consts::PI;

/// `exp(j 2 pi num / den)` with `num` reduced modulo `den` first, which keeps
/// the angle accurate for large integer arguments.
#[inline]
pub(crate) fn unit_phase(num: i128, den: usize) -> Complex64 {
    let r = num.rem_euclid(den as i128) as f64 / den as f64;
    Complex64::from_polar(1.0, 2.0 * PI * r)
}
