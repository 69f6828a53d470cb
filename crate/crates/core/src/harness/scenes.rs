//! Desk-scale scenes: every frequency of the reference wideband setup divided
//! by 1000, so `f_nyq = 100 kHz` and all ratios are preserved.

use crate::detector::DetectorConfig;
use crate::mcsampler::CosetConfig;
use crate::siggen::{Modulation, MultibandSpec, SubbandSpec};

pub const DESK_F_NYQ_HZ: f64 = 100_000.0;
pub const DESK_ALPHA: usize = 10;
pub const DESK_COSETS: usize = 4;
pub const DESK_MAX_SUBBANDS: usize = 3;

pub fn desk_coset(n_samples: usize) -> CosetConfig {
    CosetConfig::new(DESK_ALPHA, DESK_COSETS, 1, n_samples).expect("desk coset configuration")
}

fn desk(subbands: Vec<SubbandSpec>, n_samples: usize) -> MultibandSpec {
    MultibandSpec {
        subbands,
        f_nyq_hz: DESK_F_NYQ_HZ,
        n_samples,
        max_subbands: DESK_MAX_SUBBANDS,
        b_max_hz: DESK_F_NYQ_HZ / DESK_ALPHA as f64,
    }
}

fn qpsk_bands(carriers: &[f64], bandwidth: f64, n_samples: usize) -> MultibandSpec {
    desk(
        carriers
            .iter()
            .map(|&c| SubbandSpec::new(c, bandwidth, Modulation::QPSK, 1.0))
            .collect(),
        n_samples,
    )
}

/// Three 3 kHz QPSK bands at 32.5, 42.5 and 72.5 kHz.
pub fn roc_scene(n_samples: usize) -> MultibandSpec {
    qpsk_bands(&[32_500.0, 42_500.0, 72_500.0], 3_000.0, n_samples)
}

/// Three 2 kHz QPSK bands at 21.5, 42.0 and 64.0 kHz.
pub fn estimation_scene(n_samples: usize) -> MultibandSpec {
    qpsk_bands(&[21_500.0, 42_000.0, 64_000.0], 2_000.0, n_samples)
}

/// Three 3 kHz QPSK bands at 23, 33 and 43 kHz, all folding onto the same
/// buckets around 3 kHz.
pub fn histogram_scene(n_samples: usize) -> MultibandSpec {
    qpsk_bands(&[23_000.0, 33_000.0, 43_000.0], 3_000.0, n_samples)
}

/// Five 1 kHz QPSK bands at 12, 32.5, 44, 54 and 74 kHz. Buckets around
/// 2.25 kHz hold two roots one candidate apart; those around 4 kHz hold three.
pub fn profile_scene(n_samples: usize) -> MultibandSpec {
    let mut spec = qpsk_bands(&[12_000.0, 32_500.0, 44_000.0, 54_000.0, 74_000.0], 1_000.0, n_samples);
    spec.max_subbands = DESK_MAX_SUBBANDS;
    spec
}

/// Empty desk scene (pure noise experiments).
pub fn empty_scene(n_samples: usize) -> MultibandSpec {
    desk(Vec::new(), n_samples)
}

/// Flat Gaussian bands occupying buckets `[b0, b1)` in each of `slots`.
pub fn slot_scene(coset: &CosetConfig, slots: &[usize], b0: usize, b1: usize, power: f64) -> MultibandSpec {
    let m = coset.buckets();
    let bin = DESK_F_NYQ_HZ / coset.n_samples as f64;
    let mut subbands: Vec<SubbandSpec> = slots
        .iter()
        .map(|&l| {
            let (lo, hi) = ((b0 + l * m) as f64, (b1 + l * m) as f64);
            SubbandSpec::new((lo + hi) / 2.0 * bin, (hi - lo) * bin, Modulation::FlatComplexGaussian, power)
        })
        .collect();
    subbands.sort_by(|a, b| a.carrier_hz.total_cmp(&b.carrier_hz));
    let mut spec = desk(subbands, coset.n_samples);
    spec.b_max_hz = DESK_F_NYQ_HZ;
    spec
}

/// Detector defaults for desk experiments: `p_f = 0.01`, `N_s = 3`.
pub fn desk_detector(d: usize) -> DetectorConfig {
    DetectorConfig::new(0.01, d, DESK_MAX_SUBBANDS)
}

/// Detector used for band estimation: overlapping windows, refit filter and
/// edge refinement on.
pub fn estimation_detector() -> DetectorConfig {
    let mut det = desk_detector(1000);
    det.stride = 10;
    det.worst_case_filter = true;
    det.refine_edges = true;
    det
}
