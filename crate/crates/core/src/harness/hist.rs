//! Raw candidate evaluations of one window per trial, and true-root tracking
//! against the low-SNR mean law.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenes::slot_scene;
use super::{make_trial, ExperimentConfig};
use crate::detector::{evaluate_window, DetectorConfig};
use crate::error::{config, Result};
use crate::flpcore::svd::singular_values;
use crate::flpcore::{build_window_system_wrapped, low_snr_stats, pure_noise_stats};
use crate::mcsampler::{bucket_and_slot, CosetConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistRow {
    pub snr_db: f64,
    pub trial: usize,
    pub candidate: usize,
    pub is_true_root: bool,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistSummary {
    pub snr_db: f64,
    pub noise_variance: f64,
    pub samples: usize,
    /// Mean and variance of the real part over non-root candidates.
    pub false_mean_re: f64,
    pub false_var_re: f64,
    /// Null-law prediction `n / (2 d)` for that variance.
    pub predicted_var_re: f64,
    pub true_mean_re: Option<f64>,
    pub true_mean_abs: Option<f64>,
    pub false_mean_abs: f64,
    /// Best false-root magnitude minus worst true-root magnitude, averaged
    /// over trials. Positive when the true roots stay separated.
    pub mean_gap: Option<f64>,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}

/// Slots occupied at the anchor bucket of the window.
fn true_slots(cfg: &ExperimentConfig) -> Result<Vec<usize>> {
    let mask = cfg.scene.occupancy_mask();
    let mut slots = Vec::new();
    for (f, &occ) in mask.iter().enumerate() {
        if occ {
            let (b, l) = bucket_and_slot(f, &cfg.coset)?;
            if b == cfg.target_bucket && !slots.contains(&l) {
                slots.push(l);
            }
        }
    }
    slots.sort_unstable();
    Ok(slots)
}

/// Evaluates the window at `target_bucket` for every trial and SNR.
pub fn run_histogram_experiment(cfg: &ExperimentConfig) -> Result<(Vec<HistRow>, Vec<HistSummary>)> {
    cfg.validate()?;
    let truth = true_slots(cfg)?;
    let det = &cfg.detector;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &snr in &cfg.snr_db_grid {
        let per: Vec<(Vec<HistRow>, f64)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let trial = make_trial(&cfg.scene, &cfg.coset, snr, cfg.noise_power, cfg.seed, t)?;
                let (ev, _) = evaluate_window(&trial.y, cfg.target_bucket, det)?;
                let rows = ev
                    .values
                    .iter()
                    .enumerate()
                    .map(|(l, z)| HistRow {
                        snr_db: snr,
                        trial: t,
                        candidate: l,
                        is_true_root: truth.contains(&l),
                        re: z.re,
                        im: z.im,
                        abs: z.norm(),
                    })
                    .collect();
                Ok((rows, trial.noise_variance))
            })
            .collect::<Result<_>>()?;
        let noise_variance = per.first().map_or(0.0, |p| p.1);
        let snr_rows: Vec<HistRow> = per.into_iter().flat_map(|p| p.0).collect();
        let re_false: Vec<f64> = snr_rows.iter().filter(|r| !r.is_true_root).map(|r| r.re).collect();
        let abs_false: Vec<f64> = snr_rows.iter().filter(|r| !r.is_true_root).map(|r| r.abs).collect();
        let (false_mean_re, false_var_re) = mean_var(&re_false);
        let (true_mean_re, true_mean_abs, mean_gap) = if truth.is_empty() {
            (None, None, None)
        } else {
            let tr: Vec<&HistRow> = snr_rows.iter().filter(|r| r.is_true_root).collect();
            let gap = snr_rows
                .chunks(cfg.coset.alpha)
                .map(|c| {
                    let worst_true = c.iter().filter(|r| r.is_true_root).map(|r| r.abs).fold(0.0, f64::max);
                    let best_false = c
                        .iter()
                        .filter(|r| !r.is_true_root)
                        .map(|r| r.abs)
                        .fold(f64::INFINITY, f64::min);
                    best_false - worst_true
                })
                .sum::<f64>()
                / cfg.trials as f64;
            (
                Some(tr.iter().map(|r| r.re).sum::<f64>() / tr.len() as f64),
                Some(tr.iter().map(|r| r.abs).sum::<f64>() / tr.len() as f64),
                Some(gap),
            )
        };
        summaries.push(HistSummary {
            snr_db: snr,
            noise_variance,
            samples: re_false.len(),
            false_mean_re,
            false_var_re,
            predicted_var_re: pure_noise_stats(det.n_s, det.d).real_part_variance,
            true_mean_re,
            true_mean_abs,
            false_mean_abs: abs_false.iter().sum::<f64>() / abs_false.len() as f64,
            mean_gap,
        });
        rows.extend(snr_rows);
    }
    Ok((rows, summaries))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingSummary {
    pub target_window_snr: f64,
    pub windows: usize,
    /// Mean real part of the evaluation at the true root.
    pub mean_re: f64,
    /// `1 / (1 + SNR)` at the target SNR.
    pub predicted_mean: f64,
    /// Mean of `1 / (1 + SNR_w)` over the measured per-window SNRs.
    pub predicted_mean_measured: f64,
    pub mean_measured_snr: f64,
}

/// Single-root windows at a prescribed window SNR.
///
/// One flat Gaussian band fills slot `slot` across all buckets. The window SNR
/// is `s1^2 / (d sigma^2)`, where `s1` is the largest singular value of the
/// noiseless coefficient matrix. It is measured per window from the clean
/// spectrum, and the scene power is set so its expectation equals the target.
pub fn run_true_root_tracking(
    coset: &CosetConfig,
    det: &DetectorConfig,
    slot: usize,
    window_snr: f64,
    windows: usize,
    seed: u64,
) -> Result<TrackingSummary> {
    det.validate(coset)?;
    if det.n_s + 1 != coset.r {
        return config("tracking assumes r = n_s + 1");
    }
    if !(window_snr > 0.0) || windows == 0 {
        return config("window SNR and window count must be positive");
    }
    let m = coset.buckets();
    let per_trial = m / det.d;
    if per_trial == 0 {
        return config("window wider than the spectrum");
    }
    let trials = windows.div_ceil(per_trial);
    // Expected window SNR equals n_s times the global SNR for a single slot.
    let snr_db = 10.0 * (window_snr / det.n_s as f64).log10();
    let scene = slot_scene(coset, &[slot], 0, m, 1.0);
    let sums = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(f64, f64, f64, usize)> {
            let trial = make_trial(&scene, coset, snr_db, None, seed, t)?;
            let mut acc = (0.0, 0.0, 0.0, 0usize);
            for w in 0..per_trial {
                if t * per_trial + w >= windows {
                    break;
                }
                let a = w * det.d;
                let (ev, _) = evaluate_window(&trial.y, a, det)?;
                let clean = build_window_system_wrapped(&trial.clean, a, det.d, det.n_s)?;
                let s1 = singular_values(&clean.y1)[0];
                let snr_w = s1 * s1 / (det.d as f64 * trial.noise_variance);
                acc.0 += ev.values[slot].re;
                acc.1 += low_snr_stats(det.n_s, det.d, snr_w).mean;
                acc.2 += snr_w;
                acc.3 += 1;
            }
            Ok(acc)
        })
        .try_reduce(|| (0.0, 0.0, 0.0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3)))?;
    let n = sums.3 as f64;
    Ok(TrackingSummary {
        target_window_snr: window_snr,
        windows: sums.3,
        mean_re: sums.0 / n,
        predicted_mean: low_snr_stats(det.n_s, det.d, window_snr).mean,
        predicted_mean_measured: sums.1 / n,
        mean_measured_snr: sums.2 / n,
    })
}
