//! Carrier and bandwidth estimation against the scene ground truth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{make_trial, ExperimentConfig};
use crate::detector::detect_support;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRow {
    pub snr_db: f64,
    pub trial: usize,
    pub band: usize,
    pub n_detected: usize,
    pub true_carrier_hz: f64,
    pub true_bandwidth_hz: f64,
    /// Estimated band whose carrier is closest to the true one, if any.
    pub est_carrier_hz: Option<f64>,
    pub est_bandwidth_hz: Option<f64>,
    pub carrier_error_hz: Option<f64>,
    pub bandwidth_error_rel: Option<f64>,
}

/// Runs detection on every trial and matches each true band to the nearest
/// estimate.
pub fn run_estimation(cfg: &ExperimentConfig) -> Result<Vec<EstimationRow>> {
    cfg.validate()?;
    let bin = cfg.scene.bin_hz();
    let truth: Vec<(f64, f64)> = cfg
        .scene
        .occupied_intervals()
        .into_iter()
        .map(|(lo, hi)| ((lo + hi) as f64 / 2.0 * bin, (hi - lo) as f64 * bin))
        .collect();
    let mut rows = Vec::new();
    for &snr in &cfg.snr_db_grid {
        let per: Vec<Vec<EstimationRow>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let trial = make_trial(&cfg.scene, &cfg.coset, snr, cfg.noise_power, cfg.seed, t)?;
                let (_, support) = detect_support(&trial.y, &cfg.detector, bin)?;
                Ok(truth
                    .iter()
                    .enumerate()
                    .map(|(k, &(fc, bw))| {
                        let est = support
                            .bands
                            .iter()
                            .min_by(|a, b| (a.carrier_hz - fc).abs().total_cmp(&(b.carrier_hz - fc).abs()));
                        EstimationRow {
                            snr_db: snr,
                            trial: t,
                            band: k,
                            n_detected: support.n_detected,
                            true_carrier_hz: fc,
                            true_bandwidth_hz: bw,
                            est_carrier_hz: est.map(|b| b.carrier_hz),
                            est_bandwidth_hz: est.map(|b| b.bandwidth_hz),
                            carrier_error_hz: est.map(|b| (b.carrier_hz - fc).abs()),
                            bandwidth_error_rel: est.map(|b| (b.bandwidth_hz - bw).abs() / bw),
                        }
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        rows.extend(per.into_iter().flatten());
    }
    Ok(rows)
}
