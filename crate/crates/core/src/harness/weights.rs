//! Average candidate magnitudes for one, two and three colliding frequencies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenes::slot_scene;
use super::{make_trial, ExperimentConfig};
use crate::detector::evaluate_window;
use crate::error::Result;

/// Root geometries of the profile: one root, two roots one slot apart, three
/// consecutive roots.
pub const PROFILE_GEOMETRIES: [&[usize]; 3] = [&[3], &[2, 4], &[2, 3, 4]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub snr_db: f64,
    pub n_i: usize,
    pub true_slots: Vec<usize>,
    pub mean_magnitudes: Vec<f64>,
    /// Every true slot averages below every other slot.
    pub true_slots_lowest: bool,
    /// Largest true average divided by smallest false average.
    pub separation_ratio: f64,
}

/// Uses `cfg.coset`, `cfg.detector`, `cfg.trials`, `cfg.seed`, the SNR grid and
/// `target_bucket`. The scene is replaced by flat bands filling the window in
/// each geometry.
pub fn run_weight_profile(cfg: &ExperimentConfig) -> Result<Vec<WeightProfile>> {
    cfg.validate()?;
    let det = &cfg.detector;
    let (b0, alpha) = (cfg.target_bucket, cfg.coset.alpha);
    let b1 = (b0 + det.d).min(cfg.coset.buckets());
    let mut out = Vec::new();
    for &snr in &cfg.snr_db_grid {
        for slots in PROFILE_GEOMETRIES {
            let scene = slot_scene(&cfg.coset, slots, b0, b1, 1.0);
            let sums = (0..cfg.trials)
                .into_par_iter()
                .map(|t| -> Result<Vec<f64>> {
                    let trial = make_trial(&scene, &cfg.coset, snr, None, cfg.seed, t)?;
                    Ok(evaluate_window(&trial.y, b0, det)?.0.magnitudes)
                })
                .try_reduce(
                    || vec![0.0; alpha],
                    |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
                )?;
            let mean: Vec<f64> = sums.iter().map(|s| s / cfg.trials as f64).collect();
            let worst_true = slots.iter().map(|&l| mean[l]).fold(0.0, f64::max);
            let best_false = (0..alpha)
                .filter(|l| !slots.contains(l))
                .map(|l| mean[l])
                .fold(f64::INFINITY, f64::min);
            out.push(WeightProfile {
                snr_db: snr,
                n_i: slots.len(),
                true_slots: slots.to_vec(),
                mean_magnitudes: mean,
                true_slots_lowest: worst_true < best_false,
                separation_ratio: worst_true / best_false,
            });
        }
    }
    Ok(out)
}
