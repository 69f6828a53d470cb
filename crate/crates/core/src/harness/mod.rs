//! Monte Carlo experiments and the energy detection baseline.
//!
//! Every experiment is a pure function of its [`ExperimentConfig`]. Trial `t`
//! draws its signal and noise from sub-seeds of `(seed, t)`. Trials run on the
//! rayon pool, and only counts and sums are aggregated, so results do not
//! depend on scheduling.

pub mod ed;
pub mod estimate;
pub mod hist;
pub mod manifest;
pub mod roc;
pub mod scenes;
pub mod weights;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};
use std::path::PathBuf;

use crate::detector::DetectorConfig;
use crate::error::{config, Result};
use crate::mcsampler::{aliased_spectrum, AliasedSpectrumMatrix, CosetConfig};
use crate::rng::sub_seed;
use crate::siggen::{add_awgn, noise_series, synthesize_multiband, MultibandSpec};

pub use ed::{ed_statistic, ed_threshold, energy_detect, EdMode};
pub use estimate::{run_estimation, EstimationRow};
pub use hist::{run_histogram_experiment, run_true_root_tracking, HistRow, HistSummary, TrackingSummary};
pub use roc::{run_roc, RocCurve, RocPoint, RocReport, RocVariant};
pub use weights::{run_weight_profile, WeightProfile};

fn default_pf_grid() -> Vec<f64> {
    vec![0.005, 0.01, 0.02, 0.05, 0.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scene: MultibandSpec,
    pub coset: CosetConfig,
    pub detector: DetectorConfig,
    pub snr_db_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub outputs: PathBuf,
    /// False-alarm targets at which ROC curves are read off.
    #[serde(default = "default_pf_grid")]
    pub p_f_grid: Vec<f64>,
    /// Noise variance for scenes without subbands.
    #[serde(default)]
    pub noise_power: Option<f64>,
    /// Anchor bucket of the window used by single-window experiments.
    #[serde(default)]
    pub target_bucket: usize,
}

impl ExperimentConfig {
    /// One trial at 0 dB, seed 0, default false-alarm grid, output `out/`.
    pub fn new(scene: MultibandSpec, coset: CosetConfig, detector: DetectorConfig) -> Self {
        Self {
            scene,
            coset,
            detector,
            snr_db_grid: vec![0.0],
            trials: 1,
            seed: 0,
            outputs: PathBuf::from("out"),
            p_f_grid: default_pf_grid(),
            noise_power: None,
            target_bucket: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return config("trials must be at least 1");
        }
        if self.snr_db_grid.is_empty() {
            return config("snr_db_grid must not be empty");
        }
        if self.p_f_grid.is_empty() || self.p_f_grid.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return config("p_f_grid must be non-empty with entries in (0, 1)");
        }
        if self.scene.n_samples != self.coset.n_samples {
            return config(format!(
                "scene has N = {} but the coset configuration has N = {}",
                self.scene.n_samples, self.coset.n_samples
            ));
        }
        if self.noise_power.is_some_and(|v| !(v > 0.0)) {
            return config("noise_power must be positive");
        }
        self.coset.validate()?;
        self.scene.validate()?;
        self.scene.validate_aliasing(self.coset.alpha)?;
        self.detector.validate(&self.coset)?;
        if self.target_bucket >= self.coset.buckets() {
            return config("target_bucket outside the bucket range");
        }
        Ok(())
    }
}

/// One Monte Carlo realization.
#[derive(Debug, Clone)]
pub struct Trial {
    pub y: AliasedSpectrumMatrix,
    /// Aliased spectrum of the noiseless signal.
    pub clean: AliasedSpectrumMatrix,
    pub noise_variance: f64,
}

/// Seeds of trial `t`: (signal, noise).
pub fn trial_seeds(seed: u64, t: usize) -> (u64, u64) {
    let base = sub_seed(seed, t as u64);
    (sub_seed(base, 0xA11A5), sub_seed(base, 0x0015E))
}

/// Synthesizes, adds noise and samples trial `t`. Scenes without subbands get
/// pure noise of variance `noise_power` (1 when unset) and ignore `snr_db`.
pub fn make_trial(
    scene: &MultibandSpec,
    coset: &CosetConfig,
    snr_db: f64,
    noise_power: Option<f64>,
    seed: u64,
    t: usize,
) -> Result<Trial> {
    let (sig_seed, noise_seed) = trial_seeds(seed, t);
    let clean_x = synthesize_multiband(scene, sig_seed)?;
    let (x, var) = if scene.subbands.is_empty() {
        let v = noise_power.unwrap_or(1.0);
        (noise_series(scene.n_samples, v, scene.f_nyq_hz, noise_seed)?, v)
    } else {
        add_awgn(&clean_x, snr_db, noise_seed)?
    };
    Ok(Trial {
        y: aliased_spectrum(&x, coset)?,
        clean: aliased_spectrum(&clean_x, coset)?,
        noise_variance: var,
    })
}

/// Central acceptance region `[lo, hi]` of a Binomial(n, p) count at the given
/// two-sided level.
pub fn binomial_band(n: u64, p: f64, level: f64) -> (u64, u64) {
    let dist = Binomial::new(p, n).expect("valid binomial parameters");
    let tail = (1.0 - level) / 2.0;
    // Smallest k with CDF(k) >= q, by bisection on the monotone CDF.
    let quantile = |q: f64| {
        let (mut lo, mut hi) = (0u64, n);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if dist.cdf(mid) >= q {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    };
    (quantile(tail), quantile(1.0 - tail))
}
