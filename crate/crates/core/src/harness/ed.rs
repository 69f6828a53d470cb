//! Energy detection baseline.
//!
//! The per-bucket statistic is `T_b = sum_s |Y_s(b)|^2 / sigma^2`. Under noise
//! alone it is Gamma(r, 1). `Plain` mode flags every slot of a flagged bucket,
//! since bucket energy carries no slot information. `Hybrid` mode flags only the
//! slots that the polynomial fit of the covering window ranks as roots.

use statrs::distribution::{ContinuousCDF, Gamma};

use crate::detector::BucketDecision;
use crate::error::{Error, Result};
use crate::mcsampler::AliasedSpectrumMatrix;

#[derive(Debug, Clone, Copy)]
pub enum EdMode<'a> {
    Plain,
    Hybrid(&'a [BucketDecision]),
}

/// Normalized bucket energies.
pub fn ed_statistic(y: &AliasedSpectrumMatrix, noise_variance: f64) -> Result<Vec<f64>> {
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(Error::Input("energy detection needs a known positive noise variance".into()));
    }
    let cfg = y.config;
    Ok((0..cfg.buckets())
        .map(|b| (0..cfg.r).map(|s| y.get(s, b).norm_sqr()).sum::<f64>() / noise_variance)
        .collect())
}

/// Upper `p_f` quantile of Gamma(r, 1).
pub fn ed_threshold(r: usize, p_f: f64) -> Result<f64> {
    if !(p_f > 0.0 && p_f < 1.0) {
        return Err(Error::Input(format!("p_f = {p_f} outside (0, 1)")));
    }
    let g = Gamma::new(r as f64, 1.0).map_err(|e| Error::Input(e.to_string()))?;
    Ok(g.inverse_cdf(1.0 - p_f))
}

/// Slots of the window covering each bucket, as full-rate bins per bucket.
pub(crate) fn hybrid_slots(decisions: &[BucketDecision], y: &AliasedSpectrumMatrix) -> Vec<Vec<usize>> {
    let cfg = y.config;
    let (n, m) = (cfg.n_samples, cfg.buckets());
    let mut out = vec![Vec::new(); m];
    for dec in decisions {
        for k in 0..dec.width.min(m) {
            let b = (dec.bucket + k) % m;
            for &l in &dec.evaluation.selected_slots {
                let f = (dec.bucket + k + l * m) % n;
                if !out[b].contains(&f) {
                    out[b].push(f);
                }
            }
        }
    }
    out
}

/// Occupancy over full-rate bins `b + l M`, i.e. per (bucket, slot).
pub fn energy_detect(
    y: &AliasedSpectrumMatrix,
    noise_variance: f64,
    p_f: f64,
    mode: EdMode<'_>,
) -> Result<Vec<bool>> {
    let cfg = y.config;
    let (n, m) = (cfg.n_samples, cfg.buckets());
    let stat = ed_statistic(y, noise_variance)?;
    let gamma = ed_threshold(cfg.r, p_f)?;
    let mut mask = vec![false; n];
    match mode {
        EdMode::Plain => {
            for (b, &t) in stat.iter().enumerate() {
                if t > gamma {
                    for l in 0..cfg.alpha {
                        mask[b + l * m] = true;
                    }
                }
            }
        }
        EdMode::Hybrid(decisions) => {
            for (b, bins) in hybrid_slots(decisions, y).into_iter().enumerate() {
                if stat[b] > gamma {
                    for f in bins {
                        mask[f] = true;
                    }
                }
            }
        }
    }
    Ok(mask)
}
