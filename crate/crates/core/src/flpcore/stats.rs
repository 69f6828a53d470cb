//! Distributions of candidate evaluations and the detection threshold.
//!
//! Under pure noise the evaluation at any candidate is `CN(1, n/d)`, so its
//! real part is `N(1, n/(2d))`, independent of the noise level. At a true root
//! in the low-SNR regime it is `CN(1/(1+SNR), 2 n SNR / (d (1+SNR)^2))`, where
//! SNR is the ratio of the signal singular value energy to `d * sigma^2` in the
//! window.

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Standard normal upper tail `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Inverse of [`q_function`].
pub fn q_inv(p: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * p)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    q_function(-x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseStats {
    pub mean: f64,
    pub variance: f64,
    pub real_part_variance: f64,
}

/// Null law of the evaluation for `n` coefficients and window width `d`.
pub fn pure_noise_stats(n: usize, d: usize) -> NoiseStats {
    let v = n as f64 / d as f64;
    NoiseStats {
        mean: 1.0,
        variance: v,
        real_part_variance: v / 2.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowSnrStats {
    pub mean: f64,
    /// Complex variance; the real part carries half of it.
    pub variance: f64,
}

/// Low-SNR law of the evaluation at a true root.
pub fn low_snr_stats(n: usize, d: usize, snr_linear: f64) -> LowSnrStats {
    let s = snr_linear;
    LowSnrStats {
        mean: 1.0 / (1.0 + s),
        variance: 2.0 * n as f64 / d as f64 * s / ((1.0 + s) * (1.0 + s)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdMode {
    /// `sqrt(n/d) * (1 + Q^{-1}(1 - p_f))` taken literally. It is centred at 0
    /// rather than at the null mean 1 and goes negative for `p_f < Q(1)`.
    Literal,
    /// `1 - sqrt(n/(2d)) * Q^{-1}(p_f)`: the point whose null lower-tail
    /// probability for the real part is exactly `p_f`.
    Calibrated,
}

/// Threshold on the real part of the evaluation. Values below it are declared
/// occupied.
pub fn detection_threshold(n: usize, d: usize, p_f: f64, mode: ThresholdMode) -> Result<f64> {
    if !(p_f > 0.0 && p_f < 1.0) {
        return Err(Error::Input(format!("p_f = {p_f} outside (0, 1)")));
    }
    let (n, d) = (n as f64, d as f64);
    Ok(match mode {
        ThresholdMode::Literal => (n / d).sqrt() * (1.0 + q_inv(1.0 - p_f)),
        ThresholdMode::Calibrated => 1.0 - (n / (2.0 * d)).sqrt() * q_inv(p_f),
    })
}

/// `P(Re G < xi)` under the low-SNR true-root law.
pub fn predicted_pd(xi: f64, n: usize, d: usize, snr_linear: f64) -> f64 {
    let st = low_snr_stats(n, d, snr_linear);
    let var = st.variance / 2.0;
    if var <= 0.0 {
        return if xi > st.mean {
            1.0
        } else if xi < st.mean {
            0.0
        } else {
            0.5
        };
    }
    normal_cdf((xi - st.mean) / var.sqrt())
}
