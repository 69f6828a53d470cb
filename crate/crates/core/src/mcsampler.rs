//! Equispaced multi-coset sampling and the aliased spectrum matrix.
//!
//! Coset `s` keeps the samples `x[n * alpha + s * c]`. Each coset is then
//! transformed with a unitary DFT of length `M = N / alpha`. With the full-rate
//! spectrum `X` also unitary, entry `(s, f)` of the matrix is
//!
//! ```text
//! Y_s(f) = (1 / sqrt(alpha)) * sum_l X(f + l M) * exp(j 2 pi (f + l M) s c / N)
//! ```
//!
//! so white noise of variance `sigma^2` maps to i.i.d. `CN(0, sigma^2)` entries.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{config, Error, Result};
use crate::siggen::ComplexTimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetConfig {
    pub alpha: usize,
    pub r: usize,
    pub shift_step: usize,
    pub n_samples: usize,
}

impl CosetConfig {
    pub fn new(alpha: usize, r: usize, shift_step: usize, n_samples: usize) -> Result<Self> {
        let cfg = Self {
            alpha,
            r,
            shift_step,
            n_samples,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0 || self.n_samples == 0 {
            return config("alpha and n_samples must be positive");
        }
        if self.n_samples % self.alpha != 0 {
            return config(format!(
                "N = {} is not divisible by alpha = {}",
                self.n_samples, self.alpha
            ));
        }
        if self.r == 0 || self.r > self.alpha {
            return config(format!("r = {} must lie in [1, alpha = {}]", self.r, self.alpha));
        }
        if self.shift_step == 0 {
            return config("shift_step must be at least 1");
        }
        if self.shift_step * (self.r - 1) > self.alpha - 1 {
            return config(format!(
                "largest shift c(r-1) = {} exceeds alpha - 1 = {}",
                self.shift_step * (self.r - 1),
                self.alpha - 1
            ));
        }
        Ok(())
    }

    /// Number of buckets `M = N / alpha`.
    pub fn buckets(&self) -> usize {
        self.n_samples / self.alpha
    }

    /// Per-bucket phase step `theta = exp(j 2 pi c / N)`.
    pub fn theta(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.shift_step as f64 / self.n_samples as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosetSampleSet {
    pub streams: Vec<Vec<Complex64>>,
    pub config: CosetConfig,
}

/// Normalization tag carried alongside persisted matrices.
pub const NORMALIZATION: &str = "unitary";

/// `r x M` matrix of per-coset unitary DFTs, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasedSpectrumMatrix {
    values: Vec<Complex64>,
    pub config: CosetConfig,
    rms: f64,
}

impl AliasedSpectrumMatrix {
    pub fn from_values(values: Vec<Complex64>, config: CosetConfig) -> Result<Self> {
        config.validate()?;
        if values.len() != config.r * config.buckets() {
            return Err(Error::Input(format!(
                "matrix has {} entries, expected {} x {}",
                values.len(),
                config.r,
                config.buckets()
            )));
        }
        let rms = (values.iter().map(|z| z.norm_sqr()).sum::<f64>() / values.len() as f64).sqrt();
        Ok(Self { values, config, rms })
    }

    #[inline]
    pub fn get(&self, s: usize, f: usize) -> Complex64 {
        self.values[s * self.config.buckets() + f]
    }

    pub fn row(&self, s: usize) -> &[Complex64] {
        let m = self.config.buckets();
        &self.values[s * m..(s + 1) * m]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Root mean square of all entries.
    pub fn rms(&self) -> f64 {
        self.rms
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Extracts the `r` coset streams from `x`.
pub fn coset_sample(x: &ComplexTimeSeries, cfg: &CosetConfig) -> Result<CosetSampleSet> {
    cfg.validate()?;
    if x.len() < cfg.n_samples {
        return Err(Error::Input(format!(
            "series has {} samples, need {}",
            x.len(),
            cfg.n_samples
        )));
    }
    let m = cfg.buckets();
    let streams = (0..cfg.r)
        .map(|s| {
            (0..m)
                .map(|n| x.samples[n * cfg.alpha + s * cfg.shift_step])
                .collect()
        })
        .collect();
    Ok(CosetSampleSet {
        streams,
        config: *cfg,
    })
}

/// Unitary DFT of every coset stream.
pub fn coset_dft(set: &CosetSampleSet) -> Result<AliasedSpectrumMatrix> {
    let cfg = set.config;
    let m = cfg.buckets();
    if set.streams.len() != cfg.r || set.streams.iter().any(|s| s.len() != m) {
        return Err(Error::Input("coset streams do not match their configuration".into()));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let scale = 1.0 / (m as f64).sqrt();
    let mut values = Vec::with_capacity(cfg.r * m);
    for stream in &set.streams {
        let mut buf = stream.clone();
        fft.process(&mut buf);
        values.extend(buf.into_iter().map(|z| z * scale));
    }
    AliasedSpectrumMatrix::from_values(values, cfg)
}

/// Samples and transforms in one step.
pub fn aliased_spectrum(x: &ComplexTimeSeries, cfg: &CosetConfig) -> Result<AliasedSpectrumMatrix> {
    coset_dft(&coset_sample(x, cfg)?)
}

/// Literal evaluation of the aliasing relation from a full-rate unitary
/// spectrum. Quadratic in size; intended as a reference.
pub fn alias_oracle(x_full: &[Complex64], cfg: &CosetConfig) -> Result<AliasedSpectrumMatrix> {
    cfg.validate()?;
    let n = cfg.n_samples;
    if x_full.len() != n {
        return Err(Error::Input(format!("spectrum has {} bins, need {n}", x_full.len())));
    }
    let m = cfg.buckets();
    let gain = 1.0 / (cfg.alpha as f64).sqrt();
    let mut values = Vec::with_capacity(cfg.r * m);
    for s in 0..cfg.r {
        for f in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..cfg.alpha {
                let fl = f + l * m;
                let ph = ((fl * s * cfg.shift_step) % n) as f64 / n as f64;
                acc += x_full[fl] * Complex64::from_polar(1.0, 2.0 * PI * ph);
            }
            values.push(acc * gain);
        }
    }
    AliasedSpectrumMatrix::from_values(values, *cfg)
}

/// Bucket `f mod M` and slot `floor(f / M)` of full-rate bin `f`.
pub fn bucket_and_slot(f: usize, cfg: &CosetConfig) -> Result<(usize, usize)> {
    if f >= cfg.n_samples {
        return Err(Error::Input(format!("bin {f} outside [0, {})", cfg.n_samples)));
    }
    let m = cfg.buckets();
    Ok((f % m, f / m))
}
