//! Sparse multiband complex baseband scenes.
//!
//! Each subband is built directly in the frequency domain on the integer DFT
//! grid `k * f_nyq / N`, so out-of-band bins are exactly zero. A single unitary
//! inverse FFT then yields the time series. The spectrum is scaled so the
//! subband's mean sample power equals `power`.
//!
//! Subband `k` draws its symbols from the sub-seed `seed ^ splitmix64(key)`.
//! Here `key` is `stream_key` when set and the subband index otherwise. Pinning
//! `stream_key` makes synthesis of a union of specs equal the sum of the parts.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng, sub_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulation {
    QPSK,
    FlatComplexGaussian,
    Tone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PulseShape {
    /// Rectangular spectrum: the symbol rate equals the bandwidth.
    Rect,
    /// Root raised cosine with the given rolloff in `[0, 1]`. The symbol rate is
    /// `bandwidth / (1 + rolloff)`.
    RootRaisedCosine(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandSpec {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub modulation: Modulation,
    pub power: f64,
    pub pulse_shape: PulseShape,
    /// Overrides the subband index when deriving the symbol sub-seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream_key: Option<u64>,
}

impl SubbandSpec {
    pub fn new(carrier_hz: f64, bandwidth_hz: f64, modulation: Modulation, power: f64) -> Self {
        Self {
            carrier_hz,
            bandwidth_hz,
            modulation,
            power,
            pulse_shape: PulseShape::Rect,
            stream_key: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultibandSpec {
    pub subbands: Vec<SubbandSpec>,
    pub f_nyq_hz: f64,
    pub n_samples: usize,
    pub max_subbands: usize,
    pub b_max_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTimeSeries {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl ComplexTimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of `|x|^2`.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Input("time series is empty".into()));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::Input("sample rate must be positive".into()));
        }
        if self.samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("time series contains non-finite values".into()));
        }
        Ok(())
    }
}

impl MultibandSpec {
    /// Width of one full-rate DFT bin in Hz.
    pub fn bin_hz(&self) -> f64 {
        self.f_nyq_hz / self.n_samples as f64
    }

    /// Half-open bin interval `[lo, hi)` occupied by subband `k`.
    pub fn band_bins(&self, k: usize) -> (usize, usize) {
        let sb = &self.subbands[k];
        let bin = self.bin_hz();
        match sb.modulation {
            Modulation::Tone => {
                let c = (sb.carrier_hz / bin).round() as usize;
                (c, c + 1)
            }
            _ => {
                let lo = ((sb.carrier_hz - sb.bandwidth_hz / 2.0) / bin).round() as usize;
                let hi = ((sb.carrier_hz + sb.bandwidth_hz / 2.0) / bin).round() as usize;
                (lo, hi)
            }
        }
    }

    /// Occupied bin intervals, one per subband, in spec order.
    pub fn occupied_intervals(&self) -> Vec<(usize, usize)> {
        (0..self.subbands.len()).map(|k| self.band_bins(k)).collect()
    }

    /// Boolean occupancy mask over the `N` full-rate bins.
    pub fn occupancy_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_samples];
        for (lo, hi) in self.occupied_intervals() {
            mask[lo..hi].iter_mut().for_each(|b| *b = true);
        }
        mask
    }

    /// Total occupied bandwidth in Hz.
    pub fn landau_rate_hz(&self) -> f64 {
        self.subbands.iter().map(|s| s.bandwidth_hz).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        if self.n_samples == 0 {
            return bad("n_samples must be positive".into());
        }
        if !(self.f_nyq_hz > 0.0) {
            return bad("f_nyq_hz must be positive".into());
        }
        for (k, sb) in self.subbands.iter().enumerate() {
            if !(sb.bandwidth_hz > 0.0) {
                return bad(format!("subband {k}: bandwidth must be positive"));
            }
            if !(sb.power > 0.0) {
                return bad(format!("subband {k}: power must be positive"));
            }
            if sb.carrier_hz - sb.bandwidth_hz / 2.0 < 0.0
                || sb.carrier_hz + sb.bandwidth_hz / 2.0 > self.f_nyq_hz
            {
                return bad(format!("subband {k}: band leaves [0, f_nyq]"));
            }
            if sb.bandwidth_hz > self.b_max_hz {
                return bad(format!("subband {k}: bandwidth exceeds b_max_hz"));
            }
            if let PulseShape::RootRaisedCosine(beta) = sb.pulse_shape {
                if !(0.0..=1.0).contains(&beta) {
                    return bad(format!("subband {k}: rolloff outside [0, 1]"));
                }
            }
            let (lo, hi) = self.band_bins(k);
            if hi <= lo || hi > self.n_samples {
                return bad(format!("subband {k}: quantizes to an empty band"));
            }
        }
        let iv = self.occupied_intervals();
        for w in iv.windows(2) {
            if w[0].1 > w[1].0 {
                return bad(format!(
                    "subbands overlap or are out of order: [{}, {}) and [{}, {})",
                    w[0].0, w[0].1, w[1].0, w[1].1
                ));
            }
        }
        if self.landau_rate_hz() > self.f_nyq_hz {
            return bad("total occupied bandwidth exceeds f_nyq".into());
        }
        Ok(())
    }

    /// Largest number of subbands whose aliased images share one bucket when the
    /// spectrum folds into `n_samples / alpha` buckets.
    pub fn max_bucket_collisions(&self, alpha: usize) -> usize {
        let m = self.n_samples / alpha;
        let mut count = vec![0usize; m];
        for (lo, hi) in self.occupied_intervals() {
            let mut hit = vec![false; m];
            for f in lo..hi {
                hit[f % m] = true;
            }
            for (c, h) in count.iter_mut().zip(hit) {
                *c += h as usize;
            }
        }
        count.into_iter().max().unwrap_or(0)
    }

    /// Checks the per-bucket collision bound for aliasing ratio `alpha`.
    pub fn validate_aliasing(&self, alpha: usize) -> Result<()> {
        let worst = self.max_bucket_collisions(alpha);
        if worst > self.max_subbands {
            return Err(Error::Spec(format!(
                "{worst} subbands share a bucket, more than max_subbands = {}",
                self.max_subbands
            )));
        }
        Ok(())
    }
}

fn complex_normal<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Root raised cosine amplitude at frequency offset `f` from the band center,
/// symbol rate `rs`, rolloff `beta`.
fn rrc_amplitude(f: f64, rs: f64, beta: f64) -> f64 {
    let af = f.abs();
    let f1 = (1.0 - beta) * rs / 2.0;
    let f2 = (1.0 + beta) * rs / 2.0;
    if af <= f1 {
        1.0
    } else if af < f2 {
        (0.5 * (1.0 + (std::f64::consts::PI / (beta * rs) * (af - f1)).cos())).sqrt()
    } else {
        0.0
    }
}

fn unitary_dft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    fft.process(buf);
    let s = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= s);
}

/// Adds the unitary-DFT spectrum of subband `k` into `spectrum`, using sub-seed
/// `subseed` for its symbols.
fn add_subband_spectrum(spec: &MultibandSpec, k: usize, subseed: u64, spectrum: &mut [Complex64]) {
    let sb = &spec.subbands[k];
    let (lo, hi) = spec.band_bins(k);
    let width = hi - lo;
    let mut g = rng(subseed);
    let mut band: Vec<Complex64> = match sb.modulation {
        Modulation::Tone => vec![Complex64::new(1.0, 0.0)],
        Modulation::FlatComplexGaussian => (0..width).map(|_| complex_normal(&mut g, 1.0)).collect(),
        Modulation::QPSK => {
            let n_sym = match sb.pulse_shape {
                PulseShape::Rect => width,
                PulseShape::RootRaisedCosine(beta) => {
                    ((width as f64 / (1.0 + beta)).round() as usize).max(1)
                }
            };
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let mut sym: Vec<Complex64> = (0..n_sym)
                .map(|_| {
                    let b: u8 = g.random_range(0..4);
                    Complex64::new(
                        if b & 1 == 0 { h } else { -h },
                        if b & 2 == 0 { h } else { -h },
                    )
                })
                .collect();
            unitary_dft_in_place(&mut sym, false);
            // Periodic symbol spectrum centered over the occupied bins.
            let off = (width as isize - n_sym as isize) / 2;
            (0..width)
                .map(|j| sym[(j as isize - off).rem_euclid(n_sym as isize) as usize])
                .collect()
        }
    };
    if let (Modulation::QPSK | Modulation::FlatComplexGaussian, PulseShape::RootRaisedCosine(beta)) =
        (sb.modulation, sb.pulse_shape)
    {
        let rs = width as f64 / (1.0 + beta);
        for (j, z) in band.iter_mut().enumerate() {
            let f = j as f64 + 0.5 - width as f64 / 2.0;
            *z *= rrc_amplitude(f, rs, beta);
        }
    }
    let energy: f64 = band.iter().map(|z| z.norm_sqr()).sum();
    if energy == 0.0 {
        return;
    }
    let scale = (spec.n_samples as f64 * sb.power / energy).sqrt();
    for (j, z) in band.into_iter().enumerate() {
        spectrum[lo + j] += z * scale;
    }
}

/// Unitary full-rate spectrum of the scene described by `spec`.
pub fn synthesize_spectrum(spec: &MultibandSpec, seed: u64) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); spec.n_samples];
    for k in 0..spec.subbands.len() {
        let key = spec.subbands[k].stream_key.unwrap_or(k as u64);
        add_subband_spectrum(spec, k, sub_seed(seed, key), &mut spectrum);
    }
    Ok(spectrum)
}

/// Synthesizes the multiband scene at rate `f_nyq_hz`. Deterministic in `seed`.
pub fn synthesize_multiband(spec: &MultibandSpec, seed: u64) -> Result<ComplexTimeSeries> {
    let mut buf = synthesize_spectrum(spec, seed)?;
    if !spec.subbands.is_empty() {
        unitary_dft_in_place(&mut buf, true);
    }
    Ok(ComplexTimeSeries {
        samples: buf,
        sample_rate_hz: spec.f_nyq_hz,
    })
}

/// Adds circular complex Gaussian noise of the given variance (per complex
/// sample) to `x`.
pub fn add_noise_variance(x: &ComplexTimeSeries, variance: f64, seed: u64) -> Result<ComplexTimeSeries> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::Input(format!("noise variance {variance} is not a finite non-negative number")));
    }
    let mut g = rng(seed);
    let samples = x
        .samples
        .iter()
        .map(|&z| z + complex_normal(&mut g, variance))
        .collect();
    Ok(ComplexTimeSeries {
        samples,
        sample_rate_hz: x.sample_rate_hz,
    })
}

/// Adds white Gaussian noise at `snr_db` relative to the mean power of `x`.
/// Returns the noisy series and the noise variance used.
///
/// `snr_db = +inf` returns `x` unchanged with variance 0.
pub fn add_awgn(x: &ComplexTimeSeries, snr_db: f64, seed: u64) -> Result<(ComplexTimeSeries, f64)> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::Input(format!("snr_db = {snr_db} is not allowed")));
    }
    if snr_db == f64::INFINITY {
        return Ok((x.clone(), 0.0));
    }
    let p = x.mean_power();
    if p == 0.0 {
        return Err(Error::Input("zero-power signal with finite SNR".into()));
    }
    let variance = p / 10f64.powf(snr_db / 10.0);
    Ok((add_noise_variance(x, variance, seed)?, variance))
}

/// Pure complex Gaussian noise of length `n`.
pub fn noise_series(n: usize, variance: f64, sample_rate_hz: f64, seed: u64) -> Result<ComplexTimeSeries> {
    let zero = ComplexTimeSeries {
        samples: vec![Complex64::new(0.0, 0.0); n],
        sample_rate_hz,
    };
    add_noise_variance(&zero, variance, seed)
}

/// Unitary forward DFT of a full-rate series.
pub fn full_dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    unitary_dft_in_place(&mut buf, false);
    buf
}

/// Unitary inverse DFT.
pub fn full_idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    unitary_dft_in_place(&mut buf, true);
    buf
}
