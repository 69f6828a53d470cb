#![allow(dead_code)]

use flpsense::mcsampler::{aliased_spectrum, AliasedSpectrumMatrix, CosetConfig};
use flpsense::siggen::{full_idft, ComplexTimeSeries, Modulation, MultibandSpec, SubbandSpec};
use flpsense::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex<R: Rng>(g: &mut R) -> Complex64 {
    c(g.random_range(-1.0..1.0), g.random_range(-1.0..1.0))
}

/// Time series whose unitary spectrum is `xf`.
pub fn series_from_spectrum(xf: &[Complex64]) -> ComplexTimeSeries {
    ComplexTimeSeries {
        samples: full_idft(xf),
        sample_rate_hz: xf.len() as f64,
    }
}

/// Aliased matrix of a scene given by its occupied full-rate bins with random
/// complex amplitudes.
pub fn matrix_from_bins(
    cfg: &CosetConfig,
    bins: &[usize],
    seed: u64,
) -> (Vec<Complex64>, AliasedSpectrumMatrix) {
    let mut g = rng(seed);
    let mut xf = vec![c(0.0, 0.0); cfg.n_samples];
    for &f in bins {
        xf[f] = random_complex(&mut g) + c(0.5, 0.0);
    }
    let y = aliased_spectrum(&series_from_spectrum(&xf), cfg).unwrap();
    (xf, y)
}

/// Pure-noise aliased matrix: every entry i.i.d. `CN(0, variance)`, the exact
/// law of the unitary coset spectrum of white noise.
pub fn noise_matrix(cfg: &CosetConfig, variance: f64, seed: u64) -> AliasedSpectrumMatrix {
    use rand_distr::{Distribution, Normal};
    let mut g = rng(seed);
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).unwrap();
    let values = (0..cfg.r * cfg.buckets())
        .map(|_| c(normal.sample(&mut g), normal.sample(&mut g)))
        .collect();
    AliasedSpectrumMatrix::from_values(values, *cfg).unwrap()
}

/// Random desk spec of one to three disjoint flat Gaussian bands with integer
/// bin edges, each wider than `min_width` bins and at most `max_width` bins.
/// With at most three bands no bucket can hold more than three roots.
pub fn random_band_spec<R: Rng>(g: &mut R, n: usize, min_width: usize, max_width: usize) -> MultibandSpec {
    let f_nyq = 100_000.0;
    let bin = f_nyq / n as f64;
    loop {
        let k = g.random_range(1..=3usize);
        let mut iv: Vec<(usize, usize)> = (0..k)
            .map(|_| {
                let w = g.random_range(min_width + 1..=max_width);
                let lo = g.random_range(0..n - w);
                (lo, lo + w)
            })
            .collect();
        iv.sort_unstable();
        if iv.windows(2).any(|p| p[1].0 <= p[0].1) {
            continue;
        }
        let subbands = iv
            .iter()
            .map(|&(lo, hi)| {
                SubbandSpec::new(
                    (lo + hi) as f64 / 2.0 * bin,
                    (hi - lo) as f64 * bin,
                    Modulation::FlatComplexGaussian,
                    g.random_range(0.5..2.0),
                )
            })
            .collect();
        let spec = MultibandSpec {
            subbands,
            f_nyq_hz: f_nyq,
            n_samples: n,
            max_subbands: 3,
            b_max_hz: f_nyq,
        };
        if spec.validate().is_ok() && spec.occupied_intervals() == iv {
            return spec;
        }
    }
}
