use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::unit_phase;
use crate::error::{Error, Result};
use crate::mcsampler::AliasedSpectrumMatrix;

/// Relative size of the absolute singular-value floor, in units of
/// `rms(Y) * sqrt(rows)`. Windows whose content is pure rounding residue fall
/// under it and produce the trivial polynomial.
pub const SV_FLOOR_REL: f64 = 1e-10;

/// Linear system `y1 * a = -y2` for the `n` polynomial coefficients of one
/// window of `width` buckets starting at `bucket_start`.
///
/// Row `m * (r - n) + t` holds `theta^{-(k+t) m} * Y_{k+t}(i + m)` in column
/// `k - 1` for `k = 1..=n`, and `theta^{-t m} * Y_t(i + m)` in `y2`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSystem {
    pub y1: DMatrix<Complex64>,
    pub y2: DVector<Complex64>,
    pub bucket_start: usize,
    pub width: usize,
    pub n: usize,
    pub theta: Complex64,
    /// Absolute singular-value floor applied by the solvers.
    pub sv_floor: f64,
}

impl WindowSystem {
    /// Jointly scales the data by `s` (and the floor by `|s|`).
    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            y1: self.y1.map(|z| z * s),
            y2: self.y2.map(|z| z * s),
            sv_floor: self.sv_floor * s.norm(),
            ..self.clone()
        }
    }
}

fn check_feasible(r: usize, d: usize, n: usize) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(Error::Infeasible("n and d must be positive".into()));
    }
    if n >= r {
        return Err(Error::Infeasible(format!("n = {n} needs more than {r} cosets")));
    }
    if !(r >= 2 * n || d >= n) {
        return Err(Error::Infeasible(format!("r = {r}, d = {d}, n = {n}: need r >= 2n or d >= n")));
    }
    Ok(())
}

/// `d x r` matrix of phase-aligned coset values `theta^{-k m} Y_k((i + m) mod M)`.
///
/// Past the last bucket the window continues at bucket 0. This keeps every row
/// on the candidate set of bucket `i`, with full-rate bin `i + m + l M (mod N)`
/// mapped to candidate `l`.
pub fn aligned_rows(y: &AliasedSpectrumMatrix, i: usize, d: usize) -> DMatrix<Complex64> {
    let cfg = y.config;
    let (m_total, n_full, c) = (cfg.buckets(), cfg.n_samples, cfg.shift_step as i128);
    DMatrix::from_fn(d, cfg.r, |m, k| {
        let b = (i + m) % m_total;
        y.get(k, b) * unit_phase(-(k as i128) * (m as i128) * c, n_full)
    })
}

fn assemble(y: &AliasedSpectrumMatrix, i: usize, d: usize, n: usize) -> WindowSystem {
    let r = y.config.r;
    let v = aligned_rows(y, i, d);
    let blocks = r - n;
    let rows = d * blocks;
    let y1 = DMatrix::from_fn(rows, n, |row, col| v[(row / blocks, col + 1 + row % blocks)]);
    let y2 = DVector::from_fn(rows, |row, _| v[(row / blocks, row % blocks)]);
    WindowSystem {
        y1,
        y2,
        bucket_start: i,
        width: d,
        n,
        theta: y.config.theta(),
        sv_floor: SV_FLOOR_REL * y.rms() * (rows as f64).sqrt(),
    }
}

/// Builds the system for buckets `[i, i + d)`. The window must fit inside the
/// spectrum.
pub fn build_window_system(y: &AliasedSpectrumMatrix, i: usize, d: usize, n: usize) -> Result<WindowSystem> {
    let m = y.config.buckets();
    if i + d > m {
        return Err(Error::WindowOverrun {
            start: i,
            width: d,
            buckets: m,
        });
    }
    check_feasible(y.config.r, d, n)?;
    Ok(assemble(y, i, d, n))
}

/// Like [`build_window_system`] but windows running past the last bucket wrap
/// to bucket 0 (see [`aligned_rows`]).
pub fn build_window_system_wrapped(
    y: &AliasedSpectrumMatrix,
    i: usize,
    d: usize,
    n: usize,
) -> Result<WindowSystem> {
    let m = y.config.buckets();
    if i >= m || d > m {
        return Err(Error::WindowOverrun {
            start: i,
            width: d,
            buckets: m,
        });
    }
    check_feasible(y.config.r, d, n)?;
    Ok(assemble(y, i, d, n))
}
