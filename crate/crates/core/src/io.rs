//! On-disk formats.
//!
//! * Specs, supports, configs: JSON.
//! * Time series: raw interleaved little-endian `f64` I/Q, with a JSON sidecar
//!   `<file>.json` holding `{sample_rate_hz, length}`.
//! * Aliased spectrum matrices: row-major interleaved `f64` I/Q, with a sidecar
//!   holding `{alpha, r, c, N, normalization}` and, optionally, the source
//!   `sample_rate_hz`.

use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mcsampler::{AliasedSpectrumMatrix, CosetConfig, NORMALIZATION};
use crate::siggen::ComplexTimeSeries;

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_iq(path: &Path, values: &[Complex64]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for z in values {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_iq(path: &Path, expected: usize) -> Result<Vec<Complex64>> {
    let bytes = fs::read(path)?;
    if bytes.len() != expected * 16 {
        return Err(Error::Input(format!(
            "{} holds {} bytes, expected {} complex values",
            path.display(),
            bytes.len(),
            expected
        )));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    Ok(bytes
        .chunks_exact(16)
        .map(|c| Complex64::new(f(&c[..8]), f(&c[8..])))
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeriesSidecar {
    pub sample_rate_hz: f64,
    pub length: usize,
}

pub fn write_time_series(path: &Path, x: &ComplexTimeSeries) -> Result<()> {
    write_iq(path, &x.samples)?;
    write_json(
        &sidecar_path(path),
        &SeriesSidecar {
            sample_rate_hz: x.sample_rate_hz,
            length: x.len(),
        },
    )
}

pub fn read_time_series(path: &Path) -> Result<ComplexTimeSeries> {
    let meta: SeriesSidecar = read_json(&sidecar_path(path))?;
    let x = ComplexTimeSeries {
        samples: read_iq(path, meta.length)?,
        sample_rate_hz: meta.sample_rate_hz,
    };
    x.validate()?;
    Ok(x)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixSidecar {
    pub alpha: usize,
    pub r: usize,
    pub c: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub normalization: String,
    /// Full-rate sample rate of the source series, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate_hz: Option<f64>,
}

pub fn write_matrix(path: &Path, y: &AliasedSpectrumMatrix) -> Result<()> {
    write_matrix_at_rate(path, y, None)
}

/// Like [`write_matrix`], recording the full-rate sample rate in the sidecar.
pub fn write_matrix_at_rate(path: &Path, y: &AliasedSpectrumMatrix, sample_rate_hz: Option<f64>) -> Result<()> {
    write_iq(path, y.values())?;
    let cfg = y.config;
    write_json(
        &sidecar_path(path),
        &MatrixSidecar {
            alpha: cfg.alpha,
            r: cfg.r,
            c: cfg.shift_step,
            n: cfg.n_samples,
            normalization: NORMALIZATION.to_string(),
            sample_rate_hz,
        },
    )
}

pub fn read_matrix(path: &Path) -> Result<AliasedSpectrumMatrix> {
    Ok(read_matrix_with_sidecar(path)?.0)
}

pub fn read_matrix_with_sidecar(path: &Path) -> Result<(AliasedSpectrumMatrix, MatrixSidecar)> {
    let meta: MatrixSidecar = read_json(&sidecar_path(path))?;
    if meta.normalization != NORMALIZATION {
        return Err(Error::Input(format!("unsupported normalization {}", meta.normalization)));
    }
    let cfg = CosetConfig::new(meta.alpha, meta.r, meta.c, meta.n)?;
    let values = read_iq(path, cfg.r * cfg.buckets())?;
    Ok((AliasedSpectrumMatrix::from_values(values, cfg)?, meta))
}
