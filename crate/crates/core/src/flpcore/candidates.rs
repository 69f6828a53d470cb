use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::solve::{FlpCoefficients, SolverMethod};
use super::unit_phase;
use crate::error::{Error, Result};
use crate::mcsampler::CosetConfig;

/// Candidate root of slot `l` at bucket `i`: `exp(j 2 pi (i + l M) c / N)`.
pub fn candidate_root(i: usize, l: usize, cfg: &CosetConfig) -> Complex64 {
    let f = (i + l * cfg.buckets()) as i128;
    unit_phase(f * cfg.shift_step as i128, cfg.n_samples)
}

/// All `alpha` candidate roots of bucket `i`, indexed by slot.
pub fn candidate_roots(i: usize, cfg: &CosetConfig) -> Vec<Complex64> {
    (0..cfg.alpha).map(|l| candidate_root(i, l, cfg)).collect()
}

/// `1 + sum_k a_k z^k` by Horner's rule.
pub fn evaluate_polynomial(a: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in a.iter().rev() {
        acc = (acc + c) * z;
    }
    acc + 1.0
}

/// Coefficients of `prod_{l in slots} (1 - z / z_l)` for bucket `i`.
pub fn exact_flp(slots: &[usize], i: usize, cfg: &CosetConfig) -> Result<FlpCoefficients> {
    if slots.is_empty() {
        return Err(Error::Input("exact_flp needs at least one slot".into()));
    }
    let mut seen = vec![false; cfg.alpha];
    for &l in slots {
        if l >= cfg.alpha || seen[l] {
            return Err(Error::Input(format!("slot {l} is out of range or repeated")));
        }
        seen[l] = true;
    }
    let mut p = vec![Complex64::new(1.0, 0.0)];
    for &l in slots {
        let inv = candidate_root(i, l, cfg).conj();
        let mut next = p.clone();
        next.push(Complex64::new(0.0, 0.0));
        for (k, &c) in p.iter().enumerate() {
            next[k + 1] -= c * inv;
        }
        p = next;
    }
    Ok(FlpCoefficients {
        a: p[1..].to_vec(),
        method: SolverMethod::Exact,
        degenerate: false,
    })
}

/// Evaluations of a fitted polynomial on the candidate roots of one bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEvaluation {
    pub bucket: usize,
    pub values: Vec<Complex64>,
    pub magnitudes: Vec<f64>,
    /// Slots of the `n` smallest magnitudes, ascending by slot index.
    pub selected_slots: Vec<usize>,
}

impl CandidateEvaluation {
    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }
}

/// Indices of the `n` smallest entries, ties going to the lower index. The
/// result is sorted ascending.
pub fn select_smallest(magnitudes: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..magnitudes.len()).collect();
    idx.sort_by(|&x, &y| magnitudes[x].total_cmp(&magnitudes[y]).then(x.cmp(&y)));
    idx.truncate(n);
    idx.sort_unstable();
    idx
}

/// Evaluates `coeffs` on every candidate of bucket `i` and selects the
/// `coeffs.a.len()` smallest magnitudes.
pub fn evaluate_candidates(coeffs: &FlpCoefficients, i: usize, cfg: &CosetConfig) -> CandidateEvaluation {
    let values: Vec<Complex64> = candidate_roots(i, cfg)
        .into_iter()
        .map(|z| evaluate_polynomial(&coeffs.a, z))
        .collect();
    let magnitudes: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    let selected_slots = select_smallest(&magnitudes, coeffs.a.len());
    CandidateEvaluation {
        bucket: i,
        values,
        magnitudes,
        selected_slots,
    }
}
