//! Window-by-window detection over the aliased spectrum and support recovery.
//!
//! Each window of `d` buckets yields one polynomial fit. The `n_s` candidates
//! of smallest magnitude are kept, and those whose real part falls below the
//! threshold are accepted. An accepted slot `l` of the window anchored at `a`
//! covers the full-rate bins `a + m + l M (mod N)` for `m < d`. Windows near
//! the top bucket wrap around (see [`crate::flpcore::aligned_rows`]), so the
//! scan never needs shortened edge windows.
//!
//! Boundary resolution attributes each window's decision to its first `stride`
//! buckets. It then drops the leading `d - stride` bins of every run, the
//! overhang introduced by windows that only touch a band with their trailing
//! buckets.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{config, Result};
use crate::flpcore::{
    aligned_rows, build_window_system_wrapped, candidate_root, candidate_roots, detection_threshold,
    evaluate_candidates, solve, CandidateEvaluation, SolverMethod, ThresholdMode,
};
use crate::mcsampler::{AliasedSpectrumMatrix, CosetConfig};

/// Smallest non-root magnitudes of the exact polynomial over the worst root
/// geometries with one, two and three roots among ten candidates.
pub const WORST_CASE_CONSTANTS: [f64; 3] = [0.6180, 0.3820, 0.4490];

/// How the worst-case filter decides whether an accepted slot is spurious.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WorstCaseRule {
    /// Reselect the support among all below-threshold candidates by nested
    /// F tests on the full coset rows (see [`refit_select`]). Spurious slots
    /// are demoted; a weak true root hidden behind such slots in the magnitude
    /// ranking can be admitted.
    Refit { significance: f64 },
    /// Demote an accepted slot whose magnitude exceeds `kappa` times the
    /// smallest accepted magnitude and lies within a relative `tolerance` of
    /// one of [`WORST_CASE_CONSTANTS`].
    ConstantProximity { kappa: f64, tolerance: f64 },
}

impl Default for WorstCaseRule {
    fn default() -> Self {
        WorstCaseRule::Refit { significance: 1e-2 }
    }
}

fn default_min_band() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub p_f: f64,
    pub d: usize,
    pub n_s: usize,
    pub threshold_mode: ThresholdMode,
    pub stride: usize,
    pub solver: SolverMethod,
    pub worst_case_filter: bool,
    #[serde(default)]
    pub worst_case_rule: WorstCaseRule,
    /// Bands narrower than this many bins after trimming are discarded.
    #[serde(default = "default_min_band")]
    pub min_band_bins: usize,
    /// Re-place each recovered edge by a change-point fit on the per-bin
    /// energy of its slot (see [`refine_edges`]).
    #[serde(default)]
    pub refine_edges: bool,
}

impl DetectorConfig {
    /// Non-overlapping tiles, LS solver, calibrated threshold, filter off.
    pub fn new(p_f: f64, d: usize, n_s: usize) -> Self {
        Self {
            p_f,
            d,
            n_s,
            threshold_mode: ThresholdMode::Calibrated,
            stride: d,
            solver: SolverMethod::LS,
            worst_case_filter: false,
            worst_case_rule: WorstCaseRule::default(),
            min_band_bins: 1,
            refine_edges: false,
        }
    }

    pub fn validate(&self, coset: &CosetConfig) -> Result<()> {
        if !(self.p_f > 0.0 && self.p_f < 1.0) {
            return config(format!("p_f = {} outside (0, 1)", self.p_f));
        }
        if self.stride == 0 || self.stride > self.d {
            return config(format!("stride {} must lie in [1, d = {}]", self.stride, self.d));
        }
        if self.n_s == 0 || self.n_s >= coset.r {
            return config(format!("n_s = {} must lie in [1, r - 1 = {}]", self.n_s, coset.r - 1));
        }
        if self.d * (coset.r - self.n_s) < self.n_s {
            return config(format!(
                "d (r - n_s) = {} is smaller than n_s = {}",
                self.d * (coset.r - self.n_s),
                self.n_s
            ));
        }
        if self.d > coset.buckets() {
            return config(format!("d = {} exceeds {} buckets", self.d, coset.buckets()));
        }
        match self.worst_case_rule {
            WorstCaseRule::Refit { significance } if !(significance > 0.0 && significance < 1.0) => {
                config("filter significance must lie in (0, 1)")
            }
            WorstCaseRule::ConstantProximity { kappa, tolerance } if !(kappa > 0.0 && tolerance >= 0.0) => {
                config("kappa must be positive and tolerance non-negative")
            }
            _ => Ok(()),
        }
    }

    pub fn threshold(&self) -> Result<f64> {
        detection_threshold(self.n_s, self.d, self.p_f, self.threshold_mode)
    }
}

/// Outcome for the window anchored at `bucket`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketDecision {
    pub bucket: usize,
    pub width: usize,
    pub occupied_slots: Vec<usize>,
    pub evaluation: CandidateEvaluation,
    pub threshold_used: f64,
    /// Slots accepted by the threshold but removed by the worst-case filter.
    #[serde(default)]
    pub demoted_slots: Vec<usize>,
    /// Below-threshold slots outside the top `n_s` magnitudes that the refit
    /// rule admitted.
    #[serde(default)]
    pub promoted_slots: Vec<usize>,
    #[serde(default)]
    pub degenerate: bool,
}

impl BucketDecision {
    /// Real part of the evaluation at `slot`.
    pub fn real(&self, slot: usize) -> f64 {
        self.evaluation.values[slot].re
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    /// Disjoint, sorted half-open full-rate bin ranges.
    pub intervals: Vec<(usize, usize)>,
    pub bands: Vec<Band>,
    pub n_detected: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf_offset_hz: Option<f64>,
}

impl SupportEstimate {
    pub fn mask(&self, n_bins: usize) -> Vec<bool> {
        let mut m = vec![false; n_bins];
        for &(lo, hi) in &self.intervals {
            m[lo..hi].iter_mut().for_each(|b| *b = true);
        }
        m
    }

    /// Copy with the offset added to every reported carrier.
    pub fn with_rf_offset(&self, offset_hz: f64) -> Self {
        let mut s = self.clone();
        let prev = s.rf_offset_hz.unwrap_or(0.0);
        for b in &mut s.bands {
            b.carrier_hz += offset_hz - prev;
        }
        s.rf_offset_hz = Some(offset_hz);
        s
    }
}

/// Accepted slots of one evaluation: the selected candidates with real part
/// below `xi`.
fn accept(eval: &CandidateEvaluation, xi: f64) -> Vec<usize> {
    eval.selected_slots
        .iter()
        .copied()
        .filter(|&l| eval.values[l].re < xi)
        .collect()
}

/// Fits the window anchored at bucket `i` and returns the raw evaluation.
pub fn evaluate_window(
    y: &AliasedSpectrumMatrix,
    i: usize,
    cfg: &DetectorConfig,
) -> Result<(CandidateEvaluation, bool)> {
    let sys = build_window_system_wrapped(y, i, cfg.d, cfg.n_s)?;
    let coeffs = solve(&sys, cfg.solver);
    Ok((evaluate_candidates(&coeffs, i, &y.config), coeffs.degenerate))
}

/// Detects occupied slots in the window `[i, i + d)`.
pub fn detect_window(y: &AliasedSpectrumMatrix, i: usize, cfg: &DetectorConfig) -> Result<BucketDecision> {
    cfg.validate(&y.config)?;
    let xi = cfg.threshold()?;
    detect_window_with(y, i, cfg, xi)
}

fn detect_window_with(
    y: &AliasedSpectrumMatrix,
    i: usize,
    cfg: &DetectorConfig,
    xi: f64,
) -> Result<BucketDecision> {
    let (evaluation, degenerate) = evaluate_window(y, i, cfg)?;
    let occupied_slots = accept(&evaluation, xi);
    let decision = BucketDecision {
        bucket: i,
        width: cfg.d,
        occupied_slots,
        evaluation,
        threshold_used: xi,
        demoted_slots: Vec::new(),
        promoted_slots: Vec::new(),
        degenerate,
    };
    Ok(if cfg.worst_case_filter {
        worst_case_filter(&decision, y, cfg.worst_case_rule)
    } else {
        decision
    })
}

/// Anchors of the scan: `0, stride, 2 stride, ...` below the bucket count.
pub fn window_anchors(coset: &CosetConfig, stride: usize) -> Vec<usize> {
    (0..coset.buckets()).step_by(stride).collect()
}

/// Runs [`detect_window`] at every anchor. Windows are independent and are
/// evaluated in parallel; the output is ordered by anchor.
pub fn scan_spectrum(y: &AliasedSpectrumMatrix, cfg: &DetectorConfig) -> Result<Vec<BucketDecision>> {
    cfg.validate(&y.config)?;
    let xi = cfg.threshold()?;
    window_anchors(&y.config, cfg.stride)
        .into_par_iter()
        .map(|i| detect_window_with(y, i, cfg, xi))
        .collect()
}

/// Applies the worst-case filter to one decision.
pub fn worst_case_filter(
    decision: &BucketDecision,
    y: &AliasedSpectrumMatrix,
    rule: WorstCaseRule,
) -> BucketDecision {
    if decision.occupied_slots.is_empty() && matches!(rule, WorstCaseRule::ConstantProximity { .. }) {
        return decision.clone();
    }
    let kept = match rule {
        WorstCaseRule::ConstantProximity { kappa, tolerance } => {
            constant_proximity(&decision.evaluation, &decision.occupied_slots, kappa, tolerance)
        }
        WorstCaseRule::Refit { significance } => {
            let pool: Vec<usize> = (0..decision.evaluation.values.len())
                .filter(|&l| decision.real(l) < decision.threshold_used)
                .collect();
            refit_select(
                y,
                decision.bucket,
                decision.width,
                &decision.occupied_slots,
                &pool,
                decision.evaluation.selected_slots.len(),
                significance,
            )
        }
    };
    let mut out = decision.clone();
    out.demoted_slots = decision
        .occupied_slots
        .iter()
        .copied()
        .filter(|l| !kept.contains(l))
        .collect();
    out.promoted_slots = kept
        .iter()
        .copied()
        .filter(|l| !decision.occupied_slots.contains(l))
        .collect();
    out.occupied_slots = kept;
    out
}

/// Magnitude-based rule; needs at least two accepted slots to compare.
pub fn constant_proximity(
    eval: &CandidateEvaluation,
    accepted: &[usize],
    kappa: f64,
    tolerance: f64,
) -> Vec<usize> {
    if accepted.len() < 2 {
        return accepted.to_vec();
    }
    let reference = accepted
        .iter()
        .map(|&l| eval.magnitudes[l])
        .fold(f64::INFINITY, f64::min);
    accepted
        .iter()
        .copied()
        .filter(|&l| {
            let m = eval.magnitudes[l];
            let near = WORST_CASE_CONSTANTS
                .iter()
                .any(|&c| (m - c).abs() <= tolerance * c);
            !(m > kappa * reference && near)
        })
        .collect()
}

/// Residual energy of the rows of `r` after projecting each onto the span of
/// the candidate Vandermonde columns in `slots`.
fn projection_rss(r: &DMatrix<Complex64>, roots: &[Complex64], slots: &[usize]) -> f64 {
    let total = r.norm_squared();
    if slots.is_empty() {
        return total;
    }
    let ncos = r.ncols();
    let w = DMatrix::from_fn(ncos, slots.len(), |k, j| roots[slots[j]].powu(k as u32));
    let q = w.qr().q();
    let mut rss = 0.0;
    for row in r.row_iter() {
        let v: DVector<Complex64> = row.transpose();
        let resid = &v - &q * (q.adjoint() * &v);
        rss += resid.norm_squared();
    }
    rss
}

/// Residual energies and F-test p-values for a candidate support on one
/// window. Rows are reduced to their `r x r` triangular factor once.
struct RefitWindow {
    r: DMatrix<Complex64>,
    roots: Vec<Complex64>,
    d: usize,
    ncos: usize,
    floor_var: f64,
}

impl RefitWindow {
    fn new(y: &AliasedSpectrumMatrix, i: usize, d: usize) -> Self {
        let ncos = y.config.r;
        let v = aligned_rows(y, i, d);
        let r = if d > ncos { v.qr().r() } else { v };
        Self {
            r,
            roots: candidate_roots(i, &y.config),
            d,
            ncos,
            // Rows carrying only rounding residue must not make a slot look
            // significant, so the noise variance estimate is floored.
            floor_var: (crate::flpcore::system::SV_FLOOR_REL * y.rms()).powi(2),
        }
    }

    fn rss(&self, slots: &[usize]) -> f64 {
        projection_rss(&self.r, &self.roots, slots)
    }

    /// p-value of adding the last slot of `larger` to `smaller`.
    fn p_value(&self, smaller: &[usize], larger: &[usize]) -> f64 {
        let rss_full = self.rss(larger);
        self.drop_p_value(self.rss(smaller) - rss_full, rss_full, larger.len())
    }

    /// p-value of a residual drop `delta` against a fitted support of `size`
    /// slots with residual `rss_full`.
    fn drop_p_value(&self, delta: f64, rss_full: f64, size: usize) -> f64 {
        let dof = self.ncos - size;
        let sigma2 = (rss_full / (self.d * dof) as f64).max(self.floor_var);
        FisherSnedecor::new((2 * self.d) as f64, (2 * self.d * dof) as f64)
            .expect("positive degrees of freedom")
            .sf(delta.max(0.0) / self.d as f64 / sigma2)
    }
}

/// Refit selection on the window rows.
///
/// Starting from `initial`, the support is improved by three moves, repeated
/// until none applies:
///
/// * remove the slot whose removal is least significant, if not significant;
/// * add the candidate from `pool` giving the largest significant drop in
///   residual energy, while fewer than `n_max` (at most `r - 1`) slots are kept;
/// * swap a kept slot for a pool candidate when that lowers the residual.
///
/// Significance is a nested-model F test at level `significance`: under noise
/// alone the drop for a spurious slot is `sigma^2 chi^2_{2d} / 2`, independent
/// of the `2d(r - |T|)` residual degrees of freedom.
pub fn refit_select(
    y: &AliasedSpectrumMatrix,
    i: usize,
    d: usize,
    initial: &[usize],
    pool: &[usize],
    n_max: usize,
    significance: f64,
) -> Vec<usize> {
    let w = RefitWindow::new(y, i, d);
    let cap = n_max.min(w.ncos - 1);
    let mut kept: Vec<usize> = initial.iter().copied().take(cap).collect();
    // Removals and additions alternate at most a few times in practice; the
    // bound only guards against a cycle.
    for _ in 0..4 * (pool.len() + cap + 1) {
        if let Some(pos) = least_significant(&w, &kept, significance) {
            kept.remove(pos);
            continue;
        }
        let rss = w.rss(&kept);
        let outside: Vec<usize> = pool.iter().copied().filter(|l| !kept.contains(l)).collect();
        if kept.len() < cap {
            let best = outside
                .iter()
                .map(|&l| {
                    let mut t = kept.clone();
                    t.push(l);
                    let r = w.rss(&t);
                    (t, r)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((t, _)) = best {
                if w.p_value(&kept, &t) < significance {
                    kept = t;
                    continue;
                }
            }
        }
        // A swap between equal-size supports must lower the residual by as
        // much as a significant added slot would.
        let swap = (0..kept.len())
            .flat_map(|pos| outside.iter().map(move |&l| (pos, l)))
            .map(|(pos, l)| {
                let mut t = kept.clone();
                t[pos] = l;
                let r = w.rss(&t);
                (t, r)
            })
            .filter(|(t, r)| w.drop_p_value(rss - r, *r, t.len()) < significance)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match swap {
            Some((t, _)) => kept = t,
            None => break,
        }
    }
    kept.sort_unstable();
    kept
}

/// Position of the kept slot whose removal is least significant, when that
/// removal is not significant at `significance`.
fn least_significant(w: &RefitWindow, kept: &[usize], significance: f64) -> Option<usize> {
    (0..kept.len())
        .map(|pos| {
            let mut smaller = kept.to_vec();
            let l = smaller.remove(pos);
            let mut larger = smaller.clone();
            larger.push(l);
            (pos, w.p_value(&smaller, &larger))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .filter(|&(_, p)| p >= significance)
        .map(|(pos, _)| pos)
}

/// Bins covered by the accepted decisions, without trimming: slot `l` of the
/// window at `a` covers `a + m + l M (mod N)`, `m < width`.
pub fn coverage_mask(decisions: &[BucketDecision], coset: &CosetConfig) -> Vec<bool> {
    let (n, m) = (coset.n_samples, coset.buckets());
    let mut mask = vec![false; n];
    for dec in decisions {
        for &l in &dec.occupied_slots {
            for k in 0..dec.width {
                mask[(dec.bucket + k + l * m) % n] = true;
            }
        }
    }
    mask
}

/// Maximal runs `(start, len)` of set entries in a circular mask.
fn circular_runs(mask: &[bool]) -> Vec<(usize, usize)> {
    let n = mask.len();
    if mask.iter().all(|&b| b) {
        return vec![(0, n)];
    }
    // Start scanning just after a clear entry so no run is split at index 0.
    let origin = (0..n).find(|&k| !mask[k]).map(|k| k + 1).unwrap_or(0);
    let mut runs = Vec::new();
    let mut cur: Option<(usize, usize)> = None;
    for step in 0..n {
        let k = (origin + step) % n;
        if mask[k] {
            cur = Some(match cur {
                Some((s, len)) => (s, len + 1),
                None => (k, 1),
            });
        } else if let Some(run) = cur.take() {
            runs.push(run);
        }
    }
    if let Some(run) = cur {
        runs.push(run);
    }
    runs
}

/// Sorts, merges touching or overlapping intervals, drops short ones and
/// recomputes band parameters. Idempotent.
pub fn resolve_support(
    intervals: &[(usize, usize)],
    bin_width_hz: f64,
    min_band_bins: usize,
    rf_offset_hz: Option<f64>,
) -> SupportEstimate {
    let mut iv: Vec<(usize, usize)> = intervals.iter().copied().filter(|(lo, hi)| hi > lo).collect();
    iv.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(iv.len());
    for (lo, hi) in iv {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged.retain(|(lo, hi)| hi - lo >= min_band_bins.max(1));
    let mut est = SupportEstimate {
        n_detected: merged.len(),
        bands: Vec::new(),
        intervals: merged,
        rf_offset_hz: None,
    };
    est.bands = estimate_bands(&est, bin_width_hz);
    match rf_offset_hz {
        Some(off) => est.with_rf_offset(off),
        None => est,
    }
}

/// Resolves the decisions of a scan into disjoint occupied intervals.
pub fn resolve_boundaries(
    decisions: &[BucketDecision],
    cfg: &DetectorConfig,
    coset: &CosetConfig,
    bin_width_hz: f64,
) -> SupportEstimate {
    let (n, m) = (coset.n_samples, coset.buckets());
    let mut mask = vec![false; n];
    for dec in decisions {
        let end = (dec.bucket + cfg.stride).min(m);
        for &l in &dec.occupied_slots {
            for b in dec.bucket..end {
                mask[b + l * m] = true;
            }
        }
    }
    let trim = cfg.d - cfg.stride;
    let mut intervals = Vec::new();
    for (start, len) in circular_runs(&mask) {
        if len <= trim {
            continue;
        }
        let lo = (start + trim) % n;
        let len = len - trim;
        if lo + len <= n {
            intervals.push((lo, lo + len));
        } else {
            intervals.push((lo, n));
            intervals.push((0, lo + len - n));
        }
    }
    resolve_support(&intervals, bin_width_hz, cfg.min_band_bins, None)
}

/// Carrier (interval midpoint) and bandwidth of every interval, plus the
/// optional carrier offset.
pub fn estimate_bands(support: &SupportEstimate, bin_width_hz: f64) -> Vec<Band> {
    let off = support.rf_offset_hz.unwrap_or(0.0);
    support
        .intervals
        .iter()
        .map(|&(lo, hi)| Band {
            carrier_hz: (lo + hi) as f64 / 2.0 * bin_width_hz + off,
            bandwidth_hz: (hi - lo) as f64 * bin_width_hz,
        })
        .collect()
}

/// Full pipeline from the aliased spectrum to the support estimate.
pub fn detect_support(
    y: &AliasedSpectrumMatrix,
    cfg: &DetectorConfig,
    bin_width_hz: f64,
) -> Result<(Vec<BucketDecision>, SupportEstimate)> {
    let decisions = scan_spectrum(y, cfg)?;
    let mut support = resolve_boundaries(&decisions, cfg, &y.config, bin_width_hz);
    if cfg.refine_edges {
        let refined = refine_edges(&support.intervals, y, cfg.d);
        support = resolve_support(&refined, bin_width_hz, cfg.min_band_bins, None);
    }
    Ok((decisions, support))
}

/// Energy of bin `f` along its own slot, after projecting out the other slots
/// of the same bucket that `mask` marks occupied.
fn slot_energy(y: &AliasedSpectrumMatrix, mask: &[bool], f: usize) -> f64 {
    let cfg = &y.config;
    let m = cfg.buckets();
    let (b, l) = (f % m, f / m);
    let others: Vec<usize> = (0..cfg.alpha)
        .filter(|&s| s != l && mask[b + s * m])
        .take(cfg.r - 2)
        .collect();
    let col = |s: usize| {
        let z = candidate_root(b, s, cfg);
        DVector::from_fn(cfg.r, |k, _| z.powu(k as u32))
    };
    let mut u = col(l);
    if !others.is_empty() {
        let w = DMatrix::from_fn(cfg.r, others.len(), |k, j| candidate_root(b, others[j], cfg).powu(k as u32));
        let q = w.qr().q();
        u -= &q * (q.adjoint() * &u);
    }
    let norm2 = u.norm_squared();
    if norm2 == 0.0 {
        return 0.0;
    }
    let row = DVector::from_fn(cfg.r, |k, _| y.get(k, b));
    u.dotc(&row).norm_sqr() / norm2
}

/// Split point of `e` maximizing the two-segment exponential profile
/// likelihood `-n_a ln mean_a - n_b ln mean_b`, searched over `ts` (offsets
/// into `e`, each leaving both segments non-empty).
fn change_point(e: &[f64], ts: std::ops::Range<usize>) -> Option<usize> {
    let mut prefix = vec![0.0; e.len() + 1];
    for (k, v) in e.iter().enumerate() {
        prefix[k + 1] = prefix[k] + v;
    }
    let total = prefix[e.len()];
    let seg = |sum: f64, len: usize| -(len as f64) * (sum / len as f64).ln();
    ts.filter(|&t| t > 0 && t < e.len())
        .map(|t| (t, seg(prefix[t], t) + seg(total - prefix[t], e.len() - t)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(t, _)| t)
}

/// Moves every interval edge to the change point of the per-bin slot energy.
///
/// Windowed decisions flag a band only once it fills part of the window, so
/// trimmed edges sit inside the band by that many bins. Rows are re-examined
/// individually here: each bin's energy along its slot, with colliding
/// occupied slots projected out, is exponential with one mean outside the
/// band and a larger one inside. The edge is the split maximizing the
/// profile likelihood within `d` bins of the trimmed edge, not crossing a
/// neighbouring interval. Both means are estimated, so the noise level need
/// not be known.
pub fn refine_edges(intervals: &[(usize, usize)], y: &AliasedSpectrumMatrix, d: usize) -> Vec<(usize, usize)> {
    let n = y.config.n_samples;
    let mut mask = vec![false; n];
    for &(lo, hi) in intervals {
        mask[lo..hi].iter_mut().for_each(|b| *b = true);
    }
    // Keeps the log finite on exactly empty bins.
    let floor = (crate::flpcore::system::SV_FLOOR_REL * y.rms()).powi(2);
    let energy = |a: usize, b: usize| -> Vec<f64> { (a..b).map(|f| slot_energy(y, &mask, f) + floor).collect() };
    intervals
        .iter()
        .enumerate()
        .map(|(k, &(lo, hi))| {
            let prev_hi = if k > 0 { intervals[k - 1].1 } else { 0 };
            let next_lo = intervals.get(k + 1).map_or(n, |iv| iv.0);
            let half = (hi - lo) / 2;
            let a = lo.saturating_sub(d).max(prev_hi);
            let b = (lo + d.min(half.max(1))).min(hi);
            let new_lo = change_point(&energy(a, b), 1..b - a).map_or(lo, |t| a + t);
            let a = hi.saturating_sub(d.min(half.max(1))).max(new_lo);
            let b = (hi + d).min(next_lo);
            let new_hi = change_point(&energy(a, b), 1..b - a).map_or(hi, |t| a + t);
            (new_lo, new_hi.max(new_lo))
        })
        .collect()
}
