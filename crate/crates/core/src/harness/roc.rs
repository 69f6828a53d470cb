//! Receiver operating characteristics over full-rate bins.
//!
//! A detection is an occupied bin that is flagged; a false alarm is an
//! unoccupied bin that is flagged. Both counts are normalized by the occupied
//! and unoccupied totals. Each detector is reduced to decision units: a
//! (window, slot) pair for the polynomial detector, a bucket for energy
//! detection. A unit carries a scalar statistic and the number of occupied and
//! unoccupied bins it flags. Sweeping the threshold over the pooled units
//! traces the whole curve, and reading it at a false-alarm target gives the
//! detection rate at matched empirical false-alarm probability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ed::{ed_statistic, hybrid_slots};
use super::{make_trial, ExperimentConfig};
use crate::detector::{evaluate_window, BucketDecision, DetectorConfig};
use crate::error::Result;
use crate::flpcore::SolverMethod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VariantKind {
    /// Polynomial detector on non-overlapping tiles of width `d`.
    Flp { d: usize, solver: SolverMethod },
    /// Bucket energy, all slots flagged.
    EdPlain,
    /// Bucket energy restricted to the slots ranked by the polynomial fit of
    /// width `d`.
    EdHybrid { d: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocVariant {
    pub name: String,
    pub kind: VariantKind,
}

impl RocVariant {
    pub fn flp(d: usize, solver: SolverMethod) -> Self {
        let tag = match solver {
            SolverMethod::TLS => "TLS",
            _ => "LS",
        };
        Self {
            name: format!("{tag}-FLP d={d}"),
            kind: VariantKind::Flp { d, solver },
        }
    }

    pub fn ed_plain() -> Self {
        Self {
            name: "ED".into(),
            kind: VariantKind::EdPlain,
        }
    }

    pub fn ed_hybrid(d: usize) -> Self {
        Self {
            name: format!("ED-hybrid d={d}"),
            kind: VariantKind::EdHybrid { d },
        }
    }

    /// Default comparison set derived from the detector configuration.
    pub fn defaults(det: &DetectorConfig) -> Vec<Self> {
        let mut v = vec![RocVariant::flp(det.d, SolverMethod::LS), RocVariant::flp(det.d, SolverMethod::TLS)];
        if det.d >= 10 && det.d % 10 == 0 {
            v.push(RocVariant::flp(det.d / 10, SolverMethod::LS));
        }
        v.push(RocVariant::ed_plain());
        v.push(RocVariant::ed_hybrid(det.d));
        v
    }
}

/// Energy statistics are binned at this resolution; thresholds fall on bin
/// edges.
const ED_BIN: f64 = 0.01;
const ED_BINS: usize = 40_000;

#[derive(Debug, Clone)]
enum Acc {
    /// `(statistic, occupied, unoccupied)`; flagged when statistic < threshold.
    Exact(Vec<(f64, u64, u64)>),
    /// Energy histogram; flagged when energy > threshold.
    Energy { occ: Vec<u64>, unocc: Vec<u64> },
}

impl Acc {
    fn new(kind: &VariantKind) -> Self {
        match kind {
            VariantKind::Flp { .. } => Acc::Exact(Vec::new()),
            _ => Acc::Energy {
                occ: vec![0; ED_BINS + 1],
                unocc: vec![0; ED_BINS + 1],
            },
        }
    }

    fn push_energy(&mut self, t: f64, occ_n: u64, unocc_n: u64) {
        if let Acc::Energy { occ, unocc } = self {
            let k = ((t / ED_BIN).floor().max(0.0) as usize).min(ED_BINS);
            occ[k] += occ_n;
            unocc[k] += unocc_n;
        }
    }

    fn merge(self, other: Self) -> Self {
        match (self, other) {
            (Acc::Exact(mut a), Acc::Exact(b)) => {
                a.extend(b);
                Acc::Exact(a)
            }
            (Acc::Energy { occ: mut o1, unocc: mut u1 }, Acc::Energy { occ: o2, unocc: u2 }) => {
                o1.iter_mut().zip(o2).for_each(|(a, b)| *a += b);
                u1.iter_mut().zip(u2).for_each(|(a, b)| *a += b);
                Acc::Energy { occ: o1, unocc: u1 }
            }
            _ => unreachable!("accumulators of one variant share a kind"),
        }
    }

    /// Curve points `(threshold, flagged occupied, flagged unoccupied)` from
    /// the most conservative threshold outward, starting at the origin.
    fn sweep(self) -> Vec<(f64, u64, u64)> {
        let mut pts = vec![];
        match self {
            Acc::Exact(mut units) => {
                units.retain(|u| u.0.is_finite());
                units.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
                pts.push((units.first().map_or(0.0, |u| u.0), 0, 0));
                let (mut co, mut cu) = (0u64, 0u64);
                let mut k = 0;
                while k < units.len() {
                    let s = units[k].0;
                    while k < units.len() && units[k].0 == s {
                        co += units[k].1;
                        cu += units[k].2;
                        k += 1;
                    }
                    let next = units.get(k).map_or(f64::INFINITY, |u| (s + u.0) / 2.0);
                    pts.push((next, co, cu));
                }
            }
            Acc::Energy { occ, unocc } => {
                pts.push((f64::INFINITY, 0, 0));
                let (mut co, mut cu) = (0u64, 0u64);
                for k in (0..=ED_BINS).rev() {
                    if occ[k] == 0 && unocc[k] == 0 {
                        continue;
                    }
                    co += occ[k];
                    cu += unocc[k];
                    pts.push((k as f64 * ED_BIN, co, cu));
                }
            }
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub p_f_target: f64,
    pub p_f_empirical: f64,
    pub p_d_empirical: f64,
    pub detector_name: String,
    pub snr_db: f64,
    /// Threshold on the detector statistic realizing this point.
    pub threshold: f64,
    pub occupied_bins: u64,
    pub unoccupied_bins: u64,
    /// Decision units containing occupied bins (bins inside a unit are flagged
    /// together, so this is the effective sample size of `p_d`).
    pub occupied_units: u64,
    pub unoccupied_units: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub detector_name: String,
    pub snr_db: f64,
    pub occupied_bins: u64,
    pub unoccupied_bins: u64,
    pub occupied_units: u64,
    pub unoccupied_units: u64,
    /// `(threshold, p_f, p_d)` in order of increasing `p_f`.
    pub points: Vec<(f64, f64, f64)>,
}

impl RocCurve {
    /// Best detection rate with empirical false alarm at most `target`.
    pub fn at(&self, target: f64) -> RocPoint {
        let best = self
            .points
            .iter()
            .filter(|p| p.1 <= target)
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.1.total_cmp(&a.1)))
            .copied()
            .unwrap_or((f64::NAN, 0.0, 0.0));
        RocPoint {
            p_f_target: target,
            p_f_empirical: best.1,
            p_d_empirical: best.2,
            detector_name: self.detector_name.clone(),
            snr_db: self.snr_db,
            threshold: best.0,
            occupied_bins: self.occupied_bins,
            unoccupied_bins: self.unoccupied_bins,
            occupied_units: self.occupied_units,
            unoccupied_units: self.unoccupied_units,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    pub curves: Vec<RocCurve>,
    pub points: Vec<RocPoint>,
}

impl RocReport {
    pub fn curve(&self, name: &str, snr_db: f64) -> Option<&RocCurve> {
        self.curves
            .iter()
            .find(|c| c.detector_name == name && c.snr_db == snr_db)
    }
}

struct TrialUnits {
    accs: Vec<Acc>,
    units: Vec<(u64, u64)>,
}

fn tile_decisions(
    trial_y: &crate::mcsampler::AliasedSpectrumMatrix,
    det: &DetectorConfig,
) -> Result<Vec<BucketDecision>> {
    let m = trial_y.config.buckets();
    (0..m)
        .step_by(det.d)
        .map(|a| {
            let (evaluation, degenerate) = evaluate_window(trial_y, a, det)?;
            Ok(BucketDecision {
                bucket: a,
                width: det.d,
                occupied_slots: Vec::new(),
                evaluation,
                threshold_used: f64::NAN,
                demoted_slots: Vec::new(),
                promoted_slots: Vec::new(),
                degenerate,
            })
        })
        .collect()
}

fn trial_units(
    cfg: &ExperimentConfig,
    variants: &[RocVariant],
    truth: &[bool],
    snr_db: f64,
    t: usize,
) -> Result<TrialUnits> {
    let trial = make_trial(&cfg.scene, &cfg.coset, snr_db, cfg.noise_power, cfg.seed, t)?;
    let y = &trial.y;
    let coset = cfg.coset;
    let (n, m) = (coset.n_samples, coset.buckets());
    let mut accs = Vec::with_capacity(variants.len());
    let mut units = Vec::with_capacity(variants.len());
    let mut energy: Option<Vec<f64>> = None;
    for v in variants {
        let mut acc = Acc::new(&v.kind);
        let (mut uo, mut uu) = (0u64, 0u64);
        match v.kind {
            VariantKind::Flp { d, solver } => {
                let det = DetectorConfig {
                    d,
                    stride: d,
                    solver,
                    ..cfg.detector.clone()
                };
                let Acc::Exact(list) = &mut acc else { unreachable!() };
                for dec in tile_decisions(y, &det)? {
                    let span = d.min(m - dec.bucket);
                    for l in 0..coset.alpha {
                        let occ = (0..span).filter(|k| truth[(dec.bucket + k + l * m) % n]).count() as u64;
                        let unocc = span as u64 - occ;
                        let stat = if dec.evaluation.selected_slots.contains(&l) {
                            dec.real(l)
                        } else {
                            f64::INFINITY
                        };
                        if occ > 0 {
                            uo += 1;
                        } else {
                            uu += 1;
                        }
                        list.push((stat, occ, unocc));
                    }
                }
            }
            VariantKind::EdPlain => {
                let e = energy.get_or_insert_with(|| ed_statistic(y, trial.noise_variance).expect("noise variance"));
                for (b, &tb) in e.iter().enumerate() {
                    let occ = (0..coset.alpha).filter(|&l| truth[b + l * m]).count() as u64;
                    acc.push_energy(tb, occ, coset.alpha as u64 - occ);
                    if occ > 0 {
                        uo += 1;
                    } else {
                        uu += 1;
                    }
                }
            }
            VariantKind::EdHybrid { d } => {
                let det = DetectorConfig {
                    d,
                    stride: d,
                    solver: SolverMethod::LS,
                    ..cfg.detector.clone()
                };
                let decisions = tile_decisions(y, &det)?;
                let e = energy.get_or_insert_with(|| ed_statistic(y, trial.noise_variance).expect("noise variance"));
                for (b, bins) in hybrid_slots(&decisions, y).into_iter().enumerate() {
                    let occ = bins.iter().filter(|&&f| truth[f]).count() as u64;
                    acc.push_energy(e[b], occ, bins.len() as u64 - occ);
                    if occ > 0 {
                        uo += 1;
                    } else {
                        uu += 1;
                    }
                }
            }
        }
        accs.push(acc);
        units.push((uo, uu));
    }
    Ok(TrialUnits { accs, units })
}

/// Runs the ROC experiment for every SNR of the grid and every variant. All
/// variants see the same trials.
pub fn run_roc(cfg: &ExperimentConfig, variants: &[RocVariant]) -> Result<RocReport> {
    cfg.validate()?;
    for v in variants {
        if let VariantKind::Flp { d, .. } | VariantKind::EdHybrid { d } = v.kind {
            DetectorConfig {
                d,
                stride: d,
                ..cfg.detector.clone()
            }
            .validate(&cfg.coset)?;
        }
    }
    let truth = cfg.scene.occupancy_mask();
    let occupied_bins_per_trial = truth.iter().filter(|&&b| b).count() as u64;
    let unoccupied_bins_per_trial = truth.len() as u64 - occupied_bins_per_trial;
    let mut curves = Vec::new();
    let mut points = Vec::new();
    for &snr in &cfg.snr_db_grid {
        let init = || TrialUnits {
            accs: variants.iter().map(|v| Acc::new(&v.kind)).collect(),
            units: vec![(0u64, 0u64); variants.len()],
        };
        let combine = |a: TrialUnits, b: TrialUnits| TrialUnits {
            accs: a.accs.into_iter().zip(b.accs).map(|(x, y)| x.merge(y)).collect(),
            units: a.units.iter().zip(&b.units).map(|(x, y)| (x.0 + y.0, x.1 + y.1)).collect(),
        };
        let total = (0..cfg.trials)
            .into_par_iter()
            .map(|t| trial_units(cfg, variants, &truth, snr, t))
            .try_fold(init, |acc, tu| tu.map(|tu| combine(acc, tu)))
            .try_reduce(init, |a, b| Ok(combine(a, b)))?;
        let (merged, units) = (total.accs, total.units);
        let total_occ = occupied_bins_per_trial * cfg.trials as u64;
        let total_unocc = unoccupied_bins_per_trial * cfg.trials as u64;
        for (k, acc) in merged.into_iter().enumerate() {
            let pts = acc
                .sweep()
                .into_iter()
                .map(|(th, co, cu)| {
                    (
                        th,
                        cu as f64 / total_unocc.max(1) as f64,
                        co as f64 / total_occ.max(1) as f64,
                    )
                })
                .collect();
            let curve = RocCurve {
                detector_name: variants[k].name.clone(),
                snr_db: snr,
                occupied_bins: total_occ,
                unoccupied_bins: total_unocc,
                occupied_units: units[k].0,
                unoccupied_units: units[k].1,
                points: pts,
            };
            points.extend(cfg.p_f_grid.iter().map(|&p| curve.at(p)));
            curves.push(curve);
        }
    }
    Ok(RocReport { curves, points })
}
