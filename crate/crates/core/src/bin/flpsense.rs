//! Command-line experiment runner.
//!
//! Every verb reads an optional JSON config (`--config`), applies the
//! `--seed`, `--trials` and `--snr-db` overrides, writes its tables into
//! `--out` and finishes with `manifest.json`. With `--check` the verb also
//! evaluates its invariants and exits with status 2 if any fails.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use flpsense::detector::{coverage_mask, detect_support, DetectorConfig};
use flpsense::harness::manifest::Manifest;
use flpsense::harness::scenes::*;
use flpsense::harness::*;
use flpsense::io::*;
use flpsense::mcsampler::{aliased_spectrum, CosetConfig};
use flpsense::siggen::{add_awgn, synthesize_multiband, MultibandSpec};

#[derive(Parser)]
#[command(name = "flpsense", version, about = "Sub-Nyquist multiband detection with frequency locator polynomials")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Synthesize a multiband time series from a scene.
    Generate(Common),
    /// Multi-coset sample a time series into an aliased spectrum matrix.
    Sample(Common),
    /// Recover the occupied support from an aliased spectrum matrix.
    Detect(Common),
    /// ROC curves of the polynomial detector and energy detection.
    Roc(Common),
    /// Raw candidate evaluations and their summary statistics.
    Hist(Common),
    /// Carrier and bandwidth estimation errors.
    Estimate(Common),
    /// Average candidate magnitudes for one, two and three collisions.
    Weights(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration; a built-in desk configuration is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Input file for `sample` (time series) and `detect` (matrix).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// SNR grid override, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    /// Evaluate invariants and exit non-zero on a violation.
    #[arg(long)]
    check: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GenerateConfig {
    scene: MultibandSpec,
    /// Noise level relative to the signal; noiseless when absent.
    #[serde(default)]
    snr_db: Option<f64>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SampleConfig {
    alpha: usize,
    r: usize,
    #[serde(default = "one")]
    shift_step: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DetectConfig {
    detector: DetectorConfig,
    /// Overrides the matrix sidecar rate; bins are reported at 1 Hz when
    /// neither is known.
    #[serde(default)]
    sample_rate_hz: Option<f64>,
    #[serde(default)]
    rf_offset_hz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RocConfig {
    #[serde(flatten)]
    experiment: ExperimentConfig,
    /// Defaults to [`RocVariant::defaults`] of the detector.
    #[serde(default)]
    variants: Option<Vec<RocVariant>>,
}

#[derive(Serialize)]
struct IntervalRow {
    lo_bin: usize,
    hi_bin: usize,
    carrier_hz: f64,
    bandwidth_hz: f64,
}

#[derive(Serialize)]
struct DecisionRow {
    bucket: usize,
    width: usize,
    threshold: f64,
    occupied_slots: String,
    selected_slots: String,
    demoted_slots: String,
    promoted_slots: String,
    degenerate: bool,
}

#[derive(Serialize)]
struct RocPointRow<'a> {
    detector: &'a str,
    snr_db: f64,
    p_f_target: f64,
    p_f_empirical: f64,
    p_d_empirical: f64,
    threshold: f64,
    occupied_bins: u64,
    unoccupied_bins: u64,
    occupied_units: u64,
    unoccupied_units: u64,
}

#[derive(Serialize)]
struct RocCurveRow<'a> {
    detector: &'a str,
    snr_db: f64,
    threshold: f64,
    p_f: f64,
    p_d: f64,
}

#[derive(Serialize)]
struct WeightRow {
    snr_db: f64,
    n_i: usize,
    true_slots: String,
    slot: usize,
    is_true_root: bool,
    mean_magnitude: f64,
    true_slots_lowest: bool,
    separation_ratio: f64,
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn load<T: DeserializeOwned>(path: &Option<PathBuf>, default: impl FnOnce() -> T) -> Result<T> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(default()),
    }
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: impl IntoIterator<Item = T>, manifest: &mut Manifest) -> Result<()> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    manifest.outputs.push(name.into());
    Ok(())
}

fn apply_overrides(cfg: &mut ExperimentConfig, args: &Common) {
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(g) = &args.snr_db {
        cfg.snr_db_grid = g.clone();
    }
    cfg.outputs = args.out.clone();
}

fn experiment_default(scene: MultibandSpec, det: DetectorConfig, snr: &[f64], trials: usize) -> ExperimentConfig {
    let coset = desk_coset(scene.n_samples);
    let mut cfg = ExperimentConfig::new(scene, coset, det);
    cfg.snr_db_grid = snr.to_vec();
    cfg.trials = trials;
    cfg
}

fn intervals_table(intervals: &[(usize, usize)], bin_hz: f64, offset: f64) -> Vec<IntervalRow> {
    intervals
        .iter()
        .map(|&(lo, hi)| IntervalRow {
            lo_bin: lo,
            hi_bin: hi,
            carrier_hz: (lo + hi) as f64 / 2.0 * bin_hz + offset,
            bandwidth_hz: (hi - lo) as f64 * bin_hz,
        })
        .collect()
}

fn generate(args: &Common, out: &Path) -> Result<Manifest> {
    let mut cfg: GenerateConfig = load(&args.config, || GenerateConfig {
        scene: estimation_scene(100_000),
        snr_db: None,
        seed: 0,
    })?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(g) = &args.snr_db {
        cfg.snr_db = g.first().copied();
    }
    let clean = synthesize_multiband(&cfg.scene, flpsense::rng::sub_seed(cfg.seed, 0xA11A5))?;
    let x = match cfg.snr_db {
        Some(snr) => add_awgn(&clean, snr, flpsense::rng::sub_seed(cfg.seed, 0x0015E))?.0,
        None => clean,
    };
    let mut m = Manifest::new("generate", &cfg)?;
    write_time_series(&out.join("signal.iq"), &x)?;
    write_json(&out.join("scene.json"), &cfg.scene)?;
    m.outputs.extend(["signal.iq".into(), "signal.iq.json".into(), "scene.json".into()]);
    let rows = intervals_table(&cfg.scene.occupied_intervals(), cfg.scene.bin_hz(), 0.0);
    write_csv(out, "occupancy.csv", rows, &mut m)?;
    if args.check {
        m.checks.push(("series_valid".into(), x.validate().is_ok()));
        m.checks.push(("length_matches_scene".into(), x.len() == cfg.scene.n_samples));
    }
    Ok(m)
}

fn sample(args: &Common, out: &Path) -> Result<Manifest> {
    let input = args.input.as_ref().context("sample needs --input <time series>")?;
    let cfg: SampleConfig = load(&args.config, || SampleConfig {
        alpha: DESK_ALPHA,
        r: DESK_COSETS,
        shift_step: 1,
    })?;
    let x = read_time_series(input)?;
    let coset = CosetConfig::new(cfg.alpha, cfg.r, cfg.shift_step, x.len())?;
    let y = aliased_spectrum(&x, &coset)?;
    let mut m = Manifest::new("sample", &cfg)?;
    write_matrix_at_rate(&out.join("aliased.iq"), &y, Some(x.sample_rate_hz))?;
    m.outputs.extend(["aliased.iq".into(), "aliased.iq.json".into()]);
    if args.check {
        // Unitary per-coset transforms preserve each coset's energy.
        let total: f64 = y.values().iter().map(|z| z.norm_sqr()).sum();
        let samples: f64 = (0..coset.r)
            .map(|s| {
                x.samples
                    .iter()
                    .skip(s * coset.shift_step)
                    .step_by(coset.alpha)
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
            })
            .sum();
        m.checks.push(("parseval".into(), (total - samples).abs() <= 1e-9 * samples.max(1.0)));
    }
    Ok(m)
}

fn detect(args: &Common, out: &Path) -> Result<Manifest> {
    let input = args.input.as_ref().context("detect needs --input <aliased matrix>")?;
    let cfg: DetectConfig = load(&args.config, || DetectConfig {
        detector: estimation_detector(),
        sample_rate_hz: None,
        rf_offset_hz: None,
    })?;
    let (y, side) = read_matrix_with_sidecar(input)?;
    let rate = cfg.sample_rate_hz.or(side.sample_rate_hz).unwrap_or(y.config.n_samples as f64);
    let bin_hz = rate / y.config.n_samples as f64;
    let (decisions, support) = detect_support(&y, &cfg.detector, bin_hz)?;
    let support = match cfg.rf_offset_hz {
        Some(off) => support.with_rf_offset(off),
        None => support,
    };
    let mut m = Manifest::new("detect", &cfg)?;
    write_json(&out.join("support.json"), &support)?;
    m.outputs.push("support.json".into());
    let offset = cfg.rf_offset_hz.unwrap_or(0.0);
    write_csv(out, "bands.csv", intervals_table(&support.intervals, bin_hz, offset), &mut m)?;
    let rows = decisions.iter().map(|d| DecisionRow {
        bucket: d.bucket,
        width: d.width,
        threshold: d.threshold_used,
        occupied_slots: join(&d.occupied_slots),
        selected_slots: join(&d.evaluation.selected_slots),
        demoted_slots: join(&d.demoted_slots),
        promoted_slots: join(&d.promoted_slots),
        degenerate: d.degenerate,
    });
    write_csv(out, "decisions.csv", rows, &mut m)?;
    if args.check {
        let n = y.config.n_samples;
        let ordered = support.intervals.windows(2).all(|p| p[0].1 < p[1].0);
        let in_range = support.intervals.iter().all(|&(lo, hi)| lo < hi && hi <= n);
        m.checks.push(("intervals_disjoint_sorted".into(), ordered));
        m.checks.push(("intervals_in_range".into(), in_range));
        if !cfg.detector.refine_edges {
            let covered = coverage_mask(&decisions, &y.config);
            let valid = support.intervals.iter().all(|&(lo, hi)| (lo..hi).all(|f| covered[f]));
            m.checks.push(("support_in_accepted_cells".into(), valid));
        }
    }
    Ok(m)
}

fn roc(args: &Common, out: &Path) -> Result<Manifest> {
    let mut cfg: RocConfig = load(&args.config, || RocConfig {
        experiment: experiment_default(roc_scene(100_000), desk_detector(1000), &[0.0, -10.0], 10),
        variants: None,
    })?;
    apply_overrides(&mut cfg.experiment, args);
    let variants = cfg
        .variants
        .clone()
        .unwrap_or_else(|| RocVariant::defaults(&cfg.experiment.detector));
    cfg.variants = Some(variants.clone());
    let report = run_roc(&cfg.experiment, &variants)?;
    let mut m = Manifest::new("roc", &cfg)?;
    let rows = report.points.iter().map(|p| RocPointRow {
        detector: &p.detector_name,
        snr_db: p.snr_db,
        p_f_target: p.p_f_target,
        p_f_empirical: p.p_f_empirical,
        p_d_empirical: p.p_d_empirical,
        threshold: p.threshold,
        occupied_bins: p.occupied_bins,
        unoccupied_bins: p.unoccupied_bins,
        occupied_units: p.occupied_units,
        unoccupied_units: p.unoccupied_units,
    });
    write_csv(out, "roc_points.csv", rows, &mut m)?;
    let curves = report.curves.iter().flat_map(|c| {
        c.points.iter().map(move |&(threshold, p_f, p_d)| RocCurveRow {
            detector: &c.detector_name,
            snr_db: c.snr_db,
            threshold,
            p_f,
            p_d,
        })
    });
    write_csv(out, "roc_curves.csv", curves, &mut m)?;
    if args.check {
        let probs = report
            .points
            .iter()
            .all(|p| (0.0..=1.0).contains(&p.p_f_empirical) && (0.0..=1.0).contains(&p.p_d_empirical));
        let monotone = report
            .curves
            .iter()
            .all(|c| c.points.windows(2).all(|w| w[0].1 <= w[1].1 && w[0].2 <= w[1].2));
        let matched = report.points.iter().all(|p| p.p_f_empirical <= p.p_f_target);
        m.checks.push(("probabilities_in_unit_interval".into(), probs));
        m.checks.push(("curves_monotone".into(), monotone));
        m.checks.push(("matched_pf_below_target".into(), matched));
    }
    Ok(m)
}

fn hist(args: &Common, out: &Path) -> Result<Manifest> {
    let mut cfg: ExperimentConfig = load(&args.config, || {
        let mut c = experiment_default(empty_scene(100_000), desk_detector(10_000), &[0.0], 100);
        c.noise_power = Some(1.0);
        c
    })?;
    apply_overrides(&mut cfg, args);
    let (rows, summaries) = run_histogram_experiment(&cfg)?;
    let mut m = Manifest::new("hist", &cfg)?;
    write_csv(out, "hist_samples.csv", &rows, &mut m)?;
    write_csv(out, "hist_summary.csv", &summaries, &mut m)?;
    if args.check {
        let ok = summaries.iter().all(|s| s.false_var_re.is_finite() && s.false_var_re >= 0.0);
        m.checks.push(("variances_finite".into(), ok));
        let expected = cfg.trials * cfg.coset.alpha * cfg.snr_db_grid.len();
        m.checks.push(("row_count".into(), rows.len() == expected));
    }
    Ok(m)
}

fn estimate(args: &Common, out: &Path) -> Result<Manifest> {
    let mut cfg: ExperimentConfig = load(&args.config, || {
        experiment_default(estimation_scene(100_000), estimation_detector(), &[-5.0], 5)
    })?;
    apply_overrides(&mut cfg, args);
    let rows = run_estimation(&cfg)?;
    let mut m = Manifest::new("estimate", &cfg)?;
    write_csv(out, "estimation.csv", &rows, &mut m)?;
    if args.check {
        let truth = cfg.scene.subbands.len();
        m.checks.push(("all_bands_detected".into(), rows.iter().all(|r| r.n_detected == truth)));
        let f_nyq = cfg.scene.f_nyq_hz;
        let carrier = rows.iter().all(|r| r.carrier_error_hz.is_some_and(|e| e <= 0.003 * f_nyq));
        let bandwidth = rows.iter().all(|r| r.bandwidth_error_rel.is_some_and(|e| e <= 0.01));
        m.checks.push(("carrier_error_within_0.3pct_fnyq".into(), carrier));
        m.checks.push(("bandwidth_error_within_1pct".into(), bandwidth));
    }
    Ok(m)
}

fn weights(args: &Common, out: &Path) -> Result<Manifest> {
    let mut cfg: ExperimentConfig = load(&args.config, || {
        let mut c = experiment_default(empty_scene(100_000), desk_detector(1000), &[-10.0], 100);
        c.target_bucket = 4_000;
        c
    })?;
    apply_overrides(&mut cfg, args);
    let profiles = run_weight_profile(&cfg)?;
    let mut m = Manifest::new("weights", &cfg)?;
    let rows = profiles.iter().flat_map(|p| {
        p.mean_magnitudes.iter().enumerate().map(move |(slot, &mag)| WeightRow {
            snr_db: p.snr_db,
            n_i: p.n_i,
            true_slots: join(&p.true_slots),
            slot,
            is_true_root: p.true_slots.contains(&slot),
            mean_magnitude: mag,
            true_slots_lowest: p.true_slots_lowest,
            separation_ratio: p.separation_ratio,
        })
    });
    write_csv(out, "weights.csv", rows, &mut m)?;
    if args.check {
        m.checks.push(("true_slots_lowest".into(), profiles.iter().all(|p| p.true_slots_lowest)));
    }
    Ok(m)
}

fn run(cli: Cli) -> Result<bool> {
    let (args, f): (&Common, fn(&Common, &Path) -> Result<Manifest>) = match &cli.verb {
        Verb::Generate(a) => (a, generate),
        Verb::Sample(a) => (a, sample),
        Verb::Detect(a) => (a, detect),
        Verb::Roc(a) => (a, roc),
        Verb::Hist(a) => (a, hist),
        Verb::Estimate(a) => (a, estimate),
        Verb::Weights(a) => (a, weights),
    };
    if args.trials == Some(0) {
        bail!("--trials must be at least 1");
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let manifest = f(args, &args.out)?;
    manifest.write(&args.out)?;
    for (name, ok) in &manifest.checks {
        eprintln!("check {name}: {}", if *ok { "ok" } else { "FAILED" });
    }
    Ok(manifest.checks.iter().all(|c| c.1))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
