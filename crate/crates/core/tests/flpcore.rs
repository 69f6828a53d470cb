mod common;

use common::*;
use flpsense::flpcore::*;
use flpsense::mcsampler::CosetConfig;
use flpsense::Complex64;
use proptest::prelude::*;

fn coeff_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Bins of the slot set `slots` over buckets `[b0, b0 + d)`.
fn district(cfg: &CosetConfig, slots: &[usize], b0: usize, d: usize) -> Vec<usize> {
    let m = cfg.buckets();
    slots.iter().flat_map(|&l| (b0..b0 + d).map(move |b| b + l * m)).collect()
}

#[test]
fn exact_flp_roots_vanish() {
    let cfg = CosetConfig::new(10, 4, 1, 1000).unwrap();
    for i in [0usize, 7, 99] {
        let roots = candidate_roots(i, &cfg);
        let one = exact_flp(&[4], i, &cfg).unwrap();
        assert!((one.a[0] + roots[4].conj()).norm() < 1e-15);
        assert!(evaluate_polynomial(&one.a, roots[4]).norm() < 1e-14);
        let all: Vec<usize> = (0..10).collect();
        let full = exact_flp(&all, i, &cfg).unwrap();
        for z in &roots {
            assert!(evaluate_polynomial(&full.a, *z).norm() < 1e-12);
        }
    }
    assert!(exact_flp(&[], 0, &cfg).is_err());
}

#[test]
fn candidate_root_geometry() {
    let cfg = CosetConfig::new(10, 4, 1, 1000).unwrap();
    let r0 = candidate_roots(0, &cfg);
    for (l, z) in r0.iter().enumerate() {
        let want = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * l as f64 / 10.0);
        assert!((z - want).norm() < 1e-12);
        let next = r0[(l + 1) % 10];
        assert!(((next / z).arg() - 2.0 * std::f64::consts::PI / 10.0).abs() < 1e-12);
    }
    let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 37.0 / 1000.0);
    for (a, b) in candidate_roots(37, &cfg).iter().zip(&r0) {
        assert!((a - b * rot).norm() < 1e-12);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }
}

/// Smallest non-root magnitude of the exact polynomial for `slots`.
fn min_nonroot(slots: &[usize]) -> f64 {
    let cfg = CosetConfig::new(10, 4, 1, 100).unwrap();
    let ev = evaluate_candidates(&exact_flp(slots, 0, &cfg).unwrap(), 0, &cfg);
    (0..10)
        .filter(|l| !slots.contains(l))
        .map(|l| ev.magnitudes[l])
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn evaluate_candidates_examples() {
    let cfg = CosetConfig::new(10, 4, 1, 100).unwrap();
    let ev = evaluate_candidates(&exact_flp(&[2], 0, &cfg).unwrap(), 0, &cfg);
    assert!(ev.magnitudes[2] < 1e-12);
    assert!(ev.magnitudes.iter().enumerate().all(|(l, &m)| l == 2 || m >= 0.618));
    assert_eq!(ev.selected_slots, vec![2]);
    let zero = FlpCoefficients {
        a: vec![Complex64::new(0.0, 0.0); 3],
        method: SolverMethod::LS,
        degenerate: false,
    };
    let ev = evaluate_candidates(&zero, 5, &cfg);
    assert!(ev.values.iter().all(|z| (z - 1.0).norm() == 0.0));
    assert_eq!(ev.selected_slots, vec![0, 1, 2]);
    // Adjacent roots: the nearest non-root is one step outside the cluster.
    let ev = evaluate_candidates(&exact_flp(&[0, 1, 2], 3, &CosetConfig::new(10, 4, 1, 1000).unwrap()).unwrap(), 3, &CosetConfig::new(10, 4, 1, 1000).unwrap());
    for l in 0..3 {
        assert!(ev.magnitudes[l] < 1e-12);
    }
    let s = |k: f64| 2.0 * (std::f64::consts::PI * k / 10.0).sin();
    assert!((min_nonroot(&[0, 1, 2]) - s(1.0) * s(2.0) * s(3.0)).abs() < 1e-12);
    assert!((min_nonroot(&[0, 1, 2]) - 1.1756).abs() < 1e-3);
}

#[test]
fn system_layout_single_bucket() {
    let cfg = CosetConfig::new(10, 4, 1, 200).unwrap();
    let (_, y) = matrix_from_bins(&cfg, &[3, 23, 63], 1);
    let sys = build_window_system(&y, 3, 1, 1).unwrap();
    // r = 4, n = 1: three relations Y_{t+1}(i) a + Y_t(i) = 0.
    assert_eq!(sys.y1.nrows(), 3);
    for t in 0..3 {
        assert_eq!(sys.y1[(t, 0)], y.get(t + 1, 3));
        assert_eq!(sys.y2[t], y.get(t, 3));
    }
    let zero = flpsense::mcsampler::AliasedSpectrumMatrix::from_values(vec![Complex64::new(0.0, 0.0); 80], cfg).unwrap();
    let sys = build_window_system(&zero, 0, 4, 3).unwrap();
    assert!(sys.y1.iter().all(|z| z.norm() == 0.0));
    assert!(build_window_system(&y, 18, 4, 3).is_err());
    assert!(build_window_system(&y, 0, 4, 4).is_err());
    assert!(build_window_system(&y, 0, 1, 3).is_err());
}

#[test]
fn noiseless_solvers_match_exact() {
    let cfg = CosetConfig::new(10, 4, 1, 1000).unwrap();
    for (slots, n) in [(vec![6usize], 1usize), (vec![1, 5, 8], 3), (vec![0, 1, 2], 3)] {
        let (_, y) = matrix_from_bins(&cfg, &district(&cfg, &slots, 20, 16), 5);
        let sys = build_window_system(&y, 20, 16, n).unwrap();
        let exact = exact_flp(&slots, 20, &cfg).unwrap();
        let ls = solve_ls(&sys);
        let tls = solve_tls(&sys);
        assert!(!ls.degenerate);
        assert!(coeff_diff(&ls.a, &exact.a) < 1e-9, "{slots:?}");
        assert!(coeff_diff(&tls.a, &exact.a) < 1e-9, "{slots:?}");
        assert!(ls_residual(&sys, &ls.a) < 1e-9 * sys.y2.norm());
        let ev = evaluate_candidates(&ls, 20, &cfg);
        assert_eq!(ev.selected_slots, slots);
        for &l in &slots {
            assert!(ev.magnitudes[l] < 1e-9);
        }
    }
}

#[test]
fn pure_rounding_window_is_trivial() {
    let cfg = CosetConfig::new(10, 4, 1, 1000).unwrap();
    let (_, y) = matrix_from_bins(&cfg, &district(&cfg, &[2], 0, 30), 8);
    let sys = build_window_system(&y, 50, 16, 3).unwrap();
    let ls = solve_ls(&sys);
    assert!(ls.a.iter().all(|z| z.norm() == 0.0));
    assert!(ls.degenerate);
}

#[test]
fn tls_not_worse_in_its_metric() {
    let cfg = CosetConfig::new(10, 4, 1, 20_000).unwrap();
    let mut g = rng(3);
    let bins = district(&cfg, &[1, 4, 7], 0, 2000);
    let mut xf = vec![Complex64::new(0.0, 0.0); cfg.n_samples];
    for f in 0..cfg.n_samples {
        xf[f] = random_complex(&mut g) * 0.5;
    }
    for f in bins {
        xf[f] += random_complex(&mut g) * 2.0;
    }
    let y = flpsense::mcsampler::aliased_spectrum(&series_from_spectrum(&xf), &cfg).unwrap();
    let sys = build_window_system(&y, 0, 1000, 3).unwrap();
    let ls = solve_ls(&sys);
    let tls = solve_tls(&sys);
    assert!(tls_residual(&sys, &tls.a) <= tls_residual(&sys, &ls.a) * (1.0 + 1e-12));
    assert!(ls_residual(&sys, &ls.a) <= ls_residual(&sys, &tls.a) * (1.0 + 1e-12));
}

#[test]
fn tls_with_fewer_roots_than_coefficients_stays_bounded() {
    // One strong root in noise with n = 3: the noise subspace is three
    // dimensional, so only its minimum-norm member is a stable fit.
    let cfg = CosetConfig::new(10, 4, 1, 20_000).unwrap();
    let mut g = rng(17);
    let mut xf: Vec<Complex64> = (0..cfg.n_samples).map(|_| random_complex(&mut g) * 0.3).collect();
    for f in district(&cfg, &[6], 0, 2000) {
        xf[f] += random_complex(&mut g) * 2.0;
    }
    let y = flpsense::mcsampler::aliased_spectrum(&series_from_spectrum(&xf), &cfg).unwrap();
    let sys = build_window_system(&y, 0, 1000, 3).unwrap();
    let ls = evaluate_candidates(&solve_ls(&sys), 0, &cfg);
    let tls = evaluate_candidates(&solve_tls(&sys), 0, &cfg);
    for ev in [&ls, &tls] {
        assert!(ev.magnitudes[6] < 0.1, "{:?}", ev.magnitudes);
        for l in (0..10).filter(|&l| l != 6) {
            assert!(ev.magnitudes[l] > 0.5 && ev.magnitudes[l] < 2.0, "{:?}", ev.magnitudes);
        }
    }
}

#[test]
fn svd_of_rank_one_triangular_factor() {
    // Triangular factor of a noiseless single-root window with n = 3. Exact
    // zeros below the first row plus rounding residue above the diagonal.
    let c = Complex64::new;
    let mut a = nalgebra::DMatrix::from_element(4, 3, c(0.0, 0.0));
    a[(0, 0)] = c(3.8403530407879245, 0.0);
    a[(0, 1)] = c(-3.840154098471222, -0.039089357678714354);
    a[(0, 2)] = c(3.839557292132784, 0.07817466545509172);
    a[(1, 1)] = c(3.638363214379679e-15, 0.0);
    a[(1, 2)] = c(-2.3164432831563575e-15, -6.968227275306851e-16);
    a[(2, 2)] = c(1.529734105908187e-15, 0.0);
    let f = flpsense::flpcore::svd::svd(&a);
    let s = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        f.s.len(),
        f.s.iter().map(|&x| c(x, 0.0)),
    ));
    assert!((&f.u * s * f.v.adjoint() - &a).norm() < 1e-12);
    let row_norm = (0..3).map(|k| a[(0, k)].norm_sqr()).sum::<f64>().sqrt();
    assert!((f.s[0] - row_norm).abs() < 1e-12);
    assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn window_equals_sub_window_in_a_district() {
    let cfg = CosetConfig::new(10, 4, 1, 2000).unwrap();
    let (_, y) = matrix_from_bins(&cfg, &district(&cfg, &[0, 3, 9], 40, 64), 13);
    let full = solve_ls(&build_window_system(&y, 40, 64, 3).unwrap());
    for (i, d) in [(40usize, 8usize), (50, 30), (97, 7)] {
        let sub = solve_ls(&build_window_system(&y, i, d, 3).unwrap());
        // Coefficients are relative to the anchor's candidates; map to bucket 40.
        let rot = candidate_roots(i, &cfg)[0] / candidate_roots(40, &cfg)[0];
        let mapped: Vec<Complex64> = sub.a.iter().enumerate().map(|(k, a)| a * rot.powu(k as u32 + 1)).collect();
        assert!(coeff_diff(&mapped, &full.a) < 1e-6);
    }
}

#[test]
fn annihilation_exhaustive_small() {
    // Every bucket of every slot pattern at N = 200 with alpha = 10, r = 4.
    let cfg = CosetConfig::new(10, 4, 1, 200).unwrap();
    let m = cfg.buckets();
    let mut g = rng(21);
    for trial in 0..20u64 {
        let mut bins = Vec::new();
        for b in 0..m {
            let k = rand::Rng::random_range(&mut g, 0..=3usize);
            let mut slots: Vec<usize> = (0..10).collect();
            for j in 0..k {
                let pick = rand::Rng::random_range(&mut g, j..10);
                slots.swap(j, pick);
            }
            bins.extend(slots[..k].iter().map(|&l| b + l * m));
        }
        let (xf, y) = matrix_from_bins(&cfg, &bins, trial);
        let ynorm = y.values().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for b in 0..m {
            let slots: Vec<usize> = (0..10).filter(|&l| xf[b + l * m].norm() > 0.0).collect();
            if slots.is_empty() {
                continue;
            }
            let a = exact_flp(&slots, b, &cfg).unwrap().a;
            let n = a.len();
            for t in 0..(cfg.r - n) {
                let mut acc = y.get(t, b);
                for k in 1..=n {
                    acc += a[k - 1] * y.get(t + k, b);
                }
                assert!(acc.norm() < 1e-9 * ynorm);
            }
        }
    }
}

#[test]
fn threshold_examples() {
    assert!((detection_threshold(3, 10_000, 0.5, ThresholdMode::Calibrated).unwrap() - 1.0).abs() < 1e-15);
    let xi = detection_threshold(3, 10_000, 0.01, ThresholdMode::Calibrated).unwrap();
    // Independent oracle: the tabulated 99% normal quantile 2.3263478740408408.
    assert!((xi - (1.0 - (1.5e-4f64).sqrt() * 2.326_347_874_040_840_8)).abs() < 1e-12);
    assert!((xi - 0.9715).abs() < 1e-4);
    let lit = detection_threshold(3, 10_000, 0.01, ThresholdMode::Literal).unwrap();
    assert!((lit - (3e-4f64).sqrt() * (1.0 - 2.326_347_874_040_840_8)).abs() < 1e-12);
    assert!((lit + 0.02297).abs() < 1e-5);
    assert!(detection_threshold(3, 100, 0.0, ThresholdMode::Calibrated).is_err());
    assert!(detection_threshold(3, 100, 1.0, ThresholdMode::Literal).is_err());
}

#[test]
fn q_function_accuracy() {
    // Reference quantiles computed to 20 digits with arbitrary precision.
    let table = [
        (1e-12, 7.034_483_825_301_132),
        (1e-6, 4.753_424_308_822_899),
        (0.01, 2.326_347_874_040_841),
        (0.1, 1.281_551_565_544_601),
        (0.5, 0.0),
        (0.9, -1.281_551_565_544_601),
    ];
    for (p, x) in table {
        let got = q_inv(p);
        assert!((got - x).abs() <= 1e-10 * x.abs().max(1e-300) || (x == 0.0 && got.abs() < 1e-15), "p = {p}: {got}");
    }
    for k in 0..=120 {
        let p = 10f64.powf(-12.0 + 0.1 * k as f64).min(1.0 - 1e-12);
        for p in [p, 1.0 - p] {
            let back = q_function(q_inv(p));
            assert!(((back - p) / p).abs() < 1e-10, "p = {p}");
        }
    }
}

#[test]
fn statistics_formulas() {
    let s = pure_noise_stats(3, 10_000);
    assert_eq!((s.mean, s.variance), (1.0, 3e-4));
    assert!((s.real_part_variance - 1.5e-4).abs() < 1e-18);
    assert!((pure_noise_stats(3, 5000).real_part_variance - 3e-4).abs() < 1e-18);
    let l = low_snr_stats(3, 10_000, 1.0);
    assert!((l.mean - 0.5).abs() < 1e-15 && (l.variance - 1.5e-4).abs() < 1e-18);
    let l0 = low_snr_stats(3, 10_000, 1e-12);
    assert!((l0.mean - 1.0).abs() < 1e-11 && l0.variance < 1e-15);
    assert!((predicted_pd(0.5, 3, 10_000, 1.0) - 0.5).abs() < 1e-15);
    assert_eq!(predicted_pd(0.9, 3, 10_000, 0.0), 0.0);
    assert_eq!(predicted_pd(1.1, 3, 10_000, 0.0), 1.0);
    assert!((predicted_pd(0.9715, 3, 10_000, 1.0) - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_invariance(seed in 0u64..10_000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let s = Complex64::new(re, im);
        let cfg = CosetConfig::new(10, 4, 1, 4000).unwrap();
        let mut g = rng(seed);
        let mut xf: Vec<Complex64> = (0..cfg.n_samples).map(|_| random_complex(&mut g) * 0.3).collect();
        let noise_only = flpsense::mcsampler::aliased_spectrum(&series_from_spectrum(&xf), &cfg).unwrap();
        for f in district(&cfg, &[2, 5, 6], 0, 200) {
            xf[f] += random_complex(&mut g) * 3.0;
        }
        let y = flpsense::mcsampler::aliased_spectrum(&series_from_spectrum(&xf), &cfg).unwrap();
        let sys = build_window_system(&y, 10, 64, 3).unwrap();
        let cases = [
            (build_window_system(&noise_only, 10, 64, 3).unwrap(), SolverMethod::LS),
            (sys.clone(), SolverMethod::LS),
            (sys, SolverMethod::TLS),
        ];
        for (sys, method) in cases {
            let a = solve(&sys, method);
            let b = solve(&sys.scaled(s), method);
            let dd = coeff_diff(&a.a, &b.a); prop_assert!(dd < 1e-12, "diff {dd:e} {method:?}");
            let ea = evaluate_candidates(&a, 10, &cfg);
            let eb = evaluate_candidates(&b, 10, &cfg);
            for (x, y) in ea.magnitudes.iter().zip(&eb.magnitudes) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn selection_ignores_evaluation_order(mags in prop::collection::vec(0.0f64..2.0, 10), n in 1usize..5, perm_seed in 0u64..1000) {
        let sel = select_smallest(&mags, n);
        let mut order: Vec<usize> = (0..10).collect();
        let mut g = rng(perm_seed);
        for j in (1..10).rev() {
            order.swap(j, rand::Rng::random_range(&mut g, 0..=j));
        }
        // Evaluate in permuted order, then map back by slot index.
        let permuted: Vec<(usize, f64)> = order.iter().map(|&l| (l, mags[l])).collect();
        let mut back = vec![0.0; 10];
        for (l, m) in permuted {
            back[l] = m;
        }
        prop_assert_eq!(select_smallest(&back, n), sel.clone());
        prop_assert_eq!(sel.len(), n);
        let worst_sel = sel.iter().map(|&l| mags[l]).fold(0.0, f64::max);
        for l in 0..10 {
            if !sel.contains(&l) {
                prop_assert!(mags[l] >= worst_sel);
            }
        }
    }

    #[test]
    fn threshold_monotone_in_pf(p in 1e-6f64..0.999, q in 1e-6f64..0.999, d in 10usize..100_000) {
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        for mode in [ThresholdMode::Calibrated, ThresholdMode::Literal] {
            prop_assert!(detection_threshold(3, d, lo, mode).unwrap() <= detection_threshold(3, d, hi, mode).unwrap());
        }
    }
}
