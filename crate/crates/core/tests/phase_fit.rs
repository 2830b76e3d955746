use std::f64::consts::PI;
use std::sync::OnceLock;

use gpwz_core::asymptotics::AsymptoticSolution;
use gpwz_core::bvp::{continuation, GridSolution, SolverConfig};
use gpwz_core::error::Error;
use gpwz_core::modulation::{sweep_zone, Z_LEAD, Z_TRAIL};
use gpwz_core::phase_fit::*;
use proptest::prelude::*;

fn asym() -> &'static AsymptoticSolution {
    static ASYM: OnceLock<AsymptoticSolution> = OnceLock::new();
    ASYM.get_or_init(|| AsymptoticSolution::with_default_shift(sweep_zone(512).unwrap()).unwrap())
}

/// Numeric solutions at t = 10, 15, 20, 30 on [-330, 90] with h = 0.05.
fn solutions() -> &'static [GridSolution] {
    static SOLS: OnceLock<Vec<GridSolution>> = OnceLock::new();
    SOLS.get_or_init(|| {
        let cfg = SolverConfig {
            h: 0.05,
            t_path: vec![-7.0, 10.0, 15.0, 20.0, 30.0],
            ..SolverConfig::default()
        };
        continuation(&cfg).unwrap().split_off(1)
    })
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Angular distance on the circle.
fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[test]
fn synthetic_round_trip() {
    let zs = uniform(-1.3, 0.0, 20001);
    let us = asym().with_s0(1.2345).sample_scaled(20.0, &zs).unwrap();
    let fit = fit_phase_samples(20.0, &zs, &us, asym(), DEFAULT_WINDOW).unwrap();
    assert!((fit.s0_hat - 1.2345).abs() < 1e-4, "{}", fit.s0_hat);
    assert!(fit.rms < 1e-6);
    assert_eq!(fit.curve.len(), SCAN_POINTS);
    // the scan minimum is global to grid resolution
    let best = fit.curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    assert!(fit.rms <= best + 1e-12);
}

#[test]
fn scan_is_periodic_in_the_shift() {
    let zs = uniform(-1.3, 0.0, 8001);
    for s in [0.3, 2.0, 5.5] {
        let a = asym().with_s0(s).sample_scaled(20.0, &zs).unwrap();
        let b = asym().with_s0(s + 2.0 * PI).sample_scaled(20.0, &zs).unwrap();
        let fa = fit_phase_samples(20.0, &zs, &a, asym(), DEFAULT_WINDOW).unwrap();
        let fb = fit_phase_samples(20.0, &zs, &b, asym(), DEFAULT_WINDOW).unwrap();
        let worst = fa
            .curve
            .iter()
            .zip(&fb.curve)
            .map(|(p, q)| (p.1 - q.1).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-12, "{worst}");
    }
}

#[test]
fn numeric_phase_near_pi_at_t20() {
    let sol = &solutions()[2];
    assert_eq!(sol.t, 20.0);
    let fit = fit_phase(sol, asym(), DEFAULT_WINDOW).unwrap();
    assert!((fit.s0_hat - PI).abs() <= 0.05, "{}", fit.s0_hat);
    assert!(fit.sin_correlation.abs() <= 0.2, "{}", fit.sin_correlation);
    let n = fit.curve.len();
    let minima = (0..n)
        .filter(|&i| fit.curve[i].1 < fit.curve[(i + n - 1) % n].1 && fit.curve[i].1 < fit.curve[(i + 1) % n].1)
        .count();
    assert_eq!(minima, 1);
}

#[test]
fn half_wavelength_window_shift() {
    let sol = &solutions()[2];
    let base = fit_phase(sol, asym(), DEFAULT_WINDOW).unwrap();
    let mid = asym().modulation_at(-0.7).unwrap();
    let half = PI / (sol.t.powf(1.75) * mid.phase_gradient);
    assert!(half > 1e-3 && half < 0.05, "{half}");
    for shift in [-half, half] {
        let w = (DEFAULT_WINDOW.0 + shift, DEFAULT_WINDOW.1 + shift);
        let moved = fit_phase(sol, asym(), w).unwrap();
        assert!(circ(moved.s0_hat, base.s0_hat) <= 0.02, "{} {}", moved.s0_hat, base.s0_hat);
    }
}

#[test]
fn window_and_sampling_errors() {
    let sol = &solutions()[2];
    let near_lead = (Z_LEAD + 0.05, -0.2);
    let near_trail = (-1.2, Z_TRAIL - 0.05);
    assert!(matches!(fit_phase(sol, asym(), near_lead), Err(Error::Window { .. })));
    assert!(matches!(fit_phase(sol, asym(), near_trail), Err(Error::Window { .. })));
    assert!(matches!(fit_phase(sol, asym(), (-0.5, -0.6)), Err(Error::Window { .. })));
    // a narrow window holds too few periods
    assert!(matches!(fit_phase(sol, asym(), (-0.7, -0.65)), Err(Error::Window { .. })));

    // 200 samples over the window give about 6 per period at t = 20
    let zs = uniform(-1.2, -0.2, 200);
    let us = asym().sample_scaled(20.0, &zs).unwrap();
    assert!(matches!(
        fit_phase_samples(20.0, &zs, &us, asym(), DEFAULT_WINDOW),
        Err(Error::Undersampled { .. })
    ));
    assert!(fit_phase_samples(-1.0, &zs, &us, asym(), DEFAULT_WINDOW).is_err());
}

#[test]
fn exponent_near_seven_quarters() {
    let (scaling, fits) = fit_exponent(solutions(), asym(), DEFAULT_WINDOW).unwrap();
    assert_eq!(scaling.t_values, vec![10.0, 15.0, 20.0, 30.0]);
    assert!(fits.iter().all(|f| circ(f.s0_hat, PI) < 0.05));
    assert!(scaling.exponent >= -1.95 && scaling.exponent <= -1.55, "{}", scaling.exponent);
}

#[test]
fn doubled_margin_does_not_flatten_the_exponent() {
    // t = 10 holds only about 4 periods in the narrower window
    let later = &solutions()[1..];
    let (base, _) = fit_exponent(later, asym(), DEFAULT_WINDOW).unwrap();
    let lead = DEFAULT_WINDOW.0 - Z_LEAD;
    let trail = Z_TRAIL - DEFAULT_WINDOW.1;
    let narrow = (Z_LEAD + 2.0 * lead, Z_TRAIL - 2.0 * trail);
    let (inner, _) = fit_exponent(later, asym(), narrow).unwrap();
    // edge layers decay slower, so moving away from them can only steepen
    assert!(inner.exponent <= base.exponent + 0.05, "{} {}", inner.exponent, base.exponent);
}

#[test]
fn exponent_needs_three_times() {
    assert!(fit_exponent(&solutions()[..2], asym(), DEFAULT_WINDOW).is_err());
    let ts = vec![10.0, 15.0, 20.0, 30.0];
    let rs = ts.iter().map(|t: &f64| 0.7 * t.powf(-1.75)).collect();
    let fit = ScalingFit::from_residuals(ts, rs).unwrap();
    assert!((fit.exponent + 1.75).abs() <= 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn any_shift_round_trips(s in 0.0f64..(2.0 * PI), t in 12.0f64..30.0) {
        let zs = uniform(-1.25, -0.15, 12001);
        let us = asym().with_s0(s).sample_scaled(t, &zs).unwrap();
        let fit = fit_phase_samples(t, &zs, &us, asym(), DEFAULT_WINDOW).unwrap();
        prop_assert!(circ(fit.s0_hat, s) < 1e-4);
        prop_assert!(fit.s0_hat >= 0.0 && fit.s0_hat < 2.0 * PI);
    }

    #[test]
    fn power_laws_are_recovered(p in -3.0f64..-0.5, c in 0.01f64..10.0) {
        let ts = vec![5.0, 10.0, 20.0, 40.0];
        let rs = ts.iter().map(|t: &f64| c * t.powf(p)).collect();
        let fit = ScalingFit::from_residuals(ts, rs).unwrap();
        prop_assert!((fit.exponent - p).abs() < 1e-9);
    }
}
