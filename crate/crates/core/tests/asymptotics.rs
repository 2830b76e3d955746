use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use gpwz_core::asymptotics::{profile_at_phase, PHASE_EXPONENT};
use gpwz_core::modulation::{sweep_zone, Z_LEAD, Z_TRAIL};
use gpwz_core::outer::{cusp_root, CubicBranch};
use gpwz_core::{AsymptoticSolution, Error};
use proptest::prelude::*;

fn asym() -> &'static AsymptoticSolution {
    static A: OnceLock<AsymptoticSolution> = OnceLock::new();
    A.get_or_init(|| AsymptoticSolution::with_default_shift(sweep_zone(512).unwrap()).unwrap())
}

#[test]
fn shift_is_reduced_mod_two_pi() {
    let a = asym();
    assert_eq!(a.s0(), PI);
    assert!((a.with_s0(-1.0).s0() - (2.0 * PI - 1.0)).abs() < 1e-15);
    assert!((a.with_s0(7.0).s0() - (7.0 - 2.0 * PI)).abs() < 1e-15);
    assert!(AsymptoticSolution::new(a.table().clone(), f64::NAN).is_err());
}

#[test]
fn whole_turn_of_fast_phase_lands_on_crest() {
    let a = asym().with_s0(0.0);
    let z = -0.6;
    let p = a.modulation_at(z).unwrap();
    let turns = 40.0;
    let t = (2.0 * PI * turns / p.phase_profile.abs()).powf(1.0 / PHASE_EXPONENT);
    let phi = a.phase(t, z).unwrap();
    let wrapped = phi.rem_euclid(2.0 * PI);
    assert!(wrapped.min(2.0 * PI - wrapped) < 1e-9, "{phi}");
    assert!((a.u0_eval(t, z).unwrap() - p.crest()).abs() < 1e-9);
}

#[test]
fn phase_scale_at_t20() {
    let a = asym();
    let tf = 20f64.powf(PHASE_EXPONENT);
    assert!((tf - 189.15).abs() < 0.01, "{tf}");
    for &z in &[-1.0, -0.5, 0.0] {
        let q = a.modulation_at(z).unwrap().phase_gradient;
        let e = 1e-6;
        let dphi = (a.phase(20.0, z + e).unwrap() - a.phase(20.0, z - e).unwrap()) / (2.0 * e);
        assert!((dphi / (tf * q) - 1.0).abs() < 1e-6, "z = {z}");
        let wavelength = 2.0 * PI / (tf * q);
        assert!(wavelength > 0.025 && wavelength < 0.045, "{wavelength}");
    }
}

#[test]
fn profile_range_mean_and_period() {
    let a = asym();
    for &z in &[-1.35, -1.0, -0.4, 0.0, 0.1] {
        let p = a.modulation_at(z).unwrap();
        let n = 1024;
        let mut sum = 0.0;
        for i in 0..n {
            let phi = i as f64 * 2.0 * PI / n as f64;
            let u = profile_at_phase(&p, phi).unwrap();
            sum += u;
            assert!(u >= p.offset + p.amplitude * (1.0 - p.k * p.k) - 1e-12);
            assert!(u <= p.offset + p.amplitude + 1e-12);
            for shift in [2.0 * PI, -6.0 * PI] {
                assert!((profile_at_phase(&p, phi + shift).unwrap() - u).abs() <= 1e-10);
            }
        }
        // the period mean of dn^2 is E/K
        assert!((sum / n as f64 - (p.offset + p.amplitude * p.q)).abs() < 1e-9, "z = {z}");
    }
}

#[test]
fn interpolation_stays_on_the_constraint() {
    let a = asym();
    let pts = &a.table().points;
    let mut worst = (0.0f64, 0.0);
    for w in pts.windows(2) {
        for frac in [0.25, 0.5, 0.75] {
            let z = w[0].z + frac * (w[1].z - w[0].z);
            let l = a.interpolated_triple(z).unwrap();
            let c = 3.0 * (l[0] * l[0] + l[1] * l[1] + l[2] * l[2])
                + 2.0 * (l[0] * l[1] + l[1] * l[2] + l[2] * l[0])
                - 5.0;
            if c.abs() > worst.0 {
                worst = (c.abs(), z);
            }
        }
    }
    assert!(worst.0 <= 1e-6, "{worst:?}");
    // the polished point sits on it exactly
    assert!(a.modulation_at(-0.77).unwrap().constraint().abs() < 1e-12);
}

#[test]
fn leading_edge_continuity() {
    let a = asym();
    assert!((a.composite_eval(20.0, Z_LEAD).unwrap() - SQRT_2).abs() < 1e-15);
    let inside = a.modulation_at(Z_LEAD + 1e-9).unwrap();
    assert!((inside.crest() - SQRT_2).abs() < 1e-4);
    let u = a.u0_eval(20.0, Z_LEAD + 1e-9).unwrap();
    assert!((u - SQRT_2).abs() < 1e-4, "{u}");
}

#[test]
fn trailing_edge_soliton_limit() {
    let a = asym();
    let z = Z_TRAIL - 1e-6;
    let p = a.modulation_at(z).unwrap();
    assert!(p.k > 0.999);
    let crest = profile_at_phase(&p, 0.0).unwrap();
    assert!((crest - (p.amplitude + p.offset)).abs() < 1e-12);
    let big_k = p.elliptic().unwrap().big_k;
    for &phi in &[0.05, 0.1, 0.2] {
        let u = profile_at_phase(&p, phi).unwrap();
        let sech = 1.0 / (big_k * phi / PI).cosh();
        assert!((u - (p.offset + p.amplitude * sech * sech)).abs() < 1e-3, "{phi}");
    }
}

#[test]
fn composite_outside_the_zone() {
    let a = asym();
    let up = a.composite_eval(20.0, -3.0).unwrap();
    assert!((up * up * up - up - 3.0).abs() < 1e-13);
    assert!((up - 1.6717).abs() < 1e-4);
    let lo = a.composite_eval(20.0, 0.5).unwrap();
    assert!((lo * lo * lo - lo + 0.5).abs() < 1e-13);
    assert!((lo + 1.1915).abs() < 1e-4);
    assert_eq!(a.composite_eval(20.0, 0.3).unwrap(), cusp_root(0.3, CubicBranch::LOWER).unwrap());
    assert!(matches!(a.u0_eval(20.0, 0.3), Err(Error::OutOfZone { .. })));
}

#[test]
fn physical_scaling() {
    let a = asym();
    assert!((a.physical_eval(-1.0, 2.0).unwrap() + 1.0).abs() < 1e-15);
    assert!(a.physical_eval(0.0, 1.0).is_err());
    let u = a.physical_eval(4.0, 0.0).unwrap();
    let bound = (0..=300)
        .map(|i| a.composite_eval(4.0, -2.0 + i as f64 * 0.01).unwrap().abs())
        .fold(0.0, f64::max);
    assert!(u.abs() <= 2.0 * bound);
    for &(t, x) in &[(4.0, 3.3), (20.0, -60.0), (20.0, 5.0), (7.5, -1000.0)] {
        let scale: f64 = t;
        let direct = scale.sqrt() * a.composite_eval(t, x * scale.powf(-1.5)).unwrap();
        let via = a.physical_eval(t, x).unwrap();
        assert!((direct - via).abs() <= 4.0 * f64::EPSILON * via.abs(), "{t} {x}");
    }
}

#[test]
fn leading_order_terms_cancel_at_large_t() {
    let a = asym();
    let phis: Vec<f64> = (0..200).map(|i| i as f64 * 0.0314).collect();
    for &z in &[-1.1, -0.6, -0.1] {
        let bal = a.leading_order_balance(1e3, z, &phis).unwrap();
        assert!(bal.relative() <= 1e-8, "z = {z}: {}", bal.relative());
        assert!(bal.largest_term > 1e4);
    }
}

#[test]
fn sampling_matches_pointwise_evaluation() {
    let a = asym();
    let zs: Vec<f64> = (0..97).map(|i| -2.0 + i as f64 * 0.03125).collect();
    let v = a.sample_scaled(20.0, &zs).unwrap();
    for (z, u) in zs.iter().zip(&v) {
        assert_eq!(*u, a.composite_eval(20.0, *z).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn u0_within_envelope(z in -1.41f64..0.117, t in 1.0f64..200.0) {
        let a = asym();
        let p = a.modulation_at(z).unwrap();
        let u = a.u0_eval(t, z).unwrap();
        prop_assert!(u >= p.trough() - 1e-12 && u <= p.crest() + 1e-12);
    }
}
