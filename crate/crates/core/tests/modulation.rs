use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use gpwz_core::modulation::*;
use proptest::prelude::*;

fn table() -> &'static ModulationTable {
    static TABLE: OnceLock<ModulationTable> = OnceLock::new();
    TABLE.get_or_init(|| sweep_zone(512).unwrap())
}

fn mid_zone() -> impl Iterator<Item = &'static ModulationPoint> {
    table().between(-1.2, 0.0)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// `E(k)/K(k)` by the midpoint rule, spectrally accurate for the smooth
/// periodic integrands.
fn quadrature_q(m: f64) -> f64 {
    let n = 2000;
    let (mut kk, mut ee) = (0.0, 0.0);
    for i in 0..n {
        let th = (i as f64 + 0.5) * PI / 2.0 / n as f64;
        let w = (1.0 - m * th.sin().powi(2)).sqrt();
        kk += 1.0 / w;
        ee += w;
    }
    ee / kk
}

fn l3_from_constraint(l1: f64, l2: f64) -> Option<f64> {
    let b = 2.0 * (l1 + l2);
    let c = 3.0 * (l1 * l1 + l2 * l2) + 2.0 * l1 * l2 - 5.0;
    let disc = b * b - 12.0 * c;
    (disc >= 0.0).then(|| (-b + disc.sqrt()) / 6.0)
}

fn oracle_residuals(l1: f64, l2: f64, z: f64) -> Option<(f64, f64)> {
    let l3 = l3_from_constraint(l1, l2)?;
    if !(l1 < l2 && l2 < l3) {
        return None;
    }
    let zpoly = 2.0 / 45.0
        * (l1 * (8.0 * l2 * l2 + 4.0 * l2 * l3 + 8.0 * l3 * l3 - 15.0)
            - (l2 + l3) * (24.0 * l2 * l2 - 8.0 * l2 * l3 + 24.0 * l3 * l3 - 25.0));
    let num = 0.5 * (l2 - l3) * (3.0 * l2 * l3 + 3.0 * l3 * l1 + 9.0 * l3 * l3 - 5.0);
    let den = l1 * (2.0 * l2 * l2 + l2 * l3 + 2.0 * l3 * l3 - 5.0)
        - (l2 + l3) * (6.0 * l2 * l2 - 2.0 * l2 * l3 + 6.0 * l3 * l3 - 5.0);
    let m = (l2 - l1) / (l3 - l1);
    Some((z - zpoly, quadrature_q(m) * den - num))
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn solve_point_matches_grid_scan_oracle() {
    let z = -0.5;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let step = 0.01;
    for i in 0..=200 {
        let l1 = -1.5 + i as f64 * step;
        for j in 0..=300 {
            let l2 = -1.5 + j as f64 * step;
            if let Some((rz, rq)) = oracle_residuals(l1, l2, z) {
                let s = rz.abs() + rq.abs();
                if s < best.0 {
                    best = (s, l1, l2);
                }
            }
        }
    }
    let (_, l1g, l2g) = best;
    // inner: r_z = 0 in l2 for fixed l1, bracketed by the sign change nearest l2g
    let l2_of = |l1: f64| {
        let rz = |l2: f64| oracle_residuals(l1, l2, z).map_or(f64::NAN, |r| r.0);
        let fine = 1e-3;
        let lo = (0..400)
            .map(|i| l2g + (i as f64 / 2.0).ceil() * fine * if i % 2 == 0 { 1.0 } else { -1.0 })
            .find(|&a| rz(a) * rz(a + fine) < 0.0)
            .expect("r_z bracket");
        bisect(lo, lo + fine, rz)
    };
    let w = 2.0 * step;
    let l1 = bisect(l1g - w, l1g + w, |l1| oracle_residuals(l1, l2_of(l1), z).unwrap().1);
    let l2 = l2_of(l1);
    let l3 = l3_from_constraint(l1, l2).unwrap();

    let guess = ModulationPoint::from_triple(z, [l1g, l2g, l3_from_constraint(l1g, l2g).unwrap()]).unwrap();
    let p = solve_point(z, &guess).unwrap();
    for (a, b) in p.triple().iter().zip([l1, l2, l3]) {
        assert!((a - b).abs() < 1e-9, "{:?} vs {:?}", p.triple(), [l1, l2, l3]);
    }
    assert!(whitham_residuals(p.l1, p.l2, p.l3, z).unwrap().max_abs() < 1e-11);
}

#[test]
fn solve_point_near_leading_edge() {
    let z = Z_LEAD + 1e-8;
    let guess = ModulationPoint::from_triple(z, leading_edge_guess(z).unwrap()).unwrap();
    let p = solve_point(z, &guess).unwrap();
    for (a, b) in p.triple().iter().zip(LEAD_TRIPLE) {
        assert!((a - b).abs() < 1e-4);
    }
    assert!((p.r + SQRT_2 / 6.0).abs() < 1e-4);
    assert!((p.amplitude - 2.5 * SQRT_2).abs() < 1e-3);
    // crest = sqrt(2) + (5 sqrt(2)/4) k^2 + O(k^4); k ~ 0.008 here
    let law = SQRT_2 + 1.25 * SQRT_2 * p.k * p.k;
    assert!((p.crest() - law).abs() < 1e-6, "{} {}", p.crest(), law);
    assert!((p.crest() - SQRT_2).abs() < 2e-4);
}

#[test]
fn solve_point_near_trailing_edge() {
    let z = Z_TRAIL - 1e-8;
    let p = solve_point(z, table().last()).unwrap();
    assert!(p.l3 - p.l2 < 1e-3);
    assert!(p.k > 1.0 - 1e-3);
}

#[test]
fn sweep_edges_and_monotonicity() {
    let t = table();
    assert_eq!(t.len(), 512);
    assert!(t.points.windows(2).all(|w| w[1].k > w[0].k));
    assert!(t.first().k < 0.05);
    assert!(t.last().k > 0.995);
    let lead = leading_edge_limit(t).unwrap();
    assert!((lead.z - Z_LEAD).abs() < 1e-6, "{}", lead.z);
    assert!((lead.r + SQRT_2 / 6.0).abs() < 1e-5);
    let trail = trailing_edge_limit(t).unwrap();
    assert!((trail - Z_TRAIL).abs() < 1e-4, "{trail}");
}

#[test]
fn every_point_satisfies_invariants() {
    let grid: Vec<f64> = (0..256).map(|i| i as f64 * 2.0 * PI / 256.0).collect();
    for p in table().iter() {
        assert!(p.constraint().abs() < 1e-10);
        assert!(ansatz_residual(p, &grid).unwrap().max() <= 1e-8, "z = {}", p.z);
        let e = dn2_system_residuals(p.amplitude, p.inner_scale, p.offset, p.r, p.k, p.z);
        assert!(max_abs(&e) <= 1e-9, "z = {} {e:?}", p.z);
        let (r11, _) = ak_equation_residuals(p.amplitude, p.k, p.z).unwrap();
        assert!(r11.abs() <= 1e-6 * (1.0 + p.amplitude.powi(6)));
        assert!(p.r_identity_defect().abs() < 1e-14);
        let ev = p.elliptic().unwrap();
        assert!((p.inner_scale / p.phase_gradient - ev.big_k / PI).abs() < 1e-14);
    }
}

#[test]
fn uncorrected_degree6_tail_fails_on_table() {
    let p = table().between(-0.6, -0.4).next().unwrap();
    let (r11, _) = ak_equation_residuals_with(p.amplitude, p.k, p.z, Degree6Coefficients::Uncorrected).unwrap();
    assert!(r11.abs() > 1.0);
}

#[test]
fn q_relation_holds_on_table() {
    for p in mid_zone() {
        let (_, r12) = ak_equation_residuals(p.amplitude, p.k, p.z).unwrap();
        assert!(r12.abs() < 1e-9, "z = {} r12 = {r12}", p.z);
    }
}

#[test]
fn ansatz_detects_perturbed_r() {
    let grid: Vec<f64> = (0..256).map(|i| i as f64 * 2.0 * PI / 256.0).collect();
    for p in mid_zone().step_by(16) {
        let mut bad = *p;
        bad.r += 1e-3;
        assert!(ansatz_residual(&bad, &grid).unwrap().max() >= 1e-4);
    }
}

#[test]
fn potemin_form_agrees() {
    let t = table();
    for p in &t.points[1..t.len() - 1] {
        let r = potemin_residuals(p.l1, p.l2, p.l3, p.z).unwrap();
        assert!(max_abs(&r) <= 1e-8, "z = {} {r:?}", p.z);
    }
}

#[test]
fn q_matches_quadrature() {
    for p in table().iter().step_by(37) {
        assert!((p.q - quadrature_q(p.parameter())).abs() < 1e-12, "k = {}", p.k);
    }
}

#[test]
fn r_ode_and_phase_gradient_mid_zone() {
    let samples = r_ode_residual(table(), 1e-4).unwrap();
    let mid: Vec<_> = samples.iter().filter(|s| s.z >= -1.2 && s.z <= 0.0).collect();
    assert!(mid.len() > 100);
    for s in mid {
        assert!(!s.singular);
        assert!(s.residual <= 1e-4, "z = {} {}", s.z, s.residual);
    }
    for (z, d) in phase_gradient_consistency(table(), 1e-4).unwrap() {
        if (-1.2..=0.0).contains(&z) {
            assert!(d <= 1e-5, "z = {z} {d}");
        }
    }
}

#[test]
fn near_edge_series() {
    let offsets: Vec<f64> = (0..=20).map(|i| 1e-4 * 100f64.powf(i as f64 / 20.0)).collect();
    let near = refine_near_lead(&offsets).unwrap();
    let rep = edge_series_check(&near).unwrap();
    let lead_k = 2f64.powf(0.875) / 5f64.sqrt();
    assert!((rep.k_coefficient / lead_k - 1.0).abs() < 0.01);
    assert!((rep.r_edge + SQRT_2 / 6.0).abs() < 1e-5);
    assert!((rep.r_slope - 1.0 / 40.0).abs() < 5e-3);
    let s = rep.samples.iter().find(|s| (s.offset / 1e-3 - 1.0).abs() < 1e-9).unwrap();
    assert!((s.k_series - 0.14511).abs() < 1e-4);
    assert!(s.k_deviation() < 0.01);
}

#[test]
fn h_near_leading_edge() {
    let rep = h_edge_check(&[4e-3, 2e-3, 1e-3, 5e-4]).unwrap();
    let at = rep.samples.iter().find(|s| (s.offset - 1e-3).abs() < 1e-12).unwrap();
    assert!((at.scaled() - 1.0).abs() < 1e-2);
    assert!((rep.constant - rep.expected).abs() < 5e-2);
    assert!((rep.expected + 0.479_948_7).abs() < 1e-7);
}

#[test]
fn h_numerator_vanishes_exactly_at_edge() {
    use num_rational::Ratio;
    // with z = -sqrt(2) and R = -sqrt(2)/6 every odd power carries one sqrt(2);
    // write z = a s, R = b s with s^2 = 2 and collect rational parts
    let a = Ratio::new(-1i128, 1);
    let b = Ratio::new(-1i128, 6);
    let two = Ratio::from_integer(2i128);
    let c = |v: i128| Ratio::from_integer(v);
    // N / s for the odd monomials z^p R^q (p + q odd), s^(p+q-1) = 2^((p+q-1)/2)
    let term = |coef: i128, p: u32, q: u32| c(coef) * a.pow(p as i32) * b.pow(q as i32) * two.pow(((p + q - 1) / 2) as i32);
    let n = term(45, 3, 0) + term(4860, 2, 3) - term(582, 2, 1) + term(131220, 1, 6) - term(43416, 1, 4)
        + term(2721, 1, 2) - term(35, 1, 0) + term(139968, 0, 7) - term(59616, 0, 5) + term(6048, 0, 3)
        - term(120, 0, 1);
    assert_eq!(n, c(0));
    assert!(h_numerator(Z_LEAD, -SQRT_2 / 6.0).abs() < 1e-9);
}

#[test]
fn table_subsets_serialize() {
    let t = table();
    let json = serde_json::to_string(&t.points[..3]).unwrap();
    let back: Vec<ModulationPoint> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, t.points[..3].to_vec());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interior_solves_are_consistent(z in -1.41f64..0.117) {
        let seed = table().iter().min_by(|a, b| (a.z - z).abs().total_cmp(&(b.z - z).abs())).unwrap();
        let p = solve_point(z, seed).unwrap();
        prop_assert!(whitham_residuals(p.l1, p.l2, p.l3, z).unwrap().max_abs() < 1e-10);
        prop_assert!(p.l1 <= p.l2 && p.l2 <= p.l3);
        prop_assert!(p.k >= 0.0 && p.k < 1.0);
        let e = dn2_system_residuals(p.amplitude, p.inner_scale, p.offset, p.r, p.k, p.z);
        prop_assert!(max_abs(&e) <= 1e-9);
    }

    #[test]
    fn k_increases_with_z(z1 in -1.4f64..0.1, dz in 1e-4f64..1e-2) {
        let z2 = (z1 + dz).min(0.117);
        let seed = table().iter().min_by(|a, b| (a.z - z1).abs().total_cmp(&(b.z - z1).abs())).unwrap();
        let p1 = solve_point(z1, seed).unwrap();
        let p2 = solve_point(z2, &p1).unwrap();
        prop_assert!(p2.k > p1.k);
    }
}
