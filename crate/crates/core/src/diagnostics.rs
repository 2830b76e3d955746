//! Invariant gates grouped by module, as run by `gpwz check`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::Serialize;

use crate::asymptotics::{profile_at_phase, AsymptoticSolution};
use crate::bvp::{solve_fixed_t, Grid, NewtonSettings, OdeProblem, SolverConfig, Stencil};
use crate::error::{Error, Result};
use crate::modulation::{
    ak_equation_residuals, ansatz_residual, dn2_system_residuals, leading_edge_limit,
    phase_gradient_consistency, potemin_residuals, r_ode_residual, sweep_zone, trailing_edge_limit,
    ModulationTable, LEAD_TRIPLE, Z_LEAD, Z_TRAIL,
};
use crate::outer::{cusp_root, CubicBranch};
use crate::phase_fit::{fit_phase_samples, DEFAULT_WINDOW};
use crate::specfun::{complement, elliptic_ke, jacobi_dn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Specfun,
    Outer,
    Modulation,
    Asymptotics,
    Bvp,
    PhaseFit,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Specfun,
        Suite::Outer,
        Suite::Modulation,
        Suite::Asymptotics,
        Suite::Bvp,
        Suite::PhaseFit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Specfun => "specfun",
            Suite::Outer => "outer",
            Suite::Modulation => "modulation",
            Suite::Asymptotics => "asymptotics",
            Suite::Bvp => "bvp",
            Suite::PhaseFit => "phase_fit",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown suite {s:?}")))
    }
}

/// One measured quantity and the bound it must stay under.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub suite: &'static str,
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub gates: Vec<Gate>,
    pub passed: bool,
}

impl CheckReport {
    pub fn failures(&self) -> impl Iterator<Item = &Gate> {
        self.gates.iter().filter(|g| !g.pass)
    }
}

struct Gates {
    suite: &'static str,
    list: Vec<Gate>,
}

impl Gates {
    fn new(suite: Suite) -> Self {
        Gates {
            suite: suite.name(),
            list: Vec::new(),
        }
    }

    /// Passes when `value <= limit`; NaN fails.
    fn at_most(&mut self, name: &'static str, value: f64, limit: f64) {
        self.list.push(Gate {
            suite: self.suite,
            name,
            value,
            limit,
            pass: value <= limit,
        });
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| if x.is_nan() { f64::NAN } else { a.max(x.abs()) })
}

/// `(K, E)` by the midpoint rule on `[0, pi/2]`.
pub fn quadrature_ke(k: f64, n: usize) -> (f64, f64) {
    let m = k * k;
    let (mut kk, mut ee) = (0.0, 0.0);
    let step = FRAC_PI_2 / n as f64;
    for i in 0..n {
        let s = ((i as f64 + 0.5) * step).sin();
        let w = (1.0 - m * s * s).sqrt();
        kk += 1.0 / w;
        ee += w;
    }
    (kk * step, ee * step)
}

fn specfun_gates() -> Result<Vec<Gate>> {
    let mut g = Gates::new(Suite::Specfun);
    let mut legendre = 0.0f64;
    for i in 1..100 {
        let k = i as f64 / 100.0;
        let a = elliptic_ke(k)?;
        let b = elliptic_ke(complement(k))?;
        legendre = legendre.max((a.big_e * b.big_k + b.big_e * a.big_k - a.big_k * b.big_k - FRAC_PI_2).abs());
    }
    g.at_most("legendre_relation", legendre, 1e-12);

    let mut ident = 0.0f64;
    for &k in &[0.3, 0.8, 0.99] {
        let kc2 = 1.0 - k * k;
        for i in 0..40 {
            let th = 0.13 + i as f64 * 0.17;
            let e = 1e-5;
            let d = (jacobi_dn(th + e, k)? - jacobi_dn(th - e, k)?) / (2.0 * e);
            let dn = jacobi_dn(th, k)?;
            ident = ident.max((d * d - (1.0 - dn * dn) * (dn * dn - kc2)).abs());
        }
    }
    g.at_most("dn_differential_identity", ident, 1e-6);

    let ev = elliptic_ke(0.8)?;
    let (qk, qe) = quadrature_ke(0.8, 400);
    g.at_most("quadrature_k_0.8", (ev.big_k - qk).abs(), 1e-10);
    g.at_most("quadrature_e_0.8", (ev.big_e - qe).abs(), 1e-10);
    Ok(g.list)
}

fn outer_gates() -> Result<Vec<Gate>> {
    let mut g = Gates::new(Suite::Outer);
    let mut res = 0.0f64;
    for i in 0..=600 {
        let z = -3.0 + i as f64 * 0.01;
        for cb in [CubicBranch::NEGATIVE_TIME, CubicBranch::UPPER, CubicBranch::LOWER] {
            if let Ok(u) = cusp_root(z, cb) {
                res = res.max(cb.residual(z, u).abs());
            }
        }
    }
    g.at_most("cubic_residual_z_in_[-3,3]", res, 1e-14);
    g.at_most("upper_root_at_z_-3", (cusp_root(-3.0, CubicBranch::UPPER)? - 1.671699881657161).abs(), 1e-12);
    g.at_most("lower_root_at_z_0.5", (cusp_root(0.5, CubicBranch::LOWER)? + 1.191487883953119).abs(), 1e-12);
    Ok(g.list)
}

fn modulation_gates(table: &ModulationTable) -> Result<Vec<Gate>> {
    let mut g = Gates::new(Suite::Modulation);
    let phis: Vec<f64> = (0..128).map(|i| i as f64 * 2.0 * PI / 128.0).collect();
    let interior = &table.points[1..table.len() - 1];
    g.at_most("whitham_constraint", max_abs(table.iter().map(|p| p.constraint())), 1e-10);
    g.at_most(
        "ansatz_residual",
        max_abs(table.iter().map(|p| ansatz_residual(p, &phis).map_or(f64::NAN, |r| r.max()))),
        1e-8,
    );
    g.at_most(
        "dn2_system",
        max_abs(table.iter().flat_map(|p| {
            dn2_system_residuals(p.amplitude, p.inner_scale, p.offset, p.r, p.k, p.z)
        })),
        1e-9,
    );
    g.at_most(
        "potemin",
        max_abs(interior.iter().flat_map(|p| {
            potemin_residuals(p.l1, p.l2, p.l3, p.z).unwrap_or([f64::NAN; 3])
        })),
        1e-8,
    );
    g.at_most(
        "degree6_relation_scaled",
        max_abs(table.iter().map(|p| {
            ak_equation_residuals(p.amplitude, p.k, p.z).map_or(f64::NAN, |(r, _)| r / (1.0 + p.amplitude.powi(6)))
        })),
        1e-6,
    );
    g.at_most("r_identity", max_abs(table.iter().map(|p| p.r_identity_defect())), 1e-12);
    let ode = r_ode_residual(table, 1e-4)?;
    g.at_most(
        "r_ode_mid_zone",
        max_abs(ode.iter().filter(|s| (-1.2..=0.0).contains(&s.z)).map(|s| s.residual)),
        1e-4,
    );
    let pg = phase_gradient_consistency(table, 1e-4)?;
    g.at_most(
        "phase_gradient_mid_zone",
        max_abs(pg.iter().filter(|s| (-1.2..=0.0).contains(&s.0)).map(|s| s.1)),
        1e-5,
    );
    let lead = leading_edge_limit(table)?;
    g.at_most("lead_edge_z", (lead.z - Z_LEAD).abs(), 1e-6);
    g.at_most(
        "lead_edge_triple",
        max_abs((0..3).map(|j| lead.l[j] - LEAD_TRIPLE[j])),
        1e-5,
    );
    g.at_most("lead_edge_r", (lead.r + SQRT_2 / 6.0).abs(), 1e-5);
    g.at_most("trail_edge_z", (trailing_edge_limit(table)? - Z_TRAIL).abs(), 1e-4);
    let mono = table.iter().zip(table.iter().skip(1)).filter(|(a, b)| b.k <= a.k).count();
    g.at_most("k_monotonicity_violations", mono as f64, 0.0);
    Ok(g.list)
}

fn asymptotics_gates(asym: &AsymptoticSolution) -> Result<Vec<Gate>> {
    let mut g = Gates::new(Suite::Asymptotics);
    let zs = [-1.3, -0.8, -0.3, 0.05];
    let (mut periodic, mut range, mut mean) = (0.0f64, 0.0f64, 0.0f64);
    for &z in &zs {
        let p = asym.modulation_at(z)?;
        let n = 512;
        let mut acc = 0.0;
        for i in 0..n {
            let phi = i as f64 * 2.0 * PI / n as f64;
            let u = profile_at_phase(&p, phi)?;
            acc += u;
            periodic = periodic.max((profile_at_phase(&p, phi + 2.0 * PI)? - u).abs());
            range = range.max((p.trough() - u).max(u - p.crest()).max(0.0));
        }
        mean = mean.max((acc / n as f64 - (p.offset + p.amplitude * p.q)).abs());
    }
    g.at_most("periodicity", periodic, 1e-10);
    g.at_most("range_excursion", range, 1e-12);
    g.at_most("period_mean_equals_c_plus_aq", mean, 1e-9);
    let phis: Vec<f64> = (0..64).map(|i| i as f64 * 0.1).collect();
    let bal = asym.leading_order_balance(1e3, -0.6, &phis)?;
    g.at_most("t_7_4_cancellation_at_t_1e3", bal.relative(), 1e-8);
    let mut constraint = 0.0f64;
    for i in 1..400 {
        let z = Z_LEAD + (Z_TRAIL - Z_LEAD) * i as f64 / 400.0;
        let l = asym.interpolated_triple(z)?;
        constraint = constraint.max(
            (3.0 * (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]) + 2.0 * (l[0] * l[1] + l[1] * l[2] + l[2] * l[0]) - 5.0)
                .abs(),
        );
    }
    g.at_most("interpolated_constraint", constraint, 1e-6);
    g.at_most("lead_edge_continuity", (asym.composite_eval(20.0, Z_LEAD)? - SQRT_2).abs(), 1e-12);
    Ok(g.list)
}

fn bvp_gates() -> Result<Vec<Gate>> {
    let mut g = Gates::new(Suite::Bvp);
    // manufactured: the discrete residual of sin(x) becomes the forcing, so
    // sin(x) is an exact solution of the discrete system
    let grid = Grid::new(0.0, 10.0, 0.05)?;
    let t = 1.5;
    let exact: Vec<f64> = grid.points().iter().map(|x| x.sin()).collect();
    let n = grid.n;
    let h = grid.h;
    let left = crate::bvp::EndCondition { u: exact[0], slope: (exact[2] - exact[0]) / (2.0 * h) };
    let right = crate::bvp::EndCondition {
        u: exact[n - 1],
        slope: (exact[n - 1] - exact[n - 3]) / (2.0 * h),
    };
    let mut worst = 0.0f64;
    for stencil in [Stencil::Second, Stencil::Fourth] {
        let pb = OdeProblem::with_ends(t, grid, stencil, left, right);
        let forcing = crate::bvp::ode_residual(&exact, &pb)?;
        let pb = pb.with_forcing(forcing)?;
        let guess: Vec<f64> = grid.points().iter().map(|x| x.sin() + 0.05 * (0.7 * x).cos()).collect();
        let sol = solve_fixed_t(&pb, guess, &NewtonSettings::default())?;
        worst = worst.max(max_abs(sol.u.iter().zip(&exact).map(|(a, b)| a - b)));
    }
    g.at_most("manufactured_recovery", worst, 1e-8);

    let cfg = SolverConfig {
        h: 0.05,
        x_min: -60.0,
        x_max: 60.0,
        t_path: vec![-7.0],
        ..SolverConfig::default()
    };
    let sol = crate::bvp::continuation(&cfg)?.remove(0);
    let (zs, us) = sol.to_scaled()?;
    let dev = max_abs(zs.iter().zip(&us).map(|(&z, &u)| {
        cusp_root(z, CubicBranch::NEGATIVE_TIME).map_or(f64::NAN, |r| u - r)
    }));
    g.at_most("negative_time_root_deviation", dev, 0.05);
    Ok(g.list)
}

fn phase_fit_gates(asym: &AsymptoticSolution) -> Result<Vec<Gate>> {
    let mut g = Gates::new(Suite::PhaseFit);
    let t = 20.0;
    let s = 1.2345;
    let shifted = asym.with_s0(s);
    let zs: Vec<f64> = (0..3000).map(|i| -1.25 + i as f64 * 1.1 / 3000.0).collect();
    let us = zs
        .iter()
        .map(|&z| shifted.u0_eval(t, z))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_phase_samples(t, &zs, &us, asym, DEFAULT_WINDOW)?;
    g.at_most("synthetic_round_trip", (fit.s0_hat - s).abs(), 1e-4);
    g.at_most("synthetic_rms", fit.rms, 1e-8);
    Ok(g.list)
}

/// Run the requested suites; the modulation table is built once and shared.
pub fn run(suites: &[Suite]) -> Result<CheckReport> {
    let needs_table = suites
        .iter()
        .any(|s| matches!(s, Suite::Modulation | Suite::Asymptotics | Suite::PhaseFit));
    let asym = if needs_table {
        Some(AsymptoticSolution::with_default_shift(sweep_zone(512)?)?)
    } else {
        None
    };
    let mut gates = Vec::new();
    for &suite in suites {
        let asym = || asym.as_ref().ok_or_else(|| Error::Invalid("no table".into()));
        gates.extend(match suite {
            Suite::Specfun => specfun_gates()?,
            Suite::Outer => outer_gates()?,
            Suite::Modulation => modulation_gates(asym()?.table())?,
            Suite::Asymptotics => asymptotics_gates(asym()?)?,
            Suite::Bvp => bvp_gates()?,
            Suite::PhaseFit => phase_fit_gates(asym()?)?,
        });
    }
    let passed = gates.iter().all(|g| g.pass);
    Ok(CheckReport { gates, passed })
}
