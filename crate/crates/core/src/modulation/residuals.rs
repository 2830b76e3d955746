//! Independent algebraic and differential checks on modulation points.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use super::{solve_point, ModulationPoint, ModulationTable, Z_LEAD, Z_TRAIL};
use crate::error::{Error, Result};
use crate::specfun::{dn2_jet, elliptic_ke};

/// Max residuals of the three equations satisfied by the leading-order profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnsatzResidual {
    /// First-order (energy) equation.
    pub first_order: f64,
    /// Third-order equation.
    pub third_order: f64,
    /// Fourth-order equation.
    pub fourth_order: f64,
}

impl AnsatzResidual {
    pub fn max(&self) -> f64 {
        self.first_order.max(self.third_order).max(self.fourth_order)
    }
}

/// Substitute `U0(phi) = A dn^2(K phi/pi; k) + C` into the three profile
/// equations and return the max absolute residual of each over `phi_grid`.
///
/// Derivatives in `phi` come from the `dn^2` jet, not from differences.
pub fn ansatz_residual(p: &ModulationPoint, phi_grid: &[f64]) -> Result<AnsatzResidual> {
    let ev = p.elliptic()?;
    let scale = ev.big_k / PI;
    let (a, c, r, z) = (p.amplitude, p.offset, p.r, p.z);
    // Q^n d^n/dphi^n = (Q K/pi)^n d^n/dtheta^n and Q K/pi = B
    let b = p.phase_gradient * scale;
    let mut out = AnsatzResidual {
        first_order: 0.0,
        third_order: 0.0,
        fourth_order: 0.0,
    };
    for &phi in phi_grid {
        let [y, y1, y2, y3, y4] = dn2_jet(scale * phi, p.k)?;
        let u = a * y + c;
        // Q^n * d^n U/dphi^n
        let d1 = b * a * y1;
        let d2 = b * b * a * y2;
        let d3 = b * b * b * a * y3;
        let d4 = b * b * b * b * a * y4;
        let first = d1 * d1 + u * u * u / 3.0 + r * u * u + (18.0 * r * r - 5.0) * u / 3.0
            + (15.0 * r - 54.0 * r * r * r - 5.0 * z) / 3.0;
        let third = d3 + r * d1 + u * d1;
        let fourth = d4 + 5.0 / 6.0 * (2.0 * u * d2 + d1 * d1) + 5.0 / 18.0 * (z - u + u * u * u);
        out.first_order = out.first_order.max(first.abs());
        out.third_order = out.third_order.max(third.abs());
        out.fourth_order = out.fourth_order.max(fourth.abs());
    }
    Ok(out)
}

/// Residuals of the four equations obtained by matching powers of `dn^2`:
///
/// ```text
/// E1 = A - 12 B^2
/// E2 = 4(2 - k^2) B^2 + C + R
/// E3 = (k^2 - 1) A^2 + 3 C^2 + 6 C R + 18 R^2 - 5
/// E4 = C^3 + 3 R C^2 + (18 R^2 - 5) C - 54 R^3 + 15 R - 5 z
/// ```
pub fn dn2_system_residuals(a: f64, b: f64, c: f64, r: f64, k: f64, z: f64) -> [f64; 4] {
    let m = k * k;
    [
        a - 12.0 * b * b,
        4.0 * (2.0 - m) * b * b + c + r,
        (m - 1.0) * a * a + 3.0 * c * c + 6.0 * c * r + 18.0 * r * r - 5.0,
        c * c * c + 3.0 * r * c * c + (18.0 * r * r - 5.0) * c - 54.0 * r * r * r + 15.0 * r
            - 5.0 * z,
    ]
}

/// Coefficient set for the `A^6` term of the degree-six `(A, k, z)` relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Degree6Coefficients {
    /// Palindromic `8, -24, 43, -46, 43, -24, 8`.
    Corrected,
    /// Tail `-43, +24, -8` with the sign pattern broken; kept for diagnostics only.
    Uncorrected,
}

/// The `(A, k, z)` pair with the corrected leading coefficient.
pub fn ak_equation_residuals(a: f64, k: f64, z: f64) -> Result<(f64, f64)> {
    ak_equation_residuals_with(a, k, z, Degree6Coefficients::Corrected)
}

pub fn ak_equation_residuals_with(
    a: f64,
    k: f64,
    z: f64,
    coeffs: Degree6Coefficients,
) -> Result<(f64, f64)> {
    let q = elliptic_ke(k)?.q;
    let m = k * k;
    let tail = match coeffs {
        Degree6Coefficients::Corrected => 43.0 * m * m - 24.0 * m + 8.0,
        Degree6Coefficients::Uncorrected => -43.0 * m * m + 24.0 * m - 8.0,
    };
    let lead6 = 8.0 * m.powi(6) - 24.0 * m.powi(5) + 43.0 * m.powi(4) - 46.0 * m.powi(3) + tail;
    let s = m * m - m + 1.0;
    let a2 = a * a;
    let a3 = a2 * a;
    let r11 = lead6 * a3 * a3 - 140.0 * s * s * a2 * a2
        + 50.0 * z * (m - 2.0) * (2.0 * m - 1.0) * (m + 1.0) * a3
        + 500.0 * s * a2
        + 3375.0 * z * z
        - 500.0;
    let r12 = 21.0 * m * m * (m - 1.0).powi(2) * a3
        + 10.0
            * ((2.0 * q - 1.0) * m.powi(3) - (3.0 * q + 1.0) * m * m - (3.0 * q - 4.0) * m
                + (2.0 * q - 2.0))
            * a
        + 315.0 * z * ((2.0 * q - 1.0) * m * m - (2.0 * q - 3.0) * m + (2.0 * q - 2.0));
    Ok((r11, r12))
}

/// Residuals `z - Y_j + Z_j` of the three self-similar Whitham equations in
/// Riemann-invariant form.
pub fn potemin_residuals(l1: f64, l2: f64, l3: f64, z: f64) -> Result<[f64; 3]> {
    if !(l1 <= l2 && l2 <= l3) || l3 - l1 < 1e-12 {
        return Err(Error::Degenerate {
            l1,
            l2,
            l3,
            reason: "need l1 <= l2 <= l3 and l1 < l3",
        });
    }
    let m = (l2 - l1) / (l3 - l1);
    let q = if m < 1.0 { elliptic_ke(m.sqrt())?.q } else { 0.0 };
    let dens = [1.0 - q, 1.0 - q - m, q];
    if dens.iter().any(|d| d.abs() < 1e-14) {
        return Err(Error::Degenerate {
            l1,
            l2,
            l3,
            reason: "coalescing invariants make a Y_j denominator vanish",
        });
    }
    let s1 = l1 + l2 + l3;
    let s2 = l1 * l2 + l2 * l3 + l3 * l1;
    let s3 = l1 * l2 * l3;
    let v = 5.0 * s1.powi(3) - 12.0 * s1 * s2 + 8.0 * s3;
    // dS2/dl_j = S1 - l_j, dS3/dl_j = product of the other two
    let l = [l1, l2, l3];
    let others = [l2 * l3, l1 * l3, l1 * l2];
    let dv = [0, 1, 2].map(|j| 15.0 * s1 * s1 - 12.0 * s2 - 12.0 * s1 * (s1 - l[j]) + 8.0 * others[j]);
    let y = [
        s1 / 3.0 + 2.0 / 3.0 * (l1 - l2) / dens[0],
        s1 / 3.0 - 2.0 / 3.0 * (l1 - l2) * (1.0 - m) / dens[1],
        s1 / 3.0 + 2.0 / 3.0 * (l3 - l2) / dens[2],
    ];
    Ok([0, 1, 2].map(|j| z - y[j] + (v + (3.0 * y[j] - s1) * dv[j]) / 35.0))
}

/// Numerator `N(z, R)` of `H`, generic so it can be evaluated exactly.
pub fn h_numerator<T>(z: T, r: T) -> T
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + From<i32>,
{
    let c = |v: i32| T::from(v);
    let r2 = r * r;
    let r3 = r2 * r;
    let r4 = r2 * r2;
    let r5 = r4 * r;
    let r6 = r3 * r3;
    let r7 = r6 * r;
    let z2 = z * z;
    c(45) * z2 * z
        + (c(4860) * r3 - c(582) * r) * z2
        + (c(131220) * r6 - c(43416) * r4 + c(2721) * r2 - c(35)) * z
        + c(139968) * r7
        - c(59616) * r5
        + c(6048) * r3
        - c(120) * r
}

fn pole_factors(z: f64, r: f64) -> (f64, f64) {
    (54.0 * r * r * r - 9.0 * r + z, 2.0 * r + 3.0 * z)
}

/// Coefficient `H(z, R)` of the phase-shift equation `s'' + H s' = 0`.
pub fn eval_h(z: f64, r: f64) -> Result<f64> {
    let (d1, d2) = pole_factors(z, r);
    let den = d1 * d1 * d2 * d2;
    if den == 0.0 {
        return Err(Error::Pole { what: "H", z, r });
    }
    Ok(h_numerator(z, r) / (3.0 * den))
}

/// Right-hand side of the first-order ODE satisfied by `R(z)`.
pub fn r_ode_rhs(z: f64, r: f64) -> Result<f64> {
    let (d1, d2) = pole_factors(z, r);
    if d1 * d2 == 0.0 {
        return Err(Error::Pole { what: "dR/dz", z, r });
    }
    let num = 486.0 * r.powi(4) - 171.0 * r * r + 9.0 * z * r + 5.0;
    Ok(num / (9.0 * d1 * d2))
}

/// Centered-difference check of the `R`-ODE at one table point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ROdeSample {
    pub z: f64,
    pub derivative: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `|54R^3 - 9R + z|` or `|2R + 3z|` below `1e-4`; residual not meaningful.
    pub singular: bool,
}

const SINGULAR_GAP: f64 = 1e-4;

fn interior(table: &ModulationTable, step: f64) -> impl Iterator<Item = &ModulationPoint> {
    table
        .points
        .iter()
        .filter(move |p| p.z - step > Z_LEAD && p.z + step < Z_TRAIL)
}

fn centered<F: Fn(&ModulationPoint) -> f64>(p: &ModulationPoint, step: f64, value: F) -> Result<f64> {
    let hi = solve_point(p.z + step, p)?;
    let lo = solve_point(p.z - step, p)?;
    Ok((value(&hi) - value(&lo)) / (2.0 * step))
}

/// `|dR/dz - rhs|` with `dR/dz` from re-solves at `z +- step`.
pub fn r_ode_residual(table: &ModulationTable, step: f64) -> Result<Vec<ROdeSample>> {
    interior(table, step)
        .map(|p| {
            let (d1, d2) = pole_factors(p.z, p.r);
            let singular = d1.abs() < SINGULAR_GAP || d2.abs() < SINGULAR_GAP;
            let derivative = centered(p, step, |q| q.r)?;
            let rhs = if singular { f64::NAN } else { r_ode_rhs(p.z, p.r)? };
            Ok(ROdeSample {
                z: p.z,
                derivative,
                rhs,
                residual: (derivative - rhs).abs(),
                singular,
            })
        })
        .collect()
}

/// `(z, |f'(z) - Q(z)|)` with `f'` from re-solves at `z +- step`.
pub fn phase_gradient_consistency(table: &ModulationTable, step: f64) -> Result<Vec<(f64, f64)>> {
    interior(table, step)
        .map(|p| {
            let d = centered(p, step, |q| q.phase_profile)?;
            Ok((p.z, (d - p.phase_gradient).abs()))
        })
        .collect()
}
