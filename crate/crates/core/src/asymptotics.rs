//! Leading-order solution: modulated cnoidal wave inside the zone, cusp-cubic
//! roots outside.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modulation::{
    in_zone, leading_edge_guess, solve_triple, ModulationPoint, ModulationTable, Z_LEAD, Z_TRAIL,
};
use crate::outer::{cusp_root, CubicBranch};
use crate::specfun::{dn2_jet, jacobi_dn};

/// Exponent of `t` in the fast phase `t^(7/4) f(z) + s0`.
pub const PHASE_EXPONENT: f64 = 1.75;

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
#[derive(Debug, Clone)]
struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        if n == 2 {
            ds = vec![delta[0]; 2];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            ds[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            ds[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Pchip { xs, ys, ds }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1]
    }
}

/// One-sided three-point end slope, limited to keep monotonicity.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Interpolation variable `sqrt(z - z_lead) - sqrt(z_trail - z)`: the triple
/// has square-root branches at both edges and is smoother in this variable.
fn abscissa(z: f64) -> f64 {
    (z - Z_LEAD).max(0.0).sqrt() - (Z_TRAIL - z).max(0.0).sqrt()
}

/// Leading-order solution built on a modulation table.
#[derive(Debug, Clone)]
pub struct AsymptoticSolution {
    table: ModulationTable,
    s0: f64,
    interp: [Pchip; 3],
}

impl AsymptoticSolution {
    /// Phase shift `s0` is reduced into `[0, 2 pi)`.
    pub fn new(table: ModulationTable, s0: f64) -> Result<Self> {
        if !s0.is_finite() {
            return Err(Error::Invalid(format!("phase shift must be finite, got {s0}")));
        }
        if table.len() < 4 {
            return Err(Error::Invalid("interpolation needs at least 4 table points".into()));
        }
        let zs: Vec<f64> = table.iter().map(|p| abscissa(p.z)).collect();
        let col = |f: fn(&ModulationPoint) -> f64| table.iter().map(f).collect::<Vec<_>>();
        let interp = [
            Pchip::new(zs.clone(), col(|p| p.l1)),
            Pchip::new(zs.clone(), col(|p| p.l2)),
            Pchip::new(zs, col(|p| p.l3)),
        ];
        Ok(AsymptoticSolution {
            table,
            s0: s0.rem_euclid(2.0 * PI),
            interp,
        })
    }

    /// Phase shift `pi`.
    pub fn with_default_shift(table: ModulationTable) -> Result<Self> {
        Self::new(table, PI)
    }

    pub fn table(&self) -> &ModulationTable {
        &self.table
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn with_s0(&self, s0: f64) -> Self {
        AsymptoticSolution {
            s0: s0.rem_euclid(2.0 * PI),
            ..self.clone()
        }
    }

    /// Raw interpolated triple, before any Newton polish.
    pub fn interpolated_triple(&self, z: f64) -> Result<[f64; 3]> {
        self.check_zone(z)?;
        let w = abscissa(z);
        Ok([0, 1, 2].map(|j| self.interp[j].eval(w)))
    }

    /// Modulation point at `z`, solved from the interpolated triple.
    pub fn modulation_at(&self, z: f64) -> Result<ModulationPoint> {
        self.check_zone(z)?;
        let guess = if z < self.table.first().z {
            leading_edge_guess(z)?
        } else if z > self.table.last().z {
            self.table.last().triple()
        } else {
            let g = self.interpolated_triple(z)?;
            if g[0] <= g[1] && g[1] <= g[2] {
                g
            } else {
                self.nearest(z).triple()
            }
        };
        let (l, _) = solve_triple(z, guess).or_else(|_| solve_triple(z, self.nearest(z).triple()))?;
        ModulationPoint::from_triple(z, l)
    }

    fn nearest(&self, z: f64) -> &ModulationPoint {
        let pts = &self.table.points;
        let i = pts.partition_point(|p| p.z < z).min(pts.len() - 1);
        if i > 0 && (pts[i - 1].z - z).abs() < (pts[i].z - z).abs() {
            &pts[i - 1]
        } else {
            &pts[i]
        }
    }

    fn check_zone(&self, z: f64) -> Result<()> {
        if in_zone(z) {
            Ok(())
        } else {
            Err(Error::OutOfZone {
                z,
                lead: Z_LEAD,
                trail: Z_TRAIL,
            })
        }
    }

    /// Fast phase `t^(7/4) f(z) + s0`.
    pub fn phase(&self, t: f64, z: f64) -> Result<f64> {
        let p = self.modulation_at(z)?;
        phase_of(t, &p, self.s0)
    }

    /// `A dn^2(K phi/pi; k) + C` at the fast phase for `(t, z)`.
    pub fn u0_eval(&self, t: f64, z: f64) -> Result<f64> {
        let p = self.modulation_at(z)?;
        profile_at_phase(&p, phase_of(t, &p, self.s0)?)
    }

    /// Oscillatory profile inside the zone; cubic branches outside.
    pub fn composite_eval(&self, t: f64, z: f64) -> Result<f64> {
        if t < 0.0 {
            return cusp_root(z, CubicBranch::NEGATIVE_TIME);
        }
        if z <= Z_LEAD {
            cusp_root(z, CubicBranch::UPPER)
        } else if z >= Z_TRAIL {
            cusp_root(z, CubicBranch::LOWER)
        } else {
            self.u0_eval(t, z)
        }
    }

    /// `u(x, t) = sqrt|t| U(t, x/|t|^(3/2))`.
    pub fn physical_eval(&self, t: f64, x: f64) -> Result<f64> {
        if t == 0.0 || !t.is_finite() {
            return Err(Error::Domain {
                what: "physical_eval",
                value: t,
                domain: "finite t != 0",
            });
        }
        let at = t.abs();
        Ok(at.sqrt() * self.composite_eval(t, x / (at * at.sqrt()))?)
    }

    /// `composite_eval` on each `z`, evaluated in parallel.
    pub fn sample_scaled(&self, t: f64, zs: &[f64]) -> Result<Vec<f64>> {
        zs.par_iter().map(|&z| self.composite_eval(t, z)).collect()
    }

    /// `physical_eval` on each `x`, evaluated in parallel.
    pub fn sample_physical(&self, t: f64, xs: &[f64]) -> Result<Vec<f64>> {
        xs.par_iter().map(|&x| self.physical_eval(t, x)).collect()
    }

    /// Cancellation of the `t^(7/4)`-order terms of the scaled equation at
    /// frozen modulation; see [`LeadingOrderBalance`].
    pub fn leading_order_balance(&self, t: f64, z: f64, phis: &[f64]) -> Result<LeadingOrderBalance> {
        let p = self.modulation_at(z)?;
        leading_order_balance(t, &p, phis)
    }
}

fn phase_of(t: f64, p: &ModulationPoint, s0: f64) -> Result<f64> {
    if t <= 0.0 || !t.is_finite() {
        return Err(Error::Domain {
            what: "phase",
            value: t,
            domain: "t > 0",
        });
    }
    Ok(t.powf(PHASE_EXPONENT) * p.phase_profile + s0)
}

/// `A dn^2(K phi/pi; k) + C`, `2 pi`-periodic in `phi`.
pub fn profile_at_phase(p: &ModulationPoint, phi: f64) -> Result<f64> {
    let ev = p.elliptic()?;
    let dn = jacobi_dn(ev.big_k / PI * phi, p.k)?;
    Ok(p.amplitude * dn * dn + p.offset)
}

/// Terms of `t U_t + (U - 3z U_z)/2 + U U_z + t^(-7/2) U_zzz` that grow like
/// `t^(7/4)` when `U = U0(t^(7/4) f(z) + s0)` with the modulation frozen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingOrderBalance {
    /// Largest single term over the sampled phases.
    pub largest_term: f64,
    /// Largest sum of the four terms.
    pub residual: f64,
}

impl LeadingOrderBalance {
    pub fn relative(&self) -> f64 {
        self.residual / self.largest_term
    }
}

pub fn leading_order_balance(t: f64, p: &ModulationPoint, phis: &[f64]) -> Result<LeadingOrderBalance> {
    let ev = p.elliptic()?;
    let scale = ev.big_k / PI;
    let tf = t.powf(PHASE_EXPONENT);
    // phi_z = t^(7/4) Q, phi_t = (7/4) t^(3/4) f
    let phi_z = tf * p.phase_gradient;
    let mut out = LeadingOrderBalance {
        largest_term: 0.0,
        residual: 0.0,
    };
    for &phi in phis {
        let [y, y1, _, y3, _] = dn2_jet(scale * phi, p.k)?;
        let u = p.amplitude * y + p.offset;
        let u_phi = p.amplitude * scale * y1;
        let u_phi3 = p.amplitude * scale.powi(3) * y3;
        let terms = [
            PHASE_EXPONENT * tf * p.phase_profile * u_phi,
            -1.5 * p.z * phi_z * u_phi,
            u * phi_z * u_phi,
            t.powf(-3.5) * phi_z.powi(3) * u_phi3,
        ];
        let sum: f64 = terms.iter().sum();
        out.residual = out.residual.max(sum.abs());
        out.largest_term = terms.iter().fold(out.largest_term, |a, v| a.max(v.abs()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_reproduces_lines_and_stays_monotone() {
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.7).collect();
        let line = Pchip::new(xs.clone(), xs.iter().map(|x| 2.0 * x - 1.0).collect());
        for i in 0..50 {
            let x = i as f64 * 0.07;
            assert!((line.eval(x) - (2.0 * x - 1.0)).abs() < 1e-13);
        }
        let step = Pchip::new(xs.clone(), vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=350 {
            let v = step.eval(i as f64 * 0.01);
            assert!(v >= prev - 1e-15 && (-1e-15..=1.0 + 1e-15).contains(&v));
            prev = v;
        }
    }
}
