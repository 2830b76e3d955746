//! Continuation across the zone and extrapolation to its edges.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use super::whitham::solve_triple;
use super::{ModulationPoint, ModulationTable, Z_LEAD, Z_TRAIL};
use crate::error::{Error, Result};
use crate::linalg::solve_dense;

/// Distance of the first table node from the leading edge.
pub const LEAD_OFFSET: f64 = 1e-6;
/// Distance of the last table node from the trailing edge.
pub const TRAIL_OFFSET: f64 = 1e-8;

/// Below this distance from the leading edge the near-edge series
/// seeds Newton instead of the secant predictor.
const SERIES_RANGE: f64 = 1e-3;
const MAX_NEWTON_PER_STEP: usize = 8;
const MIN_STEP: f64 = 1e-14;

/// Near-edge series for `k` and `R` as functions of `e = z - z_lead`.
pub(crate) fn lead_series(e: f64) -> (f64, f64) {
    let s = e.sqrt();
    let k = 2f64.powf(0.875) / 5f64.sqrt()
        * e.powf(0.25)
        * (1.0 - 2f64.powf(0.75) / 10.0 * s + 131.0 / 1280.0 * SQRT_2 * e);
    let r = -SQRT_2 / 6.0 + e / 40.0 + 7.0 / 2560.0 * SQRT_2 * e * e;
    (k, r)
}

/// Whitham triple near the leading edge from the near-edge series.
///
/// `k` and `R` come from the series; `A` is then the root of the quadratic
/// the constraint becomes once `C = (k^2 - 2)A/3 - R` is substituted.
pub fn leading_edge_guess(z: f64) -> Result<[f64; 3]> {
    let e = z - Z_LEAD;
    if e <= 0.0 {
        return Err(Error::OutOfZone {
            z,
            lead: Z_LEAD,
            trail: Z_TRAIL,
        });
    }
    let (k, r) = lead_series(e);
    let m = (k * k).min(0.999);
    // l_j = a_j A - R
    let a1 = (m - 2.0) / 3.0 + (1.0 - m) / 2.0;
    let a = [a1, a1 + m / 2.0, a1 + 0.5];
    let sum_a: f64 = a.iter().sum();
    let sum_sq: f64 = a.iter().map(|v| v * v).sum();
    let quad = 2.0 * sum_sq + sum_a * sum_a;
    let lin = -10.0 * r * sum_a;
    let cst = 15.0 * r * r - 5.0;
    let disc = (lin * lin - 4.0 * quad * cst).max(0.0).sqrt();
    let roots = [(-lin + disc) / (2.0 * quad), (-lin - disc) / (2.0 * quad)];
    let target = 2.5 * SQRT_2;
    let amp = if (roots[0] - target).abs() < (roots[1] - target).abs() {
        roots[0]
    } else {
        roots[1]
    };
    Ok(a.map(|aj| aj * amp - r))
}

fn table_nodes(n: usize) -> Vec<f64> {
    let span = Z_TRAIL - Z_LEAD - LEAD_OFFSET - TRAIL_OFFSET;
    (0..n)
        .map(|i| {
            let tau = i as f64 / (n - 1) as f64;
            let w = 0.5 * (1.0 - (PI * tau).cos());
            Z_LEAD + LEAD_OFFSET + span * w
        })
        .collect()
}

struct Marcher {
    z: f64,
    l: [f64; 3],
    prev: Option<(f64, [f64; 3])>,
}

impl Marcher {
    fn predict(&self, zn: f64) -> [f64; 3] {
        if zn - Z_LEAD < SERIES_RANGE {
            if let Ok(g) = leading_edge_guess(zn) {
                return g;
            }
        }
        if let Some((zp, lp)) = self.prev {
            let s = (zn - self.z) / (self.z - zp);
            let g = [0, 1, 2].map(|j| self.l[j] + s * (self.l[j] - lp[j]));
            if g[0] <= g[1] && g[1] < g[2] {
                return g;
            }
        }
        self.l
    }

    fn advance_to(&mut self, target: f64) -> Result<()> {
        let mut dz = target - self.z;
        while self.z < target {
            let zn = (self.z + dz).min(target);
            let step = solve_triple(zn, self.predict(zn))
                .or_else(|_| solve_triple(zn, self.l));
            match step {
                Ok((l, iters)) if iters <= MAX_NEWTON_PER_STEP => {
                    self.prev = Some((self.z, self.l));
                    self.z = zn;
                    self.l = l;
                }
                outcome => {
                    dz *= 0.5;
                    if dz < MIN_STEP {
                        let source = match outcome {
                            Err(e) => e,
                            Ok((_, iters)) => Error::Convergence {
                                z: zn,
                                iterations: iters,
                                residual: f64::NAN,
                            },
                        };
                        return Err(Error::Continuation {
                            z: zn,
                            source: Box::new(source),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Continuation sweep from the leading to the trailing edge on `n` nodes.
///
/// Nodes cluster towards both edges; the first sits `LEAD_OFFSET` inside
/// the leading edge and the last `TRAIL_OFFSET` inside the trailing edge.
pub fn sweep_zone(n: usize) -> Result<ModulationTable> {
    if n < 16 {
        return Err(Error::Invalid(format!("sweep_zone needs n >= 16, got {n}")));
    }
    let nodes = table_nodes(n);
    let z0 = nodes[0];
    let (l0, _) = solve_triple(z0, leading_edge_guess(z0)?).map_err(|e| Error::Continuation {
        z: z0,
        source: Box::new(e),
    })?;
    let mut marcher = Marcher {
        z: z0,
        l: l0,
        prev: None,
    };
    let mut points = Vec::with_capacity(n);
    points.push(ModulationPoint::from_triple(z0, l0)?);
    for &z in &nodes[1..] {
        marcher.advance_to(z)?;
        points.push(ModulationPoint::from_triple(z, marcher.l)?);
    }
    ModulationTable::new(points)
}

/// Points at the given distances from the leading edge, each solved from
/// the near-edge series.
pub fn refine_near_lead(offsets: &[f64]) -> Result<ModulationTable> {
    let mut sorted = offsets.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let points = sorted
        .iter()
        .map(|&e| {
            let z = Z_LEAD + e;
            let (l, _) = solve_triple(z, leading_edge_guess(z)?)?;
            ModulationPoint::from_triple(z, l)
        })
        .collect::<Result<Vec<_>>>()?;
    ModulationTable::new(points)
}

/// Values extrapolated to the leading edge (`k -> 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeLimit {
    pub z: f64,
    pub l: [f64; 3],
    pub r: f64,
    /// `A + C`, the constant profile value at the edge.
    pub crest: f64,
}

/// Extrapolate the three points nearest the leading edge to `k = 0`.
///
/// `z - z_lead` is a power series in `k^2` starting at `k^4`, while the
/// triple and `R` are regular in `k^2`.
pub fn leading_edge_limit(table: &ModulationTable) -> Result<EdgeLimit> {
    if table.len() < 3 {
        return Err(Error::Invalid("need at least three points".into()));
    }
    let pts = &table.points[..3];
    let ms = [0, 1, 2].map(|i| pts[i].parameter());
    let regular = |m: f64| [1.0, m, m * m];
    let quartic = |m: f64| [1.0, m * m, m * m * m];
    let at = |value: &dyn Fn(&ModulationPoint) -> f64| [0, 1, 2].map(|i| value(&pts[i]));
    Ok(EdgeLimit {
        z: intercept(ms, at(&|p| p.z), quartic)?,
        l: [
            intercept(ms, at(&|p| p.l1), regular)?,
            intercept(ms, at(&|p| p.l2), regular)?,
            intercept(ms, at(&|p| p.l3), regular)?,
        ],
        r: intercept(ms, at(&|p| p.r), regular)?,
        crest: intercept(ms, at(&|p| p.crest()), regular)?,
    })
}

/// Constant term of the interpolant through three points in the given basis.
fn intercept(xs: [f64; 3], ys: [f64; 3], basis: impl Fn(f64) -> [f64; 3]) -> Result<f64> {
    solve_dense(xs.map(basis), ys)
        .map(|c| c[0])
        .ok_or_else(|| Error::Invalid("singular edge extrapolation".into()))
}

/// Extrapolate the three points nearest the trailing edge to `k = 1`.
///
/// With `m1 = 1 - k^2`, the edge is approached as
/// `z = z_t - a m1 ln(16/m1) - b m1`.
pub fn trailing_edge_limit(table: &ModulationTable) -> Result<f64> {
    let n = table.len();
    if n < 3 {
        return Err(Error::Invalid("need at least three points".into()));
    }
    let pts = &table.points[n - 3..];
    let m1 = [0, 1, 2].map(|i| pts[i].complementary_parameter());
    intercept(m1, [0, 1, 2].map(|i| pts[i].z), |m| [1.0, m * (16.0 / m).ln(), m])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::whitham::constraint;

    #[test]
    fn series_guess_satisfies_constraint() {
        for &e in &[1e-8, 1e-5, 1e-3] {
            let g = leading_edge_guess(Z_LEAD + e).unwrap();
            assert!(constraint(g).abs() < 1e-12);
            assert!(g[0] <= g[1] && g[1] <= g[2]);
        }
        assert!(leading_edge_guess(Z_LEAD - 1e-3).is_err());
    }

    #[test]
    fn nodes_cover_the_zone() {
        let nodes = table_nodes(64);
        assert!((nodes[0] - Z_LEAD - LEAD_OFFSET).abs() < 1e-15);
        assert!((nodes[63] - Z_TRAIL + TRAIL_OFFSET).abs() < 1e-15);
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn too_few_nodes() {
        assert!(matches!(sweep_zone(8), Err(Error::Invalid(_))));
    }
}
