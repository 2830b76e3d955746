use serde::Serialize;

use super::{check_in_zone, ModulationPoint};
use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::specfun::{elliptic_ke, q_derivative_m};

const MAX_ITER: usize = 50;
/// Target for the cleared residual norm.
const TOL: f64 = 1e-13;
/// Acceptance level when the iteration stagnates at rounding.
const ACCEPT: f64 = 1e-11;

/// Residuals of the three algebraic Whitham equations at `(l1, l2, l3, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhithamResiduals {
    pub constraint: f64,
    pub z_equation: f64,
    pub q_equation: f64,
}

impl WhithamResiduals {
    pub fn max_abs(&self) -> f64 {
        self.constraint
            .abs()
            .max(self.z_equation.abs())
            .max(self.q_equation.abs())
    }
}

pub(crate) fn constraint([l1, l2, l3]: [f64; 3]) -> f64 {
    3.0 * (l1 * l1 + l2 * l2 + l3 * l3) + 2.0 * (l1 * l2 + l2 * l3 + l3 * l1) - 5.0
}

fn z_polynomial([l1, l2, l3]: [f64; 3]) -> f64 {
    (2.0 / 45.0)
        * (l1 * (8.0 * l2 * l2 + 4.0 * l2 * l3 + 8.0 * l3 * l3 - 15.0)
            - (l2 + l3) * (24.0 * l2 * l2 - 8.0 * l2 * l3 + 24.0 * l3 * l3 - 25.0))
}

/// Numerator and denominator of the rational side of the `q`-equation.
fn q_rational([l1, l2, l3]: [f64; 3]) -> (f64, f64) {
    let num = 0.5 * (l2 - l3) * (3.0 * l2 * l3 + 3.0 * l3 * l1 + 9.0 * l3 * l3 - 5.0);
    let den = l1 * (2.0 * l2 * l2 + l2 * l3 + 2.0 * l3 * l3 - 5.0)
        - (l2 + l3) * (6.0 * l2 * l2 - 2.0 * l2 * l3 + 6.0 * l3 * l3 - 5.0);
    (num, den)
}

fn check_admissible([l1, l2, l3]: [f64; 3]) -> Result<f64> {
    if !(l1 <= l2 && l2 <= l3) || l3 - l1 < 1e-12 {
        return Err(Error::Degenerate {
            l1,
            l2,
            l3,
            reason: "need l1 <= l2 <= l3 with l3 - l1 >= 1e-12",
        });
    }
    Ok((l2 - l1) / (l3 - l1))
}

/// Residuals of the constraint, the `z`-equation and the `q`-equation.
pub fn whitham_residuals(l1: f64, l2: f64, l3: f64, z: f64) -> Result<WhithamResiduals> {
    let l = [l1, l2, l3];
    let m = check_admissible(l)?;
    let (num, den) = q_rational(l);
    if den.abs() < 1e-300 {
        return Err(Error::Degenerate {
            l1,
            l2,
            l3,
            reason: "q-equation denominator vanishes",
        });
    }
    let q = if m >= 1.0 { 0.0 } else { elliptic_ke(m.sqrt())?.q };
    Ok(WhithamResiduals {
        constraint: constraint(l),
        z_equation: z - z_polynomial(l),
        q_equation: q - num / den,
    })
}

/// System with the `q`-equation multiplied through by its denominator,
/// together with the analytic Jacobian.
fn cleared_system(l: [f64; 3], z: f64) -> Result<([f64; 3], [[f64; 3]; 3])> {
    let [l1, l2, l3] = l;
    let m = check_admissible(l)?;
    if m >= 1.0 {
        return Err(Error::Degenerate {
            l1,
            l2,
            l3,
            reason: "k = 1 reached",
        });
    }
    let ev = elliptic_ke(m.sqrt())?;
    let dq_dm = q_derivative_m(&ev);
    let (num, den) = q_rational(l);
    let f = [constraint(l), z - z_polynomial(l), ev.q * den - num];

    let s = l1 + l2 + l3;
    let dc = [6.0 * l1 + 2.0 * (s - l1), 6.0 * l2 + 2.0 * (s - l2), 6.0 * l3 + 2.0 * (s - l3)];

    let p2 = 24.0 * l2 * l2 - 8.0 * l2 * l3 + 24.0 * l3 * l3 - 25.0;
    let dg = [
        8.0 * l2 * l2 + 4.0 * l2 * l3 + 8.0 * l3 * l3 - 15.0,
        l1 * (16.0 * l2 + 4.0 * l3) - p2 - (l2 + l3) * (48.0 * l2 - 8.0 * l3),
        l1 * (4.0 * l2 + 16.0 * l3) - p2 - (l2 + l3) * (48.0 * l3 - 8.0 * l2),
    ];
    let dz = dg.map(|g| -(2.0 / 45.0) * g);

    let w = l3 - l1;
    let dm = [(l2 - l3) / (w * w), 1.0 / w, -(l2 - l1) / (w * w)];
    let d2 = 6.0 * l2 * l2 - 2.0 * l2 * l3 + 6.0 * l3 * l3 - 5.0;
    let dden = [
        2.0 * l2 * l2 + l2 * l3 + 2.0 * l3 * l3 - 5.0,
        l1 * (4.0 * l2 + l3) - d2 - (l2 + l3) * (12.0 * l2 - 2.0 * l3),
        l1 * (l2 + 4.0 * l3) - d2 - (l2 + l3) * (12.0 * l3 - 2.0 * l2),
    ];
    let p = 3.0 * l2 * l3 + 3.0 * l3 * l1 + 9.0 * l3 * l3 - 5.0;
    let dnum = [
        0.5 * (l2 - l3) * 3.0 * l3,
        0.5 * (p + (l2 - l3) * 3.0 * l3),
        0.5 * (-p + (l2 - l3) * (3.0 * l1 + 3.0 * l2 + 18.0 * l3)),
    ];
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        jac[0][j] = dc[j];
        jac[1][j] = dz[j];
        jac[2][j] = dq_dm * dm[j] * den + ev.q * dden[j] - dnum[j];
    }
    Ok((f, jac))
}

fn norm(f: &[f64; 3]) -> f64 {
    f.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn ordered(l: &[f64; 3]) -> bool {
    l[0] <= l[1] && l[1] <= l[2] && l[2] - l[0] >= 1e-12 && (l[1] - l[0]) < (l[2] - l[0])
}

/// Damped Newton solve of the Whitham system from a guess triple.
///
/// Returns the triple and the number of Newton iterations used.
pub fn solve_triple(z: f64, guess: [f64; 3]) -> Result<([f64; 3], usize)> {
    check_admissible(guess)?;
    let mut l = guess;
    let (mut f, mut jac) = cleared_system(l, z)?;
    let mut res = norm(&f);
    for iter in 0..MAX_ITER {
        if res <= TOL {
            return Ok((l, iter));
        }
        let step = solve_dense(jac, f.map(|v| -v)).ok_or(Error::Convergence {
            z,
            iterations: iter,
            residual: res,
        })?;
        let mut lambda = 1.0;
        let mut accepted = None;
        let mut ordering_failed = false;
        while lambda >= 1e-6 {
            let trial = [
                l[0] + lambda * step[0],
                l[1] + lambda * step[1],
                l[2] + lambda * step[2],
            ];
            if !ordered(&trial) {
                ordering_failed = true;
                lambda *= 0.5;
                continue;
            }
            if let Ok((ft, jt)) = cleared_system(trial, z) {
                let rt = norm(&ft);
                if rt < res * (1.0 - 1e-4 * lambda) || rt <= TOL {
                    accepted = Some((trial, ft, jt, rt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((lt, ft, jt, rt)) => {
                l = lt;
                f = ft;
                jac = jt;
                res = rt;
            }
            None if res <= ACCEPT => return Ok((l, iter)),
            None if ordering_failed => return Err(Error::Ordering { z }),
            None => {
                return Err(Error::Convergence {
                    z,
                    iterations: iter,
                    residual: res,
                })
            }
        }
    }
    if res <= ACCEPT {
        Ok((l, MAX_ITER))
    } else {
        Err(Error::Convergence {
            z,
            iterations: MAX_ITER,
            residual: res,
        })
    }
}

/// Solve for the modulation point at `z`, starting from `guess`.
pub fn solve_point(z: f64, guess: &ModulationPoint) -> Result<ModulationPoint> {
    check_in_zone(z)?;
    let (l, _) = solve_triple(z, guess.triple())?;
    ModulationPoint::from_triple(z, l)
}
