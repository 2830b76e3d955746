//! Real roots of the scaled cusp cubic.
//!
//! For positive time the outer solution solves `z - U + U^3 = 0`, for negative
//! time `z + U + U^3 = 0`. The positive-time cubic has three real roots when
//! `|z| < 2/sqrt(27)`; the branches are then told apart by which end of the
//! real line they continue to.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the three-root region of `U^3 - U + z = 0`.
pub const FOLD_Z: f64 = 0.384_900_179_459_750_5; // 2 / sqrt(27)

const FOLD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeSign {
    Positive,
    Negative,
}

impl TimeSign {
    pub fn of(t: f64) -> Self {
        if t < 0.0 {
            TimeSign::Negative
        } else {
            TimeSign::Positive
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Root continuous from `z -> +inf` (`U <= -1/sqrt(3)` for positive time).
    FromPlusInfinity,
    /// Root continuous from `z -> -inf` (`U >= 1/sqrt(3)` for positive time).
    FromMinusInfinity,
    /// The single real root; only valid where the cubic has one.
    Unique,
}

impl Branch {
    fn name(self) -> &'static str {
        match self {
            Branch::FromPlusInfinity => "from_plus_infinity",
            Branch::FromMinusInfinity => "from_minus_infinity",
            Branch::Unique => "unique",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubicBranch {
    pub t_sign: TimeSign,
    pub branch: Branch,
}

impl CubicBranch {
    pub const NEGATIVE_TIME: CubicBranch = CubicBranch {
        t_sign: TimeSign::Negative,
        branch: Branch::Unique,
    };
    pub const UPPER: CubicBranch = CubicBranch {
        t_sign: TimeSign::Positive,
        branch: Branch::FromMinusInfinity,
    };
    pub const LOWER: CubicBranch = CubicBranch {
        t_sign: TimeSign::Positive,
        branch: Branch::FromPlusInfinity,
    };

    /// Residual of the cubic this branch belongs to.
    pub fn residual(&self, z: f64, u: f64) -> f64 {
        match self.t_sign {
            TimeSign::Positive => z - u + u * u * u,
            TimeSign::Negative => z + u + u * u * u,
        }
    }
}

/// Real cube root of `U^3 + p U + z = 0` when it has a single real root.
fn cardano_single(p: f64, z: f64) -> f64 {
    let half = -0.5 * z;
    let disc = half * half + p * p * p / 27.0;
    let s = disc.max(0.0).sqrt();
    (half + s).cbrt() + (half - s).cbrt()
}

fn polish(cb: &CubicBranch, z: f64, mut u: f64) -> f64 {
    let lin = match cb.t_sign {
        TimeSign::Positive => -1.0,
        TimeSign::Negative => 1.0,
    };
    for _ in 0..4 {
        let f = cb.residual(z, u);
        let df = 3.0 * u * u + lin;
        if df == 0.0 || f == 0.0 {
            break;
        }
        let step = f / df;
        u -= step;
        if step.abs() <= 1e-17 * u.abs().max(1.0) {
            break;
        }
    }
    u
}

/// Root of the cusp cubic on the requested branch.
pub fn cusp_root(z: f64, cb: CubicBranch) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain {
            what: "cusp_root",
            value: z,
            domain: "finite z",
        });
    }
    let seed = match cb.t_sign {
        TimeSign::Negative => cardano_single(1.0, z),
        TimeSign::Positive => {
            let three_roots = z.abs() < FOLD_Z;
            match cb.branch {
                Branch::Unique if three_roots => {
                    return Err(Error::Branch {
                        branch: cb.branch.name(),
                        z,
                        reason: "three real roots; choose a continuation branch",
                    })
                }
                Branch::FromMinusInfinity if z > FOLD_Z => {
                    return Err(Error::Branch {
                        branch: cb.branch.name(),
                        z,
                        reason: "beyond the fold z = 2/sqrt(27)",
                    })
                }
                Branch::FromPlusInfinity if z < -FOLD_Z => {
                    return Err(Error::Branch {
                        branch: cb.branch.name(),
                        z,
                        reason: "beyond the fold z = -2/sqrt(27)",
                    })
                }
                // at |z| = FOLD_Z exactly a named branch is the double root
                Branch::Unique => cardano_single(-1.0, z),
                _ if z.abs() > FOLD_Z => cardano_single(-1.0, z),
                branch => {
                    // U = (2/sqrt 3) cos(alpha/3 + 2 pi j/3), cos(alpha) = -z sqrt(27)/2
                    let alpha = (-z / FOLD_Z).clamp(-1.0, 1.0).acos();
                    let r = 2.0 / 3f64.sqrt();
                    match branch {
                        Branch::FromMinusInfinity => r * (alpha / 3.0).cos(),
                        _ => r * (alpha / 3.0 + 2.0 * PI / 3.0).cos(),
                    }
                }
            }
        }
    };
    Ok(polish(&cb, z, seed))
}

/// Slope `dU/dz` of the branch by implicit differentiation.
pub fn cusp_root_derivative(z: f64, cb: CubicBranch) -> Result<f64> {
    let u = cusp_root(z, cb)?;
    match cb.t_sign {
        TimeSign::Negative => Ok(-1.0 / (3.0 * u * u + 1.0)),
        TimeSign::Positive => {
            let gap = 3.0 * u * u - 1.0;
            if gap.abs() < FOLD_TOL {
                return Err(Error::FoldPoint { u, gap });
            }
            Ok(-1.0 / gap)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn exact_roots() {
        assert_eq!(cusp_root(0.0, CubicBranch::NEGATIVE_TIME).unwrap(), 0.0);
        assert!((cusp_root(-2.0, CubicBranch::NEGATIVE_TIME).unwrap() - 1.0).abs() < 1e-15);
        assert!((cusp_root(0.0, CubicBranch::UPPER).unwrap() - 1.0).abs() < 1e-15);
        assert!((cusp_root(-SQRT2, CubicBranch::UPPER).unwrap() - SQRT2).abs() < 1e-15);
        assert!((cusp_root(0.0, CubicBranch::LOWER).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn slopes() {
        let d = cusp_root_derivative(0.0, CubicBranch::NEGATIVE_TIME).unwrap();
        assert!((d + 1.0).abs() < 1e-15);
        let d = cusp_root_derivative(-SQRT2, CubicBranch::UPPER).unwrap();
        assert!((d + 0.2).abs() < 1e-14);
        let d = cusp_root_derivative(0.0, CubicBranch::UPPER).unwrap();
        assert!((d + 0.5).abs() < 1e-14);
    }

    #[test]
    fn branch_errors() {
        let unique = CubicBranch {
            t_sign: TimeSign::Positive,
            branch: Branch::Unique,
        };
        assert!(matches!(cusp_root(0.1, unique), Err(Error::Branch { .. })));
        assert!(cusp_root(0.5, unique).is_ok());
        assert!(cusp_root(0.5, CubicBranch::UPPER).is_err());
        assert!(cusp_root(-0.5, CubicBranch::LOWER).is_err());
        assert!(matches!(
            cusp_root_derivative(FOLD_Z, CubicBranch::UPPER),
            Err(Error::FoldPoint { .. })
        ));
    }

    #[test]
    fn large_z_asymptotics() {
        for &z in &[1e3, -1e3] {
            for cb in [CubicBranch::NEGATIVE_TIME, CubicBranch::UPPER, CubicBranch::LOWER] {
                if let Ok(u) = cusp_root(z, cb) {
                    let approx = -f64::cbrt(z);
                    assert!(((u - approx) / approx).abs() < 0.01, "{z} {cb:?} {u}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn residual_vanishes(z in -3.0f64..3.0) {
            let mut branches = vec![CubicBranch::NEGATIVE_TIME];
            if z <= FOLD_Z { branches.push(CubicBranch::UPPER); }
            if z >= -FOLD_Z { branches.push(CubicBranch::LOWER); }
            for cb in branches {
                let u = cusp_root(z, cb).unwrap();
                prop_assert!(cb.residual(z, u).abs() <= 1e-14, "{:?} {}", cb, cb.residual(z, u));
            }
        }

        #[test]
        fn branches_are_continuous(z in -3.0f64..3.0) {
            let h = 1e-6;
            for cb in [CubicBranch::NEGATIVE_TIME, CubicBranch::UPPER, CubicBranch::LOWER] {
                if let (Ok(a), Ok(b)) = (cusp_root(z, cb), cusp_root(z + h, cb)) {
                    if let Ok(d) = cusp_root_derivative(z, cb) {
                        if d.abs() < 1e3 {
                            prop_assert!((a - b).abs() <= 2.0 * d.abs() * h + 1e-12);
                        }
                    }
                }
            }
        }

        #[test]
        fn branch_side_is_respected(z in -FOLD_Z..FOLD_Z) {
            prop_assert!(cusp_root(z, CubicBranch::UPPER).unwrap() >= 1.0 / 3f64.sqrt() - 1e-9);
            prop_assert!(cusp_root(z, CubicBranch::LOWER).unwrap() <= -1.0 / 3f64.sqrt() + 1e-9);
        }
    }
}
