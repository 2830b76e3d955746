//! Slowly varying parameters of the cnoidal wave inside the Whitham zone.
//!
//! The primary unknowns are the Whitham variables `l1 <= l2 <= l3`, fixed at
//! each `z` by three algebraic equations (a `z`-free constraint, a
//! `z`-equation and a `q`-equation with `q = E(k)/K(k)`). Every other
//! modulation quantity is an explicit function of the triple:
//!
//! ```text
//! k^2 = (l2 - l1)/(l3 - l1)    A = 2(l3 - l1)    C = l1 + l2 - l3
//! B = sqrt(A/12)    Q = pi B / K(k)    R = (k^2 - 2)A/3 - C    f = Q(4R + 6z)/7
//! ```
//!
//! [`residuals`] holds the independent algebraic routes (dn^2 substitution
//! system, the `(A, k)` pair, Potemin's form, the `R`-ODE and `H(z, R)`),
//! which are checked against the triples produced by [`solve_point`] and
//! [`sweep_zone`].

mod edge;
mod residuals;
mod sweep;
mod whitham;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{elliptic_ke, EllipticEval};

pub use edge::{edge_series_check, h_edge_check, EdgeSample, EdgeSeriesReport, HEdgeReport, HSample};
pub use residuals::{
    ak_equation_residuals, ak_equation_residuals_with, ansatz_residual, dn2_system_residuals,
    eval_h, h_numerator, phase_gradient_consistency, potemin_residuals, r_ode_residual, r_ode_rhs,
    AnsatzResidual, Degree6Coefficients, ROdeSample,
};
pub use sweep::{
    leading_edge_guess, leading_edge_limit, refine_near_lead, sweep_zone, trailing_edge_limit,
    EdgeLimit, LEAD_OFFSET, TRAIL_OFFSET,
};
pub use whitham::{solve_point, solve_triple, whitham_residuals, WhithamResiduals};

/// Leading (harmonic) edge of the oscillation zone, `-sqrt(2)`.
pub const Z_LEAD: f64 = -std::f64::consts::SQRT_2;
/// Trailing (soliton) edge of the oscillation zone, `sqrt(10)/27`.
pub const Z_TRAIL: f64 = 0.117_121_394_821_051_09;

/// Whitham triple at the leading edge, where `k = 0`.
pub const LEAD_TRIPLE: [f64; 3] = [
    -std::f64::consts::SQRT_2 / 4.0,
    -std::f64::consts::SQRT_2 / 4.0,
    std::f64::consts::SQRT_2,
];

/// Whitham triple at the trailing edge (`l2 = l3`, `k = 1`).
pub const TRAIL_TRIPLE: [f64; 3] = [
    -1.054_092_553_389_459_6, // -sqrt(10)/3
    0.790_569_415_042_094_8,  // sqrt(10)/4
    0.790_569_415_042_094_8,
];

/// True when `z` lies strictly inside the oscillation zone.
pub fn in_zone(z: f64) -> bool {
    z > Z_LEAD && z < Z_TRAIL
}

pub(crate) fn check_in_zone(z: f64) -> Result<()> {
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

/// All modulation quantities at one `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationPoint {
    pub z: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Elliptic modulus.
    pub k: f64,
    /// `E(k)/K(k)`.
    pub q: f64,
    /// Amplitude `A` of the `dn^2` profile.
    pub amplitude: f64,
    /// Inner-phase scale `B`.
    pub inner_scale: f64,
    /// Offset `C`.
    pub offset: f64,
    /// Modulation variable `R`.
    pub r: f64,
    /// Phase gradient `Q = f'(z)`.
    pub phase_gradient: f64,
    /// Phase profile `f(z)`.
    pub phase_profile: f64,
}

impl ModulationPoint {
    /// Assemble the derived quantities from a Whitham triple.
    pub fn from_triple(z: f64, [l1, l2, l3]: [f64; 3]) -> Result<Self> {
        if !(l1 <= l2 && l2 <= l3) || l3 - l1 < 1e-12 {
            return Err(Error::Degenerate {
                l1,
                l2,
                l3,
                reason: "need l1 <= l2 <= l3 and l1 < l3",
            });
        }
        let m = (l2 - l1) / (l3 - l1);
        let ev = elliptic_ke(m.sqrt())?;
        Ok(Self::assemble(z, [l1, l2, l3], m, &ev))
    }

    pub(crate) fn assemble(z: f64, [l1, l2, l3]: [f64; 3], m: f64, ev: &EllipticEval) -> Self {
        let amplitude = 2.0 * (l3 - l1);
        let offset = l1 + l2 - l3;
        let inner_scale = (amplitude / 12.0).sqrt();
        let phase_gradient = PI * inner_scale / ev.big_k;
        let r = (m - 2.0) * amplitude / 3.0 - offset;
        ModulationPoint {
            z,
            l1,
            l2,
            l3,
            k: ev.k,
            q: ev.q,
            amplitude,
            inner_scale,
            offset,
            r,
            phase_gradient,
            phase_profile: phase_gradient * (4.0 * r + 6.0 * z) / 7.0,
        }
    }

    pub fn triple(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    /// `k^2`, taken from the triple rather than by squaring `k`.
    pub fn parameter(&self) -> f64 {
        (self.l2 - self.l1) / (self.l3 - self.l1)
    }

    /// `1 - k^2 = (l3 - l2)/(l3 - l1)`, exact near the soliton edge.
    pub fn complementary_parameter(&self) -> f64 {
        (self.l3 - self.l2) / (self.l3 - self.l1)
    }

    pub fn elliptic(&self) -> Result<EllipticEval> {
        elliptic_ke(self.k)
    }

    /// Crest value `A + C` of the profile.
    pub fn crest(&self) -> f64 {
        self.amplitude + self.offset
    }

    /// Trough value `C + A(1 - k^2)`.
    pub fn trough(&self) -> f64 {
        self.offset + self.amplitude * self.complementary_parameter()
    }

    /// `(7/4) f/Q - (3/2) z - R`; zero up to rounding by construction of `f`.
    pub fn r_identity_defect(&self) -> f64 {
        1.75 * self.phase_profile / self.phase_gradient - 1.5 * self.z - self.r
    }

    /// `3(l1^2+l2^2+l3^2) + 2(l1 l2 + l2 l3 + l3 l1) - 5`.
    pub fn constraint(&self) -> f64 {
        whitham::constraint(self.triple())
    }
}

/// Modulation points strictly increasing in `z` across the zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationTable {
    pub points: Vec<ModulationPoint>,
    pub z_lead: f64,
    pub z_trail: f64,
}

impl ModulationTable {
    pub fn new(points: Vec<ModulationPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("empty modulation table".into()));
        }
        if points.windows(2).any(|w| w[1].z <= w[0].z) {
            return Err(Error::Invalid("modulation table must be strictly increasing in z".into()));
        }
        Ok(ModulationTable {
            points,
            z_lead: Z_LEAD,
            z_trail: Z_TRAIL,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ModulationPoint> {
        self.points.iter()
    }

    pub fn first(&self) -> &ModulationPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &ModulationPoint {
        &self.points[self.points.len() - 1]
    }

    /// Points with `z` in `[lo, hi]`.
    pub fn between(&self, lo: f64, hi: f64) -> impl Iterator<Item = &ModulationPoint> {
        self.points.iter().filter(move |p| p.z >= lo && p.z <= hi)
    }
}
