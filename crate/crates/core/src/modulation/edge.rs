//! Comparison of solved points with the near-edge expansions.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use super::residuals::eval_h;
use super::sweep::{lead_series, refine_near_lead};
use super::{ModulationTable, Z_LEAD};
use crate::error::{Error, Result};
use crate::linalg::least_squares;

/// Range of `z - z_lead` used by [`edge_series_check`].
const SERIES_WINDOW: (f64, f64) = (1e-4, 1e-2);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeSample {
    /// `z - z_lead`.
    pub offset: f64,
    pub k: f64,
    pub k_series: f64,
    pub r: f64,
    pub r_series: f64,
}

impl EdgeSample {
    pub fn k_deviation(&self) -> f64 {
        (self.k - self.k_series).abs() / self.k_series
    }

    pub fn r_deviation(&self) -> f64 {
        (self.r - self.r_series).abs() / self.r_series.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeSeriesReport {
    pub samples: Vec<EdgeSample>,
    /// Limit of `k / (z - z_lead)^(1/4)` at the edge.
    pub k_coefficient: f64,
    /// `R` extrapolated to the edge.
    pub r_edge: f64,
    /// `dR/dz` at the edge from a one-sided quadratic fit.
    pub r_slope: f64,
}

impl EdgeSeriesReport {
    pub fn max_k_deviation(&self) -> f64 {
        self.samples.iter().map(EdgeSample::k_deviation).fold(0.0, f64::max)
    }

    pub fn max_r_deviation(&self) -> f64 {
        self.samples.iter().map(EdgeSample::r_deviation).fold(0.0, f64::max)
    }
}

/// Fit `k` and `R` on the table points with `z - z_lead` in `[1e-4, 1e-2]`.
pub fn edge_series_check(table: &ModulationTable) -> Result<EdgeSeriesReport> {
    let samples: Vec<EdgeSample> = table
        .between(Z_LEAD + SERIES_WINDOW.0, Z_LEAD + SERIES_WINDOW.1)
        .map(|p| {
            let offset = p.z - Z_LEAD;
            let (k_series, r_series) = lead_series(offset);
            EdgeSample {
                offset,
                k: p.k,
                k_series,
                r: p.r,
                r_series,
            }
        })
        .collect();
    if samples.len() < 4 {
        return Err(Error::Invalid(format!(
            "need at least 4 points with z - z_lead in [1e-4, 1e-2], got {}",
            samples.len()
        )));
    }
    let es: Vec<f64> = samples.iter().map(|s| s.offset).collect();
    let scaled_k: Vec<f64> = samples.iter().map(|s| s.k / s.offset.powf(0.25)).collect();
    let rs: Vec<f64> = samples.iter().map(|s| s.r).collect();
    let singular = || Error::Invalid("singular edge fit".into());
    let kc = least_squares(&es, &scaled_k, |e| [1.0, e.sqrt(), e]).ok_or_else(singular)?;
    let rc = least_squares(&es, &rs, |e| [1.0, e, e * e]).ok_or_else(singular)?;
    Ok(EdgeSeriesReport {
        samples,
        k_coefficient: kc[0],
        r_edge: rc[0],
        r_slope: rc[1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HSample {
    pub offset: f64,
    pub h: f64,
}

impl HSample {
    /// `(z - z_lead) H`, which tends to 1.
    pub fn scaled(&self) -> f64 {
        self.offset * self.h
    }

    /// `H - 1/(z - z_lead)`.
    pub fn regular_part(&self) -> f64 {
        self.h - 1.0 / self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HEdgeReport {
    pub samples: Vec<HSample>,
    /// Extrapolated `H - 1/(z - z_lead)` at the edge.
    pub constant: f64,
    /// Expected value `-(543/1600) sqrt(2)`.
    pub expected: f64,
}

/// Evaluate `H(z, R(z))` at the given distances from the leading edge and
/// extrapolate its regular part linearly in the offset.
pub fn h_edge_check(offsets: &[f64]) -> Result<HEdgeReport> {
    let table = refine_near_lead(offsets)?;
    let samples = table
        .iter()
        .map(|p| {
            Ok(HSample {
                offset: p.z - Z_LEAD,
                h: eval_h(p.z, p.r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if samples.len() < 2 {
        return Err(Error::Invalid("need at least two offsets".into()));
    }
    let es: Vec<f64> = samples.iter().map(|s| s.offset).collect();
    let gs: Vec<f64> = samples.iter().map(HSample::regular_part).collect();
    let c = if samples.len() >= 3 {
        least_squares(&es, &gs, |e| [1.0, e, e * e]).map(|c| c[0])
    } else {
        least_squares(&es, &gs, |e| [1.0, e]).map(|c| c[0])
    }
    .ok_or_else(|| Error::Invalid("singular H extrapolation".into()))?;
    Ok(HEdgeReport {
        samples,
        constant: c,
        expected: -543.0 / 1600.0 * SQRT_2,
    })
}
