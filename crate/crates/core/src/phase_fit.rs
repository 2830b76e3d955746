//! Fit of the constant phase shift and of the decay exponent of the
//! difference between numeric and leading-order solutions.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{AsymptoticSolution, PHASE_EXPONENT};
use crate::bvp::GridSolution;
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::modulation::{Z_LEAD, Z_TRAIL};
use crate::specfun::jacobi_dn;

/// Default comparison window in `z`.
pub const DEFAULT_WINDOW: (f64, f64) = (-1.2, -0.2);
/// Minimum distance of the window from either zone edge.
pub const EDGE_MARGIN: f64 = 0.1;
/// Number of phase values in the scan.
pub const SCAN_POINTS: usize = 720;
const MIN_PERIODS: f64 = 10.0;
/// Looser period count for the per-`t` fits behind [`fit_exponent`]; the
/// default window holds fewer than 10 periods at `t = 10`.
const MIN_PERIODS_SCALING: f64 = 5.0;
const MIN_SAMPLES_PER_PERIOD: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFitResult {
    pub t: f64,
    /// Fitted phase shift in `[0, 2 pi)`.
    pub s0_hat: f64,
    pub window: (f64, f64),
    /// Root-mean-square misfit at `s0_hat`.
    pub rms: f64,
    /// Largest pointwise misfit at `s0_hat`.
    pub max_residual: f64,
    pub n_samples: usize,
    /// Correlation of the misfit with `sin(phase)` at `s0_hat`.
    pub sin_correlation: f64,
    /// `(s, rms misfit)` on the scan grid.
    #[serde(skip)]
    pub curve: Vec<(f64, f64)>,
}

/// Leading-order profile at one sample, reduced to what the scan needs.
struct Sample {
    u: f64,
    amplitude: f64,
    offset: f64,
    scale: f64,
    k: f64,
    /// `t^(7/4) f(z)`.
    fast: f64,
}

impl Sample {
    fn model(&self, s: f64) -> f64 {
        // the modulus and argument were validated when the sample was built
        let dn = jacobi_dn(self.scale * (self.fast + s), self.k).unwrap_or(f64::NAN);
        self.amplitude * dn * dn + self.offset
    }
}

fn check_window((lo, hi): (f64, f64)) -> Result<()> {
    let err = |reason: String| Err(Error::Window { lo, hi, reason });
    if !(lo < hi) {
        return err("need z_min < z_max".into());
    }
    if lo < Z_LEAD + EDGE_MARGIN || hi > Z_TRAIL - EDGE_MARGIN {
        return err(format!(
            "must stay {EDGE_MARGIN} inside the zone ({Z_LEAD}, {Z_TRAIL})"
        ));
    }
    Ok(())
}

fn build_samples(
    t: f64,
    zs: &[f64],
    us: &[f64],
    asym: &AsymptoticSolution,
    window: (f64, f64),
    min_periods: f64,
) -> Result<Vec<Sample>> {
    check_window(window)?;
    if !(t > 0.0) {
        return Err(Error::Domain {
            what: "fit_phase",
            value: t,
            domain: "t > 0",
        });
    }
    if zs.len() != us.len() {
        return Err(Error::Invalid(format!("{} z values for {} U values", zs.len(), us.len())));
    }
    let idx: Vec<usize> = (0..zs.len()).filter(|&i| zs[i] >= window.0 && zs[i] <= window.1).collect();
    if idx.len() < 2 {
        return Err(Error::Window {
            lo: window.0,
            hi: window.1,
            reason: "fewer than two samples inside".into(),
        });
    }
    let tf = t.powf(PHASE_EXPONENT);
    let samples = idx
        .par_iter()
        .map(|&i| {
            let p = asym.modulation_at(zs[i])?;
            let ev = p.elliptic()?;
            Ok(Sample {
                u: us[i],
                amplitude: p.amplitude,
                offset: p.offset,
                scale: ev.big_k / PI,
                k: p.k,
                fast: tf * p.phase_profile,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let first = asym.modulation_at(zs[idx[0]])?;
    let last = asym.modulation_at(zs[idx[idx.len() - 1]])?;
    let periods = tf * (last.phase_profile - first.phase_profile).abs() / (2.0 * PI);
    if periods < min_periods {
        return Err(Error::Window {
            lo: window.0,
            hi: window.1,
            reason: format!("only {periods:.2} oscillation periods inside (need {min_periods})"),
        });
    }
    // phase advance between neighbouring samples bounds the sampling density
    let worst_step = samples
        .windows(2)
        .map(|w| (w[1].fast - w[0].fast).abs())
        .fold(0.0, f64::max);
    let per_period = 2.0 * PI / worst_step;
    if per_period < MIN_SAMPLES_PER_PERIOD {
        return Err(Error::Undersampled {
            per_period,
            needed: MIN_SAMPLES_PER_PERIOD,
        });
    }
    Ok(samples)
}

fn misfit(samples: &[Sample], s: f64) -> f64 {
    let sum: f64 = samples.iter().map(|p| (p.u - p.model(s)).powi(2)).sum();
    (sum / samples.len() as f64).sqrt()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Fit `s0` on arbitrary `(z, U)` samples at time `t`.
pub fn fit_phase_samples(
    t: f64,
    zs: &[f64],
    us: &[f64],
    asym: &AsymptoticSolution,
    window: (f64, f64),
) -> Result<PhaseFitResult> {
    fit_with(t, zs, us, asym, window, MIN_PERIODS)
}

fn fit_with(
    t: f64,
    zs: &[f64],
    us: &[f64],
    asym: &AsymptoticSolution,
    window: (f64, f64),
    min_periods: f64,
) -> Result<PhaseFitResult> {
    let samples = build_samples(t, zs, us, asym, window, min_periods)?;
    let ds = 2.0 * PI / SCAN_POINTS as f64;
    let curve: Vec<(f64, f64)> = (0..SCAN_POINTS)
        .into_par_iter()
        .map(|j| {
            let s = j as f64 * ds;
            (s, misfit(&samples, s))
        })
        .collect();
    let best = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(j, _)| j)
        .unwrap_or(0);

    // successive parabolic refinement around the scan minimum
    let mut s = best as f64 * ds;
    let mut d = ds;
    for _ in 0..12 {
        let (m_lo, m0, m_hi) = (misfit(&samples, s - d), misfit(&samples, s), misfit(&samples, s + d));
        let curv = m_lo - 2.0 * m0 + m_hi;
        if curv > 0.0 {
            s += (0.5 * d * (m_lo - m_hi) / curv).clamp(-d, d);
        } else if m_lo < m0 || m_hi < m0 {
            s += if m_lo < m_hi { -d } else { d };
        }
        d *= 0.25;
    }
    let s0_hat = s.rem_euclid(2.0 * PI);
    let resid: Vec<f64> = samples.iter().map(|p| p.u - p.model(s0_hat)).collect();
    let sines: Vec<f64> = samples.iter().map(|p| (p.fast + s0_hat).sin()).collect();
    Ok(PhaseFitResult {
        t,
        s0_hat,
        window,
        rms: misfit(&samples, s0_hat),
        max_residual: resid.iter().fold(0.0, |a, r| a.max(r.abs())),
        n_samples: samples.len(),
        sin_correlation: correlation(&resid, &sines),
        curve,
    })
}

/// Fit `s0` by comparing a numeric solution with the leading-order profile
/// at the numeric grid points inside `window`.
pub fn fit_phase(sol: &GridSolution, asym: &AsymptoticSolution, window: (f64, f64)) -> Result<PhaseFitResult> {
    let (zs, us) = sol.to_scaled()?;
    fit_phase_samples(sol.t, &zs, &us, asym, window)
}

/// `(z, U_numeric - U_asymptotic)` over the whole grid at shift `s0`.
pub fn difference_curve(sol: &GridSolution, asym: &AsymptoticSolution) -> Result<Vec<(f64, f64)>> {
    let (zs, us) = sol.to_scaled()?;
    let model = asym.sample_scaled(sol.t, &zs)?;
    Ok(zs.into_iter().zip(us.iter().zip(model).map(|(a, b)| a - b)).collect())
}

/// Log-log slope of the window-max misfit against `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub t_values: Vec<f64>,
    pub max_residuals: Vec<f64>,
    pub exponent: f64,
}

impl ScalingFit {
    pub fn from_residuals(t_values: Vec<f64>, max_residuals: Vec<f64>) -> Result<Self> {
        if t_values.len() < 3 || t_values.len() != max_residuals.len() {
            return Err(Error::Invalid("need at least three (t, residual) pairs".into()));
        }
        if t_values.windows(2).any(|w| w[1] <= w[0]) || t_values[0] <= 0.0 {
            return Err(Error::Invalid("t values must be positive and strictly increasing".into()));
        }
        if max_residuals.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Invalid("residuals must be positive and finite".into()));
        }
        let lt: Vec<f64> = t_values.iter().map(|t| t.ln()).collect();
        let lr: Vec<f64> = max_residuals.iter().map(|r| r.ln()).collect();
        let c = least_squares(&lt, &lr, |x| [1.0, x]).ok_or_else(|| Error::Invalid("singular slope fit".into()))?;
        Ok(ScalingFit {
            t_values,
            max_residuals,
            exponent: c[1],
        })
    }
}

/// Fit `s0` at each solution, then the slope of the window-max misfit.
pub fn fit_exponent(
    sols: &[GridSolution],
    asym: &AsymptoticSolution,
    window: (f64, f64),
) -> Result<(ScalingFit, Vec<PhaseFitResult>)> {
    let fits = sols
        .iter()
        .map(|s| {
            let (zs, us) = s.to_scaled()?;
            fit_with(s.t, &zs, &us, asym, window, MIN_PERIODS_SCALING)
        })
        .collect::<Result<Vec<_>>>()?;
    let scaling = ScalingFit::from_residuals(
        fits.iter().map(|f| f.t).collect(),
        fits.iter().map(|f| f.max_residual).collect(),
    )?;
    Ok((scaling, fits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_checks() {
        assert!(check_window(DEFAULT_WINDOW).is_ok());
        assert!(check_window((-1.35, -0.2)).is_err());
        assert!(check_window((-1.0, 0.05)).is_err());
        assert!(check_window((-0.5, -0.6)).is_err());
    }

    #[test]
    fn exact_power_law() {
        let ts = vec![10.0, 15.0, 20.0, 30.0];
        let rs = ts.iter().map(|t: &f64| 3.0 * t.powf(-1.75)).collect();
        let fit = ScalingFit::from_residuals(ts, rs).unwrap();
        assert!((fit.exponent + 1.75).abs() < 1e-6);
        assert!(ScalingFit::from_residuals(vec![1.0, 2.0], vec![1.0, 1.0]).is_err());
        assert!(ScalingFit::from_residuals(vec![1.0, 3.0, 2.0], vec![1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn correlation_extremes() {
        let a = [1.0, 2.0, 3.0];
        assert!((correlation(&a, &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!((correlation(&a, &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(correlation(&a, &[1.0, 1.0, 1.0]), 0.0);
    }
}
