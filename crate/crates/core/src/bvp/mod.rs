//! Fixed-`t` boundary-value solves of
//! `u'''' + (5/3) u u'' + (5/6) u'^2 + (5/18)(x - t u + u^3) = 0`
//! on a uniform grid, with `u` and `u'` clamped to the cubic branches at both
//! ends, and continuation in `t`.

pub mod banded;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outer::{cusp_root, cusp_root_derivative, Branch, CubicBranch, TimeSign};
use banded::BandMatrix;

/// Time at which continuation starts from the cubic root by default.
pub const COLD_START_T: f64 = -7.0;

/// Uniform grid `x_i = x_min + i h`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid {
    /// `(x_max - x_min)/h` must be an integer to within `1e-6`.
    pub fn new(x_min: f64, x_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !x_min.is_finite() || !x_max.is_finite() || x_max <= x_min {
            return Err(Error::Invalid(format!(
                "grid needs h > 0 and x_min < x_max, got h = {h}, [{x_min}, {x_max}]"
            )));
        }
        let cells = (x_max - x_min) / h;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-6 * rounded.max(1.0) {
            return Err(Error::Invalid(format!(
                "domain length {} is not a multiple of h = {h}",
                x_max - x_min
            )));
        }
        let n = rounded as usize + 1;
        if n < 9 {
            return Err(Error::Invalid(format!("grid needs at least 9 points, got {n}")));
        }
        Ok(Grid { x_min, h, n })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    /// Five-point central differences.
    Second,
    /// Seven-point `u''''` and five-point `u''`, `u'`.
    #[default]
    Fourth,
}

impl Stencil {
    /// Band half-width of the Jacobian.
    pub fn half_width(self) -> usize {
        match self {
            Stencil::Second => 2,
            Stencil::Fourth => 3,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Stencil::Second => 2,
            Stencil::Fourth => 4,
        }
    }
}

impl std::str::FromStr for Stencil {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "second" | "2" => Ok(Stencil::Second),
            "fourth" | "4" => Ok(Stencil::Fourth),
            _ => Err(Error::Invalid(format!("unknown stencil {s:?} (second|fourth)"))),
        }
    }
}

impl std::fmt::Display for Stencil {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stencil::Second => "second",
            Stencil::Fourth => "fourth",
        })
    }
}

struct Weights {
    d1: &'static [(isize, f64)],
    d2: &'static [(isize, f64)],
    d4: &'static [(isize, f64)],
    d4_scale: f64,
}

const D1_2: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
const D2_2: [(isize, f64); 3] = [(-1, 1.0), (0, -2.0), (1, 1.0)];
const D4_2: [(isize, f64); 5] = [(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)];
const D1_4: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
const D2_4: [(isize, f64); 5] = [
    (-2, -1.0 / 12.0),
    (-1, 16.0 / 12.0),
    (0, -30.0 / 12.0),
    (1, 16.0 / 12.0),
    (2, -1.0 / 12.0),
];
const D4_4: [(isize, f64); 7] = [
    (-3, -1.0),
    (-2, 12.0),
    (-1, -39.0),
    (0, 56.0),
    (1, -39.0),
    (2, 12.0),
    (3, -1.0),
];

fn weights(stencil: Stencil, i: usize, n: usize) -> Weights {
    let second = Weights {
        d1: &D1_2,
        d2: &D2_2,
        d4: &D4_2,
        d4_scale: 1.0,
    };
    match stencil {
        Stencil::Second => second,
        // the wide u'''' does not fit next to the boundary rows
        Stencil::Fourth if i < 3 || i + 4 > n => Weights {
            d1: &D1_4,
            d2: &D2_4,
            ..second
        },
        Stencil::Fourth => Weights {
            d1: &D1_4,
            d2: &D2_4,
            d4: &D4_4,
            d4_scale: 1.0 / 6.0,
        },
    }
}

/// Value and slope imposed at one end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndCondition {
    pub u: f64,
    pub slope: f64,
}

/// Branch of `x - t u + u^3 = 0` and its `x`-derivative at one point.
///
/// For `t > 0` the left end follows the branch from `x -> -inf`, the right
/// end the branch from `x -> +inf`.
pub fn branch_end(x: f64, t: f64, branch: Branch) -> Result<EndCondition> {
    if t == 0.0 {
        let u = -x.cbrt();
        if u == 0.0 {
            return Err(Error::FoldPoint { u, gap: 0.0 });
        }
        return Ok(EndCondition {
            u,
            slope: -1.0 / (3.0 * u * u),
        });
    }
    let at = t.abs();
    let z = x / (at * at.sqrt());
    let cb = CubicBranch {
        t_sign: TimeSign::of(t),
        branch: if t < 0.0 { Branch::Unique } else { branch },
    };
    Ok(EndCondition {
        u: at.sqrt() * cusp_root(z, cb)?,
        slope: cusp_root_derivative(z, cb)? / at,
    })
}

/// Discretized boundary-value problem at one `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeProblem {
    pub t: f64,
    pub grid: Grid,
    pub stencil: Stencil,
    pub left: EndCondition,
    pub right: EndCondition,
    /// Subtracted from the interior rows; used for manufactured solutions.
    pub forcing: Option<Vec<f64>>,
}

impl OdeProblem {
    /// End conditions from the cubic branches.
    pub fn new(t: f64, grid: Grid, stencil: Stencil) -> Result<Self> {
        Ok(OdeProblem {
            t,
            grid,
            stencil,
            left: branch_end(grid.x_min, t, Branch::FromMinusInfinity)?,
            right: branch_end(grid.x_max(), t, Branch::FromPlusInfinity)?,
            forcing: None,
        })
    }

    pub fn with_ends(t: f64, grid: Grid, stencil: Stencil, left: EndCondition, right: EndCondition) -> Self {
        OdeProblem {
            t,
            grid,
            stencil,
            left,
            right,
            forcing: None,
        }
    }

    pub fn with_forcing(mut self, forcing: Vec<f64>) -> Result<Self> {
        if forcing.len() != self.grid.n {
            return Err(Error::Invalid(format!(
                "forcing has {} entries for {} grid points",
                forcing.len(),
                self.grid.n
            )));
        }
        self.forcing = Some(forcing);
        Ok(self)
    }

    fn eval(&self, u: &[f64], mut jac: Option<&mut BandMatrix>) -> Vec<f64> {
        let g = &self.grid;
        let (n, h) = (g.n, g.h);
        let mut f = vec![0.0; n];
        if let Some(j) = jac.as_deref_mut() {
            j.clear();
            j.set(0, 0, 1.0);
            j.set(1, 0, -0.5 / h);
            j.set(1, 2, 0.5 / h);
            j.set(n - 2, n - 3, -0.5 / h);
            j.set(n - 2, n - 1, 0.5 / h);
            j.set(n - 1, n - 1, 1.0);
        }
        f[0] = u[0] - self.left.u;
        f[1] = (u[2] - u[0]) / (2.0 * h) - self.left.slope;
        f[n - 2] = (u[n - 1] - u[n - 3]) / (2.0 * h) - self.right.slope;
        f[n - 1] = u[n - 1] - self.right.u;

        let (h2, h4) = (h * h, h * h * h * h);
        for i in 2..n - 2 {
            let w = weights(self.stencil, i, n);
            let at = |o: isize| u[(i as isize + o) as usize];
            let d1 = w.d1.iter().map(|&(o, c)| c * at(o)).sum::<f64>() / h;
            let d2 = w.d2.iter().map(|&(o, c)| c * at(o)).sum::<f64>() / h2;
            let d4 = w.d4_scale * w.d4.iter().map(|&(o, c)| c * at(o)).sum::<f64>() / h4;
            let ui = u[i];
            let x = g.x(i);
            f[i] = d4 + 5.0 / 3.0 * ui * d2 + 5.0 / 6.0 * d1 * d1
                + 5.0 / 18.0 * (x - self.t * ui + ui * ui * ui);
            if let Some(fc) = &self.forcing {
                f[i] -= fc[i];
            }
            if let Some(j) = jac.as_deref_mut() {
                let col = |o: isize| (i as isize + o) as usize;
                for &(o, c) in w.d4 {
                    j.add(i, col(o), w.d4_scale * c / h4);
                }
                for &(o, c) in w.d2 {
                    j.add(i, col(o), 5.0 / 3.0 * ui * c / h2);
                }
                for &(o, c) in w.d1 {
                    j.add(i, col(o), 5.0 / 3.0 * d1 * c / h);
                }
                j.add(i, i, 5.0 / 3.0 * d2 + 5.0 / 18.0 * (3.0 * ui * ui - self.t));
            }
        }
        f
    }

    /// Rounding level of the residual for values of size `scale`.
    ///
    /// The `1/h^4` stencil amplifies rounding in `u`, so for small `h` this
    /// sits above any fixed absolute tolerance.
    pub fn residual_floor(&self, scale: f64) -> f64 {
        40.0 * f64::EPSILON * (1.0 + scale) / self.grid.h.powi(4)
    }
}

/// Discrete residual of the problem at `u`.
pub fn ode_residual(u: &[f64], problem: &OdeProblem) -> Result<Vec<f64>> {
    if u.len() != problem.grid.n {
        return Err(Error::Invalid(format!(
            "{} values for {} grid points",
            u.len(),
            problem.grid.n
        )));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite grid values".into()));
    }
    Ok(problem.eval(u, None))
}

/// Newton settings shared by every solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    /// First trial step length of the line search, in `(0, 1]`.
    pub damping: f64,
    pub max_iter: usize,
    /// Absolute max-norm residual target.
    pub tol: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            damping: 1.0,
            max_iter: 30,
            tol: 1e-9,
        }
    }
}

/// Converged grid values at one `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub t: f64,
    pub grid: Grid,
    pub stencil: Stencil,
    pub u: Vec<f64>,
    /// Final max-norm residual.
    pub residual: f64,
    /// Rounding floor of the residual at the solution.
    pub residual_floor: f64,
    pub iterations: usize,
}

impl GridSolution {
    pub fn x(&self) -> Vec<f64> {
        self.grid.points()
    }

    /// `(z_i, U_i) = (x_i/|t|^(3/2), u_i/sqrt|t|)`.
    pub fn to_scaled(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        to_scaled(self)
    }
}

pub fn to_scaled(sol: &GridSolution) -> Result<(Vec<f64>, Vec<f64>)> {
    if sol.t == 0.0 {
        return Err(Error::Domain {
            what: "to_scaled",
            value: sol.t,
            domain: "t != 0",
        });
    }
    let at = sol.t.abs();
    let (xs, us) = (at * at.sqrt(), at.sqrt());
    let z = sol.x().iter().map(|x| x / xs).collect();
    let uu = sol.u.iter().map(|u| u / us).collect();
    Ok((z, uu))
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Damped Newton from `guess`, with a banded LU for each linear solve.
///
/// Stops once the residual is below `tol` or the rounding floor of the
/// stencil, whichever is larger.
pub fn solve_fixed_t(problem: &OdeProblem, guess: Vec<f64>, newton: &NewtonSettings) -> Result<GridSolution> {
    let n = problem.grid.n;
    let hw = problem.stencil.half_width();
    let t = problem.t;
    let mut u = guess;
    ode_residual(&u, problem)?;
    let mut jac = BandMatrix::zeros(n, hw, hw);
    let mut f = problem.eval(&u, Some(&mut jac));
    let mut res = max_norm(&f);
    let floor = |u: &[f64]| problem.residual_floor(max_norm(u));
    let done = |u: Vec<f64>, res: f64, iterations: usize| GridSolution {
        t,
        grid: problem.grid,
        stencil: problem.stencil,
        residual_floor: floor(&u),
        u,
        residual: res,
        iterations,
    };
    let target = |u: &[f64]| newton.tol.max(floor(u));
    for iter in 0..newton.max_iter {
        if res <= target(&u) {
            return Ok(done(u, res, iter));
        }
        let lu = jac.clone().factorize().map_err(|column| Error::SingularJacobian { t, column })?;
        let mut step: Vec<f64> = f.iter().map(|v| -v).collect();
        lu.solve(&mut step);
        let mut lambda = newton.damping;
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
            let ft = problem.eval(&trial, None);
            let rt = max_norm(&ft);
            if rt.is_finite() && (rt < (1.0 - 1e-4 * lambda) * res || rt <= newton.tol) {
                u = trial;
                f = problem.eval(&u, Some(&mut jac));
                res = rt;
                break;
            }
            // stagnation just above the floor is rounding, not divergence
            if res <= 10.0 * target(&u) {
                return Ok(done(u, res, iter + 1));
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::StepCollapse { t, residual: res });
            }
        }
    }
    if res <= target(&u) {
        Ok(done(u, res, newton.max_iter))
    } else {
        Err(Error::NonConvergence {
            t,
            iterations: newton.max_iter,
            residual: res,
        })
    }
}

/// Cubic-root starting profile: the unique root for `t <= 0`; for `t > 0`
/// the branch from `-inf` left of `x = 0` and the branch from `+inf` right of it.
pub fn cubic_guess(t: f64, grid: &Grid) -> Result<Vec<f64>> {
    (0..grid.n)
        .map(|i| {
            let x = grid.x(i);
            if t == 0.0 {
                return Ok(-x.cbrt());
            }
            let branch = if x < 0.0 {
                Branch::FromMinusInfinity
            } else {
                Branch::FromPlusInfinity
            };
            branch_end(x, t, branch).map(|e| e.u)
        })
        .collect()
}

/// Everything needed to reach a set of `t` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub h: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub stencil: Stencil,
    pub newton: NewtonSettings,
    /// Waypoints, monotone; the first is solved from [`cubic_guess`] and a
    /// solution is returned at each.
    pub t_path: Vec<f64>,
    /// First continuation step.
    pub dt: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            h: 0.025,
            x_min: -330.0,
            x_max: 90.0,
            stencil: Stencil::Fourth,
            newton: NewtonSettings::default(),
            t_path: vec![COLD_START_T, 20.0],
            dt: 0.5,
            dt_min: 1e-4,
            dt_max: 2.0,
        }
    }
}

impl SolverConfig {
    /// Path from the default cold start to `target`.
    pub fn path_to(target: f64) -> Vec<f64> {
        if target <= COLD_START_T {
            vec![target]
        } else {
            vec![COLD_START_T, target]
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.x_min, self.x_max, self.h)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.t_path.is_empty() {
            return Err(Error::Invalid("empty t path".into()));
        }
        let up = self.t_path.windows(2).all(|w| w[1] > w[0]);
        let down = self.t_path.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) || self.t_path.iter().any(|t| !t.is_finite()) {
            return Err(Error::Invalid(format!("t path {:?} must be strictly monotone", self.t_path)));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt && self.dt <= self.dt_max) {
            return Err(Error::Invalid("need 0 < dt_min <= dt <= dt_max".into()));
        }
        if !(self.newton.damping > 0.0 && self.newton.damping <= 1.0) || self.newton.max_iter == 0 {
            return Err(Error::Invalid("need damping in (0, 1] and max_iter > 0".into()));
        }
        Ok(())
    }
}

/// Newton iteration counts that shrink or grow the continuation step.
const SLOW_NEWTON: usize = 6;
const FAST_NEWTON: usize = 3;

/// March in `t` through `cfg.t_path`, returning a solution at every waypoint.
///
/// Between waypoints the step adapts: it halves on a failed solve or when
/// Newton needs more than 6 iterations, and grows by 1.3 after fast solves.
/// The predictor is the secant through the last two solutions.
pub fn continuation(cfg: &SolverConfig) -> Result<Vec<GridSolution>> {
    continuation_with(cfg, |_| {})
}

/// [`continuation`] with a callback after every accepted step.
pub fn continuation_with(cfg: &SolverConfig, mut on_step: impl FnMut(&GridSolution)) -> Result<Vec<GridSolution>> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let t0 = cfg.t_path[0];
    let first = solve_fixed_t(
        &OdeProblem::new(t0, grid, cfg.stencil)?,
        cubic_guess(t0, &grid)?,
        &cfg.newton,
    )?;
    on_step(&first);
    let mut out = vec![first.clone()];
    let mut cur = first;
    let mut prev: Option<GridSolution> = None;
    let mut dt = cfg.dt;
    for &target in &cfg.t_path[1..] {
        let dir = (target - cur.t).signum();
        while cur.t != target {
            let remaining = (target - cur.t).abs();
            let t_next = if remaining <= dt * (1.0 + 1e-9) {
                target
            } else {
                cur.t + dir * dt
            };
            let guess = match &prev {
                Some(p) => {
                    let s = (t_next - cur.t) / (cur.t - p.t);
                    cur.u.iter().zip(&p.u).map(|(a, b)| a + s * (a - b)).collect()
                }
                None => cur.u.clone(),
            };
            let attempt = OdeProblem::new(t_next, grid, cfg.stencil)
                .and_then(|pb| solve_fixed_t(&pb, guess, &cfg.newton));
            match attempt {
                Ok(sol) => {
                    if sol.iterations > SLOW_NEWTON {
                        dt = (dt * 0.5).max(cfg.dt_min);
                    } else if sol.iterations <= FAST_NEWTON {
                        dt = (dt * 1.3).min(cfg.dt_max);
                    }
                    on_step(&sol);
                    prev = Some(std::mem::replace(&mut cur, sol));
                }
                Err(e) => {
                    dt *= 0.5;
                    if dt < cfg.dt_min {
                        return Err(Error::TimeContinuation {
                            t: cur.t,
                            target,
                            source: Box::new(e),
                        });
                    }
                }
            }
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Phase gradient at the leading edge, `2 sqrt(5 sqrt(2)/24)`, the largest
/// across the zone.
pub const MAX_PHASE_GRADIENT: f64 = 1.085_592_604_054_384_4;

/// Grid points per oscillation period at time `t > 0` in the worst part of
/// the zone; `None` for `t <= 0`.
pub fn samples_per_period(t: f64, h: f64) -> Option<f64> {
    (t > 0.0).then(|| 2.0 * PI / (t.powf(0.25) * MAX_PHASE_GRADIENT) / h)
}
