use std::path::{Path, PathBuf};

use gpwz_core::bvp::{continuation, samples_per_period, SolverConfig, Stencil};
use gpwz_core::diagnostics::{self, Suite};
use gpwz_core::io::{self, write_atomic, SolutionMeta};
use gpwz_core::modulation::{sweep_zone, Z_LEAD, Z_TRAIL};
use gpwz_core::phase_fit::{difference_curve, fit_exponent, fit_phase, PhaseFitResult};
use gpwz_core::{AsymptoticSolution, Error, ModulationTable};
use serde_json::{json, Map, Value};

use crate::args::{AsymptoticArgs, BvpArgs, CheckArgs, FitArgs, ModulationArgs};

/// Smallest table accepted by `modulation`.
const MIN_TABLE_ROWS: usize = 16;
/// Grid points per oscillation period below which `bvp` refuses to run.
const MIN_GRID_PER_PERIOD: f64 = 8.0;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_GATE: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
    pub failing_t: Option<f64>,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
            failing_t: None,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let failing_t = match &e {
            Error::NonConvergence { t, .. }
            | Error::StepCollapse { t, .. }
            | Error::SingularJacobian { t, .. }
            | Error::TimeContinuation { t, .. } => Some(*t),
            _ => None,
        };
        let code = match &e {
            Error::NonConvergence { .. }
            | Error::StepCollapse { .. }
            | Error::SingularJacobian { .. }
            | Error::TimeContinuation { .. }
            | Error::Convergence { .. }
            | Error::Continuation { .. }
            | Error::Ordering { .. } => EXIT_SOLVER,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
            failing_t,
        }
    }
}

pub type Outcome = Result<(), Failure>;

/// Run record written after every command that produces files.
#[derive(Debug)]
pub struct Manifest {
    pub command: &'static str,
    pub path: Option<PathBuf>,
    pub parameters: Map<String, Value>,
    pub outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Manifest {
            command,
            path: None,
            parameters: Map::new(),
            outputs: Vec::new(),
        }
    }

    fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    fn target(&mut self, explicit: &Option<PathBuf>, out: &Path) {
        self.path = Some(explicit.clone().unwrap_or_else(|| out.with_extension("manifest.json")));
    }

    pub fn to_json(&self, seconds: f64, failure: Option<&Failure>) -> Value {
        let mut v = json!({
            "command": self.command,
            "parameters": self.parameters,
            "outputs": self.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "versions": { "gpwz": env!("CARGO_PKG_VERSION") },
            "timing": seconds,
            "status": if failure.is_some() { "failed" } else { "ok" },
        });
        if let Some(f) = failure {
            v["exit_code"] = json!(f.code);
            v["error"] = json!(f.message);
            if let Some(t) = f.failing_t {
                v["failing_t"] = json!(t);
            }
        }
        v
    }
}

fn emit(m: &mut Manifest, path: &Path, bytes: &[u8]) -> Outcome {
    write_atomic(path, bytes)?;
    m.outputs.push(path.to_path_buf());
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    io::write_csv(&mut buf, header, rows)?;
    Ok(buf)
}

fn load_table(path: &Option<PathBuf>, n: usize) -> Result<ModulationTable, Failure> {
    match path {
        Some(p) => {
            let file = std::fs::File::open(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            Ok(io::read_table(file)?)
        }
        None => {
            if n < MIN_TABLE_ROWS {
                return Err(Failure::usage(format!("--n must be at least {MIN_TABLE_ROWS}")));
            }
            Ok(sweep_zone(n)?)
        }
    }
}

pub fn modulation(a: &ModulationArgs, m: &mut Manifest) -> Outcome {
    m.target(&a.manifest, &a.out);
    m.set("n", a.n);
    if a.n < MIN_TABLE_ROWS {
        return Err(Failure::usage(format!("--n must be at least {MIN_TABLE_ROWS}, got {}", a.n)));
    }
    let table = sweep_zone(a.n)?;
    let mut buf = Vec::new();
    io::write_table(&mut buf, &table)?;
    emit(m, &a.out, &buf)
}

pub fn asymptotic(a: &AsymptoticArgs, m: &mut Manifest) -> Outcome {
    m.target(&a.manifest, &a.out);
    m.set("t", a.t);
    m.set("s0", a.s0);
    m.set("physical", a.physical);
    m.set("from", a.from);
    m.set("to", a.to);
    m.set("points", a.points);
    if let Some(p) = &a.table {
        m.set("table", p.display().to_string());
    }
    if !(a.from < a.to) || a.points < 2 {
        return Err(Failure::usage("need --from < --to and --points >= 2"));
    }
    let asym = AsymptoticSolution::new(load_table(&a.table, a.n)?, a.s0)?;
    let step = (a.to - a.from) / (a.points - 1) as f64;
    let grid: Vec<f64> = (0..a.points).map(|i| a.from + i as f64 * step).collect();
    let (header, values) = if a.physical {
        (["x", "u"], asym.sample_physical(a.t, &grid)?)
    } else {
        (["z", "U"], asym.sample_scaled(a.t, &grid)?)
    };
    let bytes = csv_bytes(&header, grid.iter().zip(&values).map(|(a, b)| vec![*a, *b]))?;
    emit(m, &a.out, &bytes)
}

pub fn bvp(a: &BvpArgs, m: &mut Manifest) -> Outcome {
    m.target(&a.manifest, &a.out);
    let mut cfg = SolverConfig::default();
    if let Some(h) = a.h {
        cfg.h = h;
    }
    if let Some(v) = a.xmin {
        cfg.x_min = v;
    }
    if let Some(v) = a.xmax {
        cfg.x_max = v;
    }
    if let Some(s) = &a.stencil {
        cfg.stencil = s.parse::<Stencil>()?;
    }
    if let Some(v) = a.damping {
        cfg.newton.damping = v;
    }
    if let Some(v) = a.max_newton {
        cfg.newton.max_iter = v;
    }
    if let Some(v) = a.dt {
        cfg.dt = v;
        cfg.dt_max = cfg.dt_max.max(v);
        cfg.dt_min = cfg.dt_min.min(v);
    }
    cfg.t_path = match &a.t_path {
        Some(p) => p.clone(),
        None => SolverConfig::path_to(a.t),
    };
    m.set("t", a.t);
    m.set("h", cfg.h);
    m.set("x_min", cfg.x_min);
    m.set("x_max", cfg.x_max);
    m.set("stencil", cfg.stencil.to_string());
    m.set("damping", cfg.newton.damping);
    m.set("max_newton", cfg.newton.max_iter);
    m.set("t_path", json!(cfg.t_path));
    if cfg.t_path.last() != Some(&a.t) {
        return Err(Failure::usage(format!("--t-path must end at --t = {}", a.t)));
    }
    cfg.validate()?;
    if let Some(per) = samples_per_period(a.t, cfg.h) {
        m.set("grid_points_per_period", per);
        if per < MIN_GRID_PER_PERIOD {
            return Err(Failure {
                code: EXIT_SOLVER,
                message: format!(
                    "h = {} leaves {per:.2} grid points per oscillation period at t = {} (need {MIN_GRID_PER_PERIOD})",
                    cfg.h, a.t
                ),
                failing_t: Some(a.t),
            });
        }
    }
    if a.t > 0.0 {
        let scale = a.t.powf(1.5);
        let (lo, hi) = (Z_LEAD * scale, Z_TRAIL * scale);
        if lo < cfg.x_min || hi > cfg.x_max {
            eprintln!(
                "warning: oscillation zone ({lo:.1}, {hi:.1}) is not inside [{}, {}]",
                cfg.x_min, cfg.x_max
            );
        }
    }
    let sols = continuation(&cfg)?;
    let sol = sols.last().ok_or_else(|| Failure::usage("empty continuation"))?;
    m.set("residual", sol.residual);
    m.set("residual_floor", sol.residual_floor);
    m.set("iterations", sol.iterations);
    let mut buf = Vec::new();
    io::write_solution(&mut buf, sol)?;
    emit(m, &a.out, &buf)?;
    let meta = serde_json::to_vec_pretty(&SolutionMeta::of(sol)).map_err(|e| Failure::usage(e.to_string()))?;
    emit(m, &io::meta_path(&a.out), &meta)
}

fn fit_json(f: &PhaseFitResult) -> Value {
    json!({
        "t": f.t,
        "s0_hat": f.s0_hat,
        "window": [f.window.0, f.window.1],
        "rms": f.rms,
        "n_samples": f.n_samples,
        "max_residual": f.max_residual,
        "sin_correlation": f.sin_correlation,
    })
}

pub fn fit(a: &FitArgs, m: &mut Manifest) -> Outcome {
    m.target(&a.manifest, &a.out);
    if a.window.len() != 2 {
        return Err(Failure::usage("--window takes z_min,z_max"));
    }
    let window = (a.window[0], a.window[1]);
    m.set("window", json!([window.0, window.1]));
    m.set(
        "solutions",
        json!(a.solutions.iter().map(|p| p.display().to_string()).collect::<Vec<_>>()),
    );
    let mut sols = a
        .solutions
        .iter()
        .map(|p| io::read_solution(p))
        .collect::<Result<Vec<_>, _>>()?;
    let asym = AsymptoticSolution::with_default_shift(load_table(&a.table, a.n)?)?;
    let (report, fits) = if sols.len() >= 3 {
        sols.sort_by(|x, y| x.t.total_cmp(&y.t));
        let (scaling, fits) = fit_exponent(&sols, &asym, window)?;
        let report = json!({
            "fits": fits.iter().map(fit_json).collect::<Vec<_>>(),
            "scaling": scaling,
        });
        (report, fits)
    } else {
        let fits = sols
            .iter()
            .map(|s| fit_phase(s, &asym, window))
            .collect::<Result<Vec<_>, _>>()?;
        let report = if fits.len() == 1 {
            fit_json(&fits[0])
        } else {
            json!({ "fits": fits.iter().map(fit_json).collect::<Vec<_>>() })
        };
        (report, fits)
    };
    if let Some(path) = &a.scan_out {
        let bytes = csv_bytes(&["s", "misfit"], fits[0].curve.iter().map(|&(s, v)| vec![s, v]))?;
        emit(m, path, &bytes)?;
    }
    if let Some(path) = &a.diff_out {
        let shifted = asym.with_s0(fits[0].s0_hat);
        let curve = difference_curve(&sols[0], &shifted)?;
        let bytes = csv_bytes(&["z", "difference"], curve.into_iter().map(|(z, d)| vec![z, d]))?;
        emit(m, path, &bytes)?;
    }
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Failure::usage(e.to_string()))?;
    text.push('\n');
    emit(m, &a.out, text.as_bytes())
}

pub fn check(a: &CheckArgs, m: &mut Manifest) -> Outcome {
    let suites: Vec<Suite> = if a.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![a.suite.parse::<Suite>()?]
    };
    m.set("suite", a.suite.clone());
    let report = diagnostics::run(&suites)?;
    for g in &report.gates {
        eprintln!(
            "{} {}/{}: {:.3e} (limit {:.1e})",
            if g.pass { "PASS" } else { "FAIL" },
            g.suite,
            g.name,
            g.value,
            g.limit
        );
    }
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Failure::usage(e.to_string()))?;
    text.push('\n');
    match &a.out {
        Some(path) => {
            m.path = Some(path.with_extension("manifest.json"));
            emit(m, path, text.as_bytes())?;
        }
        None => print!("{text}"),
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<String> = report.failures().map(|g| format!("{}/{}", g.suite, g.name)).collect();
        Err(Failure {
            code: EXIT_GATE,
            message: format!("gates failed: {}", failed.join(", ")),
            failing_t: None,
        })
    }
}
