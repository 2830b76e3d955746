//! Inputs shared by the criterion benches.

use gpwz_core::bvp::banded::BandMatrix;
use gpwz_core::bvp::{continuation, GridSolution, SolverConfig};

/// Diagonally dominant band matrix of order `n` with the fourth-order
/// stencil's bandwidth.
pub fn band_system(n: usize) -> (BandMatrix, Vec<f64>) {
    let mut m = BandMatrix::zeros(n, 3, 3);
    for i in 0..n {
        for d in 0..=6usize {
            let j = (i + d).wrapping_sub(3);
            if j < n {
                let v = if j == i { 20.0 } else { 1.0 / (1.0 + d as f64) };
                m.set(i, j, v);
            }
        }
    }
    let rhs = (0..n).map(|i| (i as f64 * 0.01).sin()).collect();
    (m, rhs)
}

/// Converged solution at `t` on a reduced domain, used as a Newton seed and
/// as fit input.
pub fn solution_at(t: f64) -> GridSolution {
    let cfg = SolverConfig {
        h: 0.05,
        x_min: -200.0,
        x_max: 60.0,
        t_path: SolverConfig::path_to(t),
        ..SolverConfig::default()
    };
    continuation(&cfg).expect("fixture solve").pop().expect("one waypoint")
}
