//! Long-time asymptotics of the fourth-order Gurevich-Pitaevskii reduction
//! near a cusp catastrophe.

pub mod asymptotics;
pub mod bvp;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod modulation;
pub mod outer;
pub mod phase_fit;
pub mod specfun;

mod linalg;

pub use error::{Error, Result};
pub use asymptotics::AsymptoticSolution;
pub use bvp::{GridSolution, SolverConfig, Stencil};
pub use modulation::{ModulationPoint, ModulationTable};
pub use phase_fit::{PhaseFitResult, ScalingFit};
