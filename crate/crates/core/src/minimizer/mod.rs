//! Discrete Dirichlet problems for `∫ φ(x, |∇u|)`, a first-order solver and
//! the λ-continuation for growth without a finite upper exponent.

mod assembly;
mod continuation;
mod precond;
mod problem;
mod solve;

pub use assembly::{EnergyModel, Evaluation};
pub use continuation::{solve_nondoubling, ContinuationSchedule};
pub use problem::{
    energy, energy_gradient, DirichletProblem, Preconditioner, SolveReport, SolverConfig, StageReport, Termination,
};
pub use solve::{solve, solve_from};
