use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::assembly::EnergyModel;
use crate::function_spaces::{gradient_field, modular, ScalarField, TriangulatedDomain};
use crate::math;
use crate::phi::{GrowthEnvelope, PhiSpec};
use crate::{Error, Result};

/// Minimize `∫_Ω φ(x, |∇u|)` over P1 fields equal to `f` at boundary vertices.
#[derive(Clone, Debug)]
pub struct DirichletProblem {
    pub domain: TriangulatedDomain,
    pub phi: PhiSpec,
    /// The extension `f̃`; only boundary vertices constrain the minimizer.
    pub boundary_data: ScalarField,
    pub envelope: GrowthEnvelope,
}

impl DirichletProblem {
    /// Checks that the extension has finite energy.
    pub fn new(
        domain: TriangulatedDomain,
        phi: PhiSpec,
        boundary_data: ScalarField,
        envelope: GrowthEnvelope,
    ) -> Result<Self> {
        boundary_data.check(&domain)?;
        phi.validate()?;
        let g = gradient_field(&domain, &boundary_data)?;
        if modular(&phi, &domain, &g)? == f64::INFINITY {
            return Err(Error::InfiniteEnergy);
        }
        Ok(DirichletProblem {
            domain,
            phi,
            boundary_data,
            envelope,
        })
    }

    /// The same boundary value problem for another growth function.
    pub fn with_phi(&self, phi: PhiSpec, envelope: GrowthEnvelope) -> Result<Self> {
        DirichletProblem::new(self.domain.clone(), phi, self.boundary_data.clone(), envelope)
    }

    /// `sup |f|` over boundary vertices, at least 1.
    pub fn data_scale(&self) -> f64 {
        self.domain
            .boundary_mask()
            .iter()
            .zip(&self.boundary_data.values)
            .filter(|(b, _)| **b)
            .map(|(_, v)| math::abs(*v))
            .fold(1.0, f64::max)
    }

    pub fn energy_model(&self) -> Result<EnergyModel<'_>> {
        EnergyModel::new(&self.phi, &self.domain)
    }

    pub fn check_boundary(&self, u: &ScalarField) -> Result<()> {
        u.check(&self.domain)?;
        for (i, b) in self.domain.boundary_mask().iter().enumerate() {
            let (e, g) = (self.boundary_data.values[i], u.values[i]);
            if *b && math::abs(e - g) > 1e-12 * (1.0 + math::abs(e)) {
                return Err(Error::BoundaryMismatch {
                    vertex: i,
                    expected: e,
                    got: g,
                });
            }
        }
        Ok(())
    }

    /// `u` with its boundary values replaced by the data.
    pub fn impose_boundary(&self, u: &ScalarField) -> ScalarField {
        let mut out = u.clone();
        for (i, b) in self.domain.boundary_mask().iter().enumerate() {
            if *b {
                out.values[i] = self.boundary_data.values[i];
            }
        }
        out
    }
}

/// Stopping rules and line-search parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Bound on `max_i |∂E/∂u_i| / D_i`, with `D` the Jacobi diagonal; this
    /// is the size of a preconditioned step, in units of `u`.
    pub grad_tolerance: f64,
    /// Relative energy decrease below which an iteration counts as stalled.
    pub energy_rel_tolerance: f64,
    pub max_iterations: usize,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Adds `ε` under the gradient magnitude, `φ(√(|∇u|² + ε²))`.
    pub smoothing_eps: f64,
    pub preconditioner: Preconditioner,
}

/// Initial inverse Hessian of the quasi-Newton iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    /// The diagonal of the linearized stiffness.
    Jacobi,
    /// The stiffness matrix with weights `φ'(t_T)/t_T` at the current
    /// iterate, inverted by inner conjugate gradients.
    Stiffness,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grad_tolerance: 1e-12,
            energy_rel_tolerance: 1e-15,
            max_iterations: 20_000,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            memory: 10,
            smoothing_eps: 0.0,
            preconditioner: Preconditioner::Stiffness,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tolerance > 0.0)
            || !(self.energy_rel_tolerance > 0.0)
            || !(self.shrink > 0.0 && self.shrink < 1.0)
            || !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0)
            || self.memory == 0
            || !(self.smoothing_eps >= 0.0)
        {
            return Err(Error::InvalidParameter(alloc::format!("solver config {self:?}")));
        }
        Ok(())
    }
}

/// Why the iteration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    /// The energy no longer decreases at working precision.
    Stalled,
    MaxIterations,
}

/// One λ stage of a continuation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub lambda: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// `∫ φ_λ(x, |∇u_λ|)`.
    pub energy: f64,
    /// `∫ φ(x, |∇u_λ|)`.
    pub phi_energy: f64,
    /// `∫ |∇u_λ|^p`.
    pub p_modular: f64,
    /// `sup |u_λ − u_{λ_prev}|`, absent at the first stage.
    pub sup_diff: Option<f64>,
    /// Both sides of the per-stage energy sandwich hold.
    pub sandwich_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub energy: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub termination: Termination,
    pub energy_history: Vec<f64>,
    /// The derivative of `φ` jumped at some triangle during the run.
    pub kinked: bool,
    pub stages: Vec<StageReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stagnation: Option<alloc::string::String>,
    /// `∫ φ(x, |∇f̃|)` for the boundary extension, when compared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub competitor_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// `∫ φ(x, |∇u|)` for a field matching the boundary data.
pub fn energy(problem: &DirichletProblem, u: &ScalarField) -> Result<f64> {
    problem.check_boundary(u)?;
    problem.energy_model()?.energy(&u.values)
}

/// The gradient of the discrete energy with respect to interior values,
/// with the flag raised when a left derivative was used at a kink.
pub fn energy_gradient(problem: &DirichletProblem, u: &ScalarField) -> Result<(ScalarField, bool)> {
    problem.check_boundary(u)?;
    let ev = problem.energy_model()?.evaluate(&u.values)?;
    Ok((ScalarField { values: ev.gradient }, ev.kinked))
}
