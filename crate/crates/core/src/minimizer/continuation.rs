use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::problem::{DirichletProblem, SolveReport, SolverConfig, StageReport, Termination};
use super::solve::solve_from;
use crate::function_spaces::{gradient_field, ScalarField};
use crate::math;
use crate::phi::{GrowthEnvelope, LocalPhi};
use crate::regularization::{build_phi_lambda, TruncationParams};
use crate::{Error, Result};

// stages without a decrease of the sup-difference before a warning
const STAGNATION_STAGES: usize = 3;
const SANDWICH_RTOL: f64 = 1e-10;

/// The λ sequence and stopping rule of a continuation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationSchedule {
    pub lambdas: Vec<f64>,
    /// Stop once `sup |u_λ − u_{λ_prev}|` is at most this; when absent,
    /// `1e-8` times the data scale.
    pub stop_sup_diff: Option<f64>,
    pub stage: SolverConfig,
    /// Exponent of the truncation; the envelope's `p` when absent.
    pub truncation_p: Option<f64>,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        ContinuationSchedule {
            lambdas: (0..=30).map(|k| math::pow(2.0, k as f64)).collect(),
            stop_sup_diff: None,
            // stage fields only need to resolve sup-differences near the stop value
            stage: SolverConfig {
                grad_tolerance: 1e-10,
                ..SolverConfig::default()
            },
            truncation_p: None,
        }
    }
}

impl ContinuationSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = !self.lambdas.is_empty()
            && self.lambdas[0] >= 1.0
            && self.lambdas.iter().all(|l| l.is_finite())
            && self.lambdas.windows(2).all(|w| w[0] < w[1])
            && self.stop_sup_diff.map_or(true, |s| s > 0.0)
            && self.truncation_p.map_or(true, |p| p >= 1.0 && p.is_finite());
        if !ok {
            return Err(Error::InvalidParameter(format!("continuation schedule {self:?}")));
        }
        self.stage.validate()
    }
}

/// Minimizes the truncations `φ_λ` along the schedule, each stage warm
/// started from the previous one and the first from `f̃`.
///
/// The returned report carries the stages, the `φ`-energy of the final field
/// and of the extension `f̃`, and a stagnation note if the sup-differences
/// stopped decreasing.
pub fn solve_nondoubling(
    problem: &DirichletProblem,
    schedule: &ContinuationSchedule,
) -> Result<(ScalarField, SolveReport)> {
    schedule.validate()?;
    if !problem.phi.is_convex() {
        return Err(Error::NonConvexSource);
    }
    let p = schedule.truncation_p.unwrap_or(problem.envelope.p);
    let stop = schedule
        .stop_sup_diff
        .unwrap_or(1e-8 * problem.data_scale());
    let domain = &problem.domain;
    let phi_locals: Vec<LocalPhi<'_>> = domain
        .centroids()
        .iter()
        .map(|x| problem.phi.at(*x))
        .collect::<Result<_>>()?;
    let competitor = phi_energy(&phi_locals, domain.areas(), &magnitudes(problem, &problem.boundary_data)?)?;

    let mut u = problem.boundary_data.clone();
    let mut stages: Vec<StageReport> = Vec::new();
    let mut iterations = 0;
    let mut last: Option<SolveReport> = None;
    let mut stagnation = None;
    let mut rising = 0;
    for &lambda in &schedule.lambdas {
        let phi_l = build_phi_lambda(&problem.phi, TruncationParams { lambda, p })?;
        let envelope = GrowthEnvelope {
            p,
            q: p,
            l_p: 1.0,
            l_q: 1.0 + lambda * lambda,
            beta_a0: problem.envelope.beta_a0,
            beta_a1: problem.envelope.beta_a1,
            region: problem.envelope.region.clone(),
        };
        let stage_problem = problem.with_phi(phi_l, envelope)?;
        let (u_new, report) = solve_from(&stage_problem, &schedule.stage, &u)?;
        iterations += report.iterations;

        let t = magnitudes(problem, &u_new)?;
        let areas = domain.areas();
        let e_phi = phi_energy(&phi_locals, areas, &t)?;
        let rho_p = math::tree_sum(
            &t.iter()
                .zip(areas)
                .map(|(t, a)| a * math::pow(*t, p))
                .collect::<Vec<_>>(),
        );
        let lower = sandwich_lower(&phi_locals, areas, &t, lambda, p)?;
        let upper = e_phi + rho_p / lambda;
        let slack = SANDWICH_RTOL * report.energy.max(1.0);
        let sandwich_ok = lower <= report.energy + slack && report.energy <= upper + slack;
        if !sandwich_ok {
            log::warn!("energy sandwich fails at λ = {lambda}: {lower} ≤ {} ≤ {upper}", report.energy);
        }

        let sup_diff = (!stages.is_empty()).then(|| u_new.sup_distance(&u));
        if let (Some(d), Some(prev)) = (sup_diff, stages.last().and_then(|s| s.sup_diff)) {
            rising = if d >= prev { rising + 1 } else { 0 };
            if rising >= STAGNATION_STAGES && stagnation.is_none() {
                let msg = format!(
                    "sup-differences did not decrease over {STAGNATION_STAGES} stages up to λ = {lambda}: last {d:e}, stop at {stop:e}"
                );
                log::warn!("{msg}");
                stagnation = Some(msg);
            }
        }
        log::debug!(
            "stage λ = {lambda}: {:?}, energy {}, sup-diff {sup_diff:?}",
            report.termination,
            report.energy
        );
        stages.push(StageReport {
            lambda,
            iterations: report.iterations,
            termination: report.termination,
            energy: report.energy,
            phi_energy: e_phi,
            p_modular: rho_p,
            sup_diff,
            sandwich_ok,
        });
        u = u_new;
        let done = sup_diff.is_some_and(|d| d <= stop);
        last = Some(report);
        if done {
            break;
        }
    }
    let last = last.expect("schedule is non-empty");
    let final_stage = stages.last().expect("schedule is non-empty");
    let converged = final_stage.sup_diff.is_some_and(|d| d <= stop);
    let termination = if !converged {
        Termination::MaxIterations
    } else {
        last.termination
    };
    let report = SolveReport {
        energy: final_stage.phi_energy,
        iterations,
        gradient_norm: last.gradient_norm,
        termination,
        energy_history: last.energy_history,
        kinked: last.kinked,
        stages,
        stagnation,
        competitor_energy: Some(competitor),
        wall_time_secs: None,
    };
    Ok((u, report))
}

fn magnitudes(problem: &DirichletProblem, u: &ScalarField) -> Result<Vec<f64>> {
    Ok(gradient_field(&problem.domain, u)?.magnitudes())
}

fn phi_energy(locals: &[LocalPhi<'_>], areas: &[f64], t: &[f64]) -> Result<f64> {
    let mut terms = Vec::with_capacity(t.len());
    for ((l, a), t) in locals.iter().zip(areas).zip(t) {
        let v = l.eval(*t)?;
        if v == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        terms.push(a * v);
    }
    Ok(math::tree_sum(&terms))
}

// Σ |T| (min{φ(t/2), λ(t/2)^p} + t^p/λ)
fn sandwich_lower(locals: &[LocalPhi<'_>], areas: &[f64], t: &[f64], lambda: f64, p: f64) -> Result<f64> {
    let mut terms = Vec::with_capacity(t.len());
    for ((l, a), t) in locals.iter().zip(areas).zip(t) {
        let half = 0.5 * t;
        let v = l.eval(half)?.min(lambda * math::pow(half, p)) + math::pow(*t, p) / lambda;
        terms.push(a * v);
    }
    Ok(math::tree_sum(&terms))
}
