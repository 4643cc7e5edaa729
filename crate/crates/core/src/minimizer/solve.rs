use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::assembly::{EnergyModel, Evaluation};
use super::precond::Stiffness;
use super::problem::{DirichletProblem, Preconditioner, SolveReport, SolverConfig, Termination};
use crate::function_spaces::ScalarField;
use crate::math;
use crate::phi::PhiSpec;
use crate::{Error, Result};

// consecutive stalled iterations before giving up
const STALL_WINDOW: usize = 50;
const MAX_BACKTRACKS: usize = 60;
const CG_RTOL: f64 = 1e-2;
const CG_MAX_ITERATIONS: usize = 2000;

/// Minimizes from the boundary extension `f̃`.
pub fn solve(problem: &DirichletProblem, config: &SolverConfig) -> Result<(ScalarField, SolveReport)> {
    solve_from(problem, config, &problem.boundary_data)
}

/// Minimizes from `initial`, whose boundary values are replaced by the data.
///
/// Limited-memory BFGS with backtracking on the energy. The initial inverse
/// Hessian is the inverse of the stiffness matrix weighted by `φ'(t)/t` at
/// the current iterate, or of its diagonal.
pub fn solve_from(
    problem: &DirichletProblem,
    config: &SolverConfig,
    initial: &ScalarField,
) -> Result<(ScalarField, SolveReport)> {
    config.validate()?;
    initial.check(&problem.domain)?;
    if !problem.envelope.is_doubling() && !matches!(problem.phi, PhiSpec::Truncated(_)) {
        return Err(Error::InvalidParameter(
            "non-doubling growth needs the continuation solver".into(),
        ));
    }
    let model = problem.energy_model()?.with_smoothing(config.smoothing_eps);
    let mut u = problem.impose_boundary(initial).values;
    let interior: Vec<usize> = problem.domain.interior_vertices().collect();
    let mut ev = model.evaluate(&u)?;
    if ev.energy == f64::INFINITY {
        return Err(Error::InfiniteEnergy);
    }
    // tracked through the increments; recomputing the sum would add noise of
    // the order of its rounding error at every step
    let mut energy = ev.energy;
    let mut history = alloc::vec![energy];
    let mut stiffness = match config.preconditioner {
        Preconditioner::Stiffness => Some(Stiffness::new(&problem.domain)),
        Preconditioner::Jacobi => None,
    };
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut kinked = ev.kinked;
    let mut stalled = 0usize;
    let mut iterations = 0usize;
    let mut gnorm = scaled_norm(&ev, &interior);
    let mut best_gnorm = gnorm;
    let mut note = None;
    let mut stall = |why: &str| {
        note = Some(alloc::string::String::from(why));
        Termination::Stalled
    };
    let termination = loop {
        if gnorm <= config.grad_tolerance {
            break Termination::Converged;
        }
        if iterations >= config.max_iterations {
            break Termination::MaxIterations;
        }
        let h0 = initial_inverse(&ev, &interior, config.preconditioner, stiffness.as_mut(), problem);
        let mut dir = two_loop(&ev.gradient, &h0, &memory, &interior);
        if dot(&dir, &ev.gradient, &interior) >= 0.0 {
            memory.clear();
            dir = two_loop(&ev.gradient, &h0, &memory, &interior);
        }
        let step = match line_search(&model, &u, &ev, &dir, &interior, config)? {
            Some(s) => s,
            None if !memory.is_empty() => {
                memory.clear();
                let dir = two_loop(&ev.gradient, &h0, &memory, &interior);
                match line_search(&model, &u, &ev, &dir, &interior, config)? {
                    Some(s) => s,
                    None => break stall("line search failed after a memory reset"),
                }
            }
            None => break stall("line search failed along the preconditioned gradient"),
        };
        let (u_new, ev_new, s_vec, delta) = step;
        let y: Vec<f64> = ev_new.gradient.iter().zip(&ev.gradient).map(|(a, b)| a - b).collect();
        let sy = dot(&s_vec, &y, &interior);
        let ss = dot(&s_vec, &s_vec, &interior);
        let yy = dot(&y, &y, &interior);
        if sy > 1e-14 * math::sqrt(ss * yy) && sy > 0.0 {
            if memory.len() == config.memory {
                memory.pop_front();
            }
            memory.push_back((s_vec, y, 1.0 / sy));
        }
        let small = -delta <= config.energy_rel_tolerance * math::abs(energy);
        u = u_new;
        ev = ev_new;
        energy += delta;
        kinked |= ev.kinked;
        history.push(energy);
        iterations += 1;
        gnorm = scaled_norm(&ev, &interior);
        // a tiny decrease only counts as stalling if the gradient is not
        // improving either
        if small && gnorm >= best_gnorm {
            stalled += 1;
        } else {
            stalled = 0;
        }
        best_gnorm = best_gnorm.min(gnorm);
        if stalled >= STALL_WINDOW {
            break stall("energy decrease below tolerance");
        }
    };
    log::debug!(
        "solve: {termination:?} after {iterations} iterations, energy {energy}, scaled gradient {gnorm:e}"
    );
    let report = SolveReport {
        energy,
        iterations,
        gradient_norm: gnorm,
        termination,
        energy_history: history,
        kinked,
        stages: Vec::new(),
        stagnation: note,
        competitor_energy: None,
        wall_time_secs: None,
    };
    Ok((ScalarField { values: u }, report))
}

fn dot(a: &[f64], b: &[f64], idx: &[usize]) -> f64 {
    let terms: Vec<f64> = idx.iter().map(|i| a[*i] * b[*i]).collect();
    math::tree_sum(&terms)
}

// D_i floored relative to the largest entry
fn jacobi(ev: &Evaluation, interior: &[usize]) -> Vec<f64> {
    let max = interior.iter().map(|i| ev.diagonal[*i]).fold(0.0, f64::max);
    let floor = if max > 0.0 { 1e-12 * max } else { 1.0 };
    let mut inv = alloc::vec![0.0; ev.diagonal.len()];
    for i in interior {
        inv[*i] = 1.0 / ev.diagonal[*i].max(floor);
    }
    inv
}

/// `max_i |∂E/∂u_i| / D_i` over interior vertices.
pub(crate) fn scaled_norm(ev: &Evaluation, interior: &[usize]) -> f64 {
    let inv = jacobi(ev, interior);
    interior
        .iter()
        .map(|i| math::abs(ev.gradient[*i]) * inv[*i])
        .fold(0.0, f64::max)
}

enum InitialInverse<'s> {
    Diagonal { inv: Vec<f64> },
    Stiffness(&'s Stiffness),
}

impl InitialInverse<'_> {
    fn apply(&self, q: &mut [f64], scale: f64, interior: &[usize]) {
        match self {
            InitialInverse::Diagonal { inv } => {
                for i in interior {
                    q[*i] *= scale * inv[*i];
                }
            }
            InitialInverse::Stiffness(k) => {
                let x = k.solve(q, CG_RTOL, CG_MAX_ITERATIONS);
                q.copy_from_slice(&x);
            }
        }
    }
}

fn initial_inverse<'s>(
    ev: &Evaluation,
    interior: &[usize],
    kind: Preconditioner,
    stiffness: Option<&'s mut Stiffness>,
    problem: &DirichletProblem,
) -> InitialInverse<'s> {
    match (kind, stiffness) {
        (Preconditioner::Stiffness, Some(k)) => {
            let max = ev.weights.iter().copied().fold(0.0, f64::max);
            let floor = if max > 0.0 { 1e-12 * max } else { 1.0 };
            let w: Vec<f64> = ev.weights.iter().map(|w| w.max(floor)).collect();
            k.assemble(&problem.domain, &w);
            InitialInverse::Stiffness(k)
        }
        _ => InitialInverse::Diagonal {
            inv: jacobi(ev, interior),
        },
    }
}

fn two_loop(
    g: &[f64],
    h0: &InitialInverse<'_>,
    memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    interior: &[usize],
) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q, interior);
        for i in interior {
            q[*i] -= a * y[*i];
        }
        alphas.push(a);
    }
    // the diagonal needs the usual secant scaling, the stiffness inverse is
    // already on the right scale
    let gamma = match (h0, memory.back()) {
        (InitialInverse::Diagonal { inv }, Some((s, y, _))) => {
            let sy = dot(s, y, interior);
            let terms: Vec<f64> = interior.iter().map(|i| y[*i] * y[*i] * inv[*i]).collect();
            let yhy = math::tree_sum(&terms);
            if yhy > 0.0 { sy / yhy } else { 1.0 }
        }
        _ => 1.0,
    };
    h0.apply(&mut q, gamma, interior);
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q, interior);
        for i in interior {
            q[*i] += (a - b) * s[*i];
        }
    }
    for v in q.iter_mut() {
        *v = -*v;
    }
    q
}

type Step = (Vec<f64>, Evaluation, Vec<f64>, f64);

// Backtracking with the Armijo rule on the summed per-triangle increments,
// which stay accurate when the decrease is far below the rounding level of
// the energy.
fn line_search(
    model: &EnergyModel<'_>,
    u: &[f64],
    ev: &Evaluation,
    dir: &[f64],
    interior: &[usize],
    config: &SolverConfig,
) -> Result<Option<Step>> {
    let slope = dot(&ev.gradient, dir, interior);
    if !(slope < 0.0) {
        return Ok(None);
    }
    let mut alpha = 1.0;
    for _ in 0..MAX_BACKTRACKS {
        let step: Vec<f64> = dir.iter().map(|d| alpha * d).collect();
        let delta = match model.energy_change(u, &step) {
            Ok(d) => d,
            Err(Error::InfiniteDerivative { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if delta <= config.sufficient_decrease * alpha * slope {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a + b).collect();
            match model.evaluate(&trial) {
                Ok(ev_new) if ev_new.energy.is_finite() => return Ok(Some((trial, ev_new, step, delta))),
                Ok(_) | Err(Error::InfiniteDerivative { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        alpha *= config.shrink;
    }
    Ok(None)
}
