//! Solving a scenario and writing the field and report.

use std::time::Instant;

use orlicz_core::function_spaces::{ScalarField, TriangulatedDomain};
use orlicz_core::minimizer::{solve, solve_nondoubling, DirichletProblem, SolveReport};
use serde::Serialize;

use crate::check::{check, declared_envelope, CheckReport};
use crate::config::ScenarioConfig;
use crate::{io, output_path, Outcome, RunError, Status};

/// A solved scenario.
#[derive(Clone, Debug)]
pub struct Solved {
    pub problem: DirichletProblem,
    pub field: ScalarField,
    pub report: SolveReport,
    /// λ of the last continuation stage.
    pub lambda: Option<f64>,
    /// `sup |u − exact| / sup |exact|` when the exact minimizer is known.
    pub sup_error: Option<f64>,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    scenario: &'a str,
    config_sha256: String,
    h: f64,
    vertices: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sup_error: Option<f64>,
    report: &'a SolveReport,
}

pub fn build_problem(cfg: &ScenarioConfig, check: &CheckReport) -> Result<DirichletProblem, RunError> {
    let domain = TriangulatedDomain::from_descriptor(&cfg.mesh)?;
    let data = ScalarField::from_spatial(&domain, &cfg.boundary);
    let envelope = check.envelope.clone().unwrap_or_else(|| declared_envelope(cfg));
    Ok(DirichletProblem::new(domain, cfg.phi.clone(), data, envelope)?)
}

/// Checks the conditions and solves. Returns `Ok(Err(report))` when a check
/// fails and `override_check` is off.
pub fn solve_scenario(cfg: &ScenarioConfig, override_check: bool) -> Result<Result<Solved, CheckReport>, RunError> {
    cfg.validate()?;
    let checked = check(cfg)?;
    if !checked.passed && !override_check {
        return Ok(Err(checked));
    }
    if !checked.passed {
        log::warn!("checks failed, solving anyway: {}", checked.failures.join("; "));
    }
    let problem = build_problem(cfg, &checked)?;
    let start = Instant::now();
    let (field, mut report) = match &cfg.schedule {
        Some(s) => solve_nondoubling(&problem, s)?,
        None => solve(&problem, &cfg.solver)?,
    };
    report.wall_time_secs = Some(start.elapsed().as_secs_f64());
    let lambda = report.stages.last().map(|s| s.lambda);
    let sup_error = cfg.exact.as_ref().map(|e| {
        let exact = ScalarField::from_spatial(&problem.domain, e);
        let scale = exact.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        field.sup_distance(&exact) / scale.max(f64::MIN_POSITIVE)
    });
    Ok(Ok(Solved {
        problem,
        field,
        report,
        lambda,
        sup_error,
    }))
}

/// Why a run did not converge, in words.
pub fn stop_reason(report: &SolveReport) -> String {
    match report.stages.last() {
        Some(last) if last.termination == orlicz_core::minimizer::Termination::Converged => format!(
            "the schedule ended at λ = {} before the sup-difference stop rule was met (last {})",
            io::sci(last.lambda),
            last.sup_diff.map_or("n/a".into(), io::sci)
        ),
        Some(last) => format!("stage λ = {} stopped: {:?}", io::sci(last.lambda), last.termination),
        None => format!("solver stopped: {:?}", report.termination),
    }
}

pub fn field_comments(cfg: &ScenarioConfig, lambda: Option<f64>) -> Vec<(&'static str, String)> {
    let mut c = vec![("config-sha256", cfg.hash())];
    if let Some(l) = lambda {
        c.push(("lambda", io::sci(l)));
    }
    c
}

/// Writes `<name>.field.csv` and `<name>.report.json`; exit code 3 when
/// the solver did not converge, 4 when a check failed without override.
pub fn run_solve(cfg: &ScenarioConfig, override_check: bool) -> Result<Outcome, RunError> {
    let solved = match solve_scenario(cfg, override_check)? {
        Ok(s) => s,
        Err(checked) => {
            let path = output_path(&cfg.out_dir, &cfg.name, "check.json");
            io::write_json(&path, &checked)?;
            let mut messages = checked.failures;
            messages.push("pass --override-check to solve anyway".into());
            return Ok(Outcome {
                status: Status::VerificationFailure,
                files: vec![path],
                messages,
            });
        }
    };
    let d = &solved.problem.domain;
    let field_path = output_path(&cfg.out_dir, &cfg.name, "field.csv");
    io::write_atomic(&field_path, &io::field_csv(d, &solved.field, &field_comments(cfg, solved.lambda))?)?;
    let report_path = output_path(&cfg.out_dir, &cfg.name, "report.json");
    io::write_json(
        &report_path,
        &ReportFile {
            scenario: &cfg.name,
            config_sha256: cfg.hash(),
            h: cfg.mesh.h,
            vertices: d.num_vertices(),
            lambda: solved.lambda,
            sup_error: solved.sup_error,
            report: &solved.report,
        },
    )?;
    let mut messages = Vec::new();
    if let Some(s) = &solved.report.stagnation {
        messages.push(s.clone());
    }
    let status = if solved.report.converged() {
        Status::Success
    } else {
        messages.push(stop_reason(&solved.report));
        Status::NonConvergence
    };
    Ok(Outcome {
        status,
        files: vec![field_path, report_path],
        messages,
    })
}
