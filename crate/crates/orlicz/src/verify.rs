//! Evaluating the estimates on a computed field.

use std::path::Path;

use orlicz_core::analysis::{
    bloch_integral, caccioppoli_check, harnack_quotient, monotonicity_check, random_bump_tests, sphere_oscillation,
    variational_residual, CaccioppoliParams, ResidualOutcome, VerificationReport,
};
use orlicz_core::function_spaces::{ScalarField, Shape, TriangulatedDomain};
use orlicz_core::phi::{Ball, PhiSpec, SpatialField};
use orlicz_core::Error;
use orlicz_core::regularization::{build_phi_lambda, TruncationParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::check::{check, CheckReport};
use crate::config::ScenarioConfig;
use crate::{io, output_path, Outcome, RunError, Status};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusEntry {
    pub r: f64,
    pub shift: f64,
    pub report: VerificationReport,
    /// `q/p` bound for the logarithmic exponent on `B_r`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_ratio: Option<f64>,
    pub failures: Vec<String>,
}

impl RadiusEntry {
    /// `lhs/rhs − 1` of the Caccioppoli inequality, negative when it holds.
    pub fn caccioppoli_margin(&self) -> Option<f64> {
        self.report.caccioppoli.map(|c| c.lhs / c.rhs - 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyOutput {
    pub scenario: String,
    pub config_sha256: String,
    pub h: f64,
    /// Set when the field minimizes a truncation `φ_λ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub entries: Vec<RadiusEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualOutcome>,
    pub passed: bool,
    pub failures: Vec<String>,
}

fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo * (step * i as f64).exp() }).collect()
}

fn log_exponent_center(phi: &PhiSpec) -> Option<[f64; 2]> {
    match phi {
        PhiSpec::VariableExponent { exponent: SpatialField::LogExponent { center, .. } } => Some(*center),
        _ => None,
    }
}

// log(u + shift) near the ball; vertices far outside keep the smallest
// value so the field stays finite
fn log_field(domain: &TriangulatedDomain, w: &ScalarField, center: [f64; 2], reach: f64) -> Result<ScalarField, String> {
    let near = |x: [f64; 2]| ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt() <= reach;
    let mut floor = f64::INFINITY;
    for (x, v) in domain.vertices().iter().zip(&w.values) {
        if near(*x) {
            if !(*v > 0.0) {
                return Err(format!("u + shift = {v:e} at {x:?}"));
            }
            floor = floor.min(*v);
        }
    }
    let values = domain
        .vertices()
        .iter()
        .zip(&w.values)
        .map(|(x, v)| if near(*x) { v.ln() } else { v.max(floor).ln() })
        .collect();
    ScalarField::new(domain, values).map_err(|e| e.to_string())
}

fn radius_entry(
    cfg: &ScenarioConfig,
    checked: &CheckReport,
    domain: &TriangulatedDomain,
    u: &ScalarField,
    r: f64,
) -> RadiusEntry {
    let spec = &cfg.verify;
    let c = spec.center;
    let shift = spec.shift.at(r);
    let mut report = VerificationReport {
        slack: spec.slack,
        ..VerificationReport::default()
    };
    let mut failures = Vec::new();

    match harnack_quotient(domain, u, c, r, shift) {
        Ok(q) => report.harnack_quotient = Some(q),
        Err(e) => failures.push(format!("harnack at r={r}: {e}")),
    }
    let w = u.map(|v| v + shift);
    match bloch_integral(domain, &w, &Ball::new(c, r), spec.bloch_exponent) {
        Ok(b) => report.bloch_integral = Some(b),
        Err(e) => failures.push(format!("bloch at r={r}: {e}")),
    }
    let p = spec.oscillation_p.unwrap_or(cfg.envelope.p);
    match log_field(domain, &w, c, 2.0 * r + 2.0 * domain.h()) {
        Ok(v) => match sphere_oscillation(domain, &v, c, r, p) {
            Ok(o) => {
                if !o.monotone_step_holds() {
                    failures.push(format!(
                        "oscillation step at r={r}: {:e} > {:e}",
                        o.monotone_lhs, o.osc_integral
                    ));
                }
                report.oscillation = Some(o);
            }
            Err(e @ Error::RefinementRequired(_)) => report.flags.push(format!("oscillation at r={r} skipped: {e}")),
            Err(e) => failures.push(format!("oscillation at r={r}: {e}")),
        },
        Err(e) => failures.push(format!("oscillation at r={r}: {e}")),
    }

    if let Some(cs) = spec.caccioppoli {
        match (&checked.envelope, cfg.envelope.q.is_finite()) {
            (_, false) => report.flags.push("caccioppoli skipped: q is infinite".into()),
            (None, _) => report.flags.push("caccioppoli skipped: growth conditions not certified".into()),
            (Some(env), true) => {
                let lo = u.min();
                if lo < 0.0 {
                    report.flags.push(format!("caccioppoli skipped: u takes the negative value {lo:e}"));
                } else {
                    let scale = ((u.max() + r) / r).max(1.0);
                    let grid = geometric_grid(1e-6, 1e3 * scale, cs.grid_nodes);
                    let ball = Ball::new(c, r);
                    let outcome = CaccioppoliParams::standard(&cfg.phi, env, domain, ball, cs.sigma, &grid)
                        .and_then(|params| caccioppoli_check(&cfg.phi, domain, u, &params));
                    match outcome {
                        Ok(o) => {
                            if o.infinite_psi > 0 {
                                report.flags.push(format!("{} triangles with infinite ψ dropped", o.infinite_psi));
                            }
                            if !o.holds(spec.slack.caccioppoli) {
                                failures.push(format!("caccioppoli at r={r}: {:e} > {:e}", o.lhs, o.rhs));
                            }
                            report.caccioppoli = Some(o);
                        }
                        Err(e) => failures.push(format!("caccioppoli at r={r}: {e}")),
                    }
                }
            }
        }
    }

    if spec.monotonicity {
        let disk = Shape::Disk { center: c, radius: r };
        match monotonicity_check(domain, u, &[disk]) {
            Ok(m) => {
                if let Some(wit) = &m.witness {
                    failures.push(format!(
                        "monotonicity at r={r}: u = {:e} at vertex {}, layer bound {:e}",
                        wit.value, wit.vertex, wit.bound
                    ));
                }
                report.monotonicity = Some(m);
            }
            Err(e) => failures.push(format!("monotonicity at r={r}: {e}")),
        }
    }

    let q_ratio = log_exponent_center(&cfg.phi)
        .filter(|x| *x == c && r < 1.0)
        .map(|_| {
            let l = std::f64::consts::LN_2 + (1.0 / r).ln();
            (1.0 + l) / l
        });
    RadiusEntry {
        r,
        shift,
        report,
        q_ratio,
        failures,
    }
}

/// Evaluates every configured estimate on `u`. A `lambda` means `u`
/// minimizes the truncation `φ_λ`, against which the residual is taken.
pub fn verify_field(
    cfg: &ScenarioConfig,
    domain: &TriangulatedDomain,
    u: &ScalarField,
    lambda: Option<f64>,
) -> Result<VerifyOutput, RunError> {
    cfg.validate()?;
    u.check(domain)?;
    let checked = check(cfg)?;
    let entries: Vec<RadiusEntry> = cfg
        .verify
        .radii
        .iter()
        .map(|r| radius_entry(cfg, &checked, domain, u, *r))
        .collect();
    let mut failures: Vec<String> = entries.iter().flat_map(|e| e.failures.clone()).collect();

    let mut residual = None;
    if cfg.verify.residual_tests > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.verify.residual_seed);
        let tests = random_bump_tests(domain, cfg.verify.residual_tests, &mut rng);
        let phi = match lambda {
            Some(l) => {
                let p = cfg
                    .schedule
                    .as_ref()
                    .and_then(|s| s.truncation_p)
                    .unwrap_or(cfg.envelope.p);
                build_phi_lambda(&cfg.phi, TruncationParams { lambda: l, p })?
            }
            None => cfg.phi.clone(),
        };
        if tests.is_empty() {
            failures.push("residual: the mesh is too coarse for compactly supported tests".into());
        } else {
            let out = variational_residual(&phi, domain, u, &tests)?;
            if !out.nonnegative(cfg.verify.residual_tolerance) {
                failures.push(format!(
                    "residual: {:e} relative to scale {:e}",
                    out.min_residual, out.scale
                ));
            }
            residual = Some(out);
        }
    }

    Ok(VerifyOutput {
        scenario: cfg.name.clone(),
        config_sha256: cfg.hash(),
        h: domain.h(),
        lambda,
        entries,
        residual,
        passed: failures.is_empty(),
        failures,
    })
}

/// Reads a field written by `solve`, writes `<name>.verify.json`; a failed
/// inequality gives exit code 4.
pub fn run_verify(cfg: &ScenarioConfig, field: &Path) -> Result<Outcome, RunError> {
    let file = io::read_field_csv(field)?;
    if let Some(h) = file.comment("config-sha256") {
        if h != cfg.hash() {
            log::warn!("{} was written for a different configuration", field.display());
        }
    }
    let lambda = match file.comment("lambda") {
        Some(s) => Some(io::parse_ext(s).ok_or_else(|| RunError::Config(format!("bad lambda comment {s:?}")))?),
        None => None,
    };
    let domain = TriangulatedDomain::from_descriptor(&cfg.mesh)?;
    let u = file.on(&domain)?;
    let out = verify_field(cfg, &domain, &u, lambda)?;
    let path = output_path(&cfg.out_dir, &cfg.name, "verify.json");
    io::write_json(&path, &out)?;
    Ok(Outcome {
        status: if out.passed {
            Status::Success
        } else {
            Status::VerificationFailure
        },
        files: vec![path],
        messages: out.failures,
    })
}
